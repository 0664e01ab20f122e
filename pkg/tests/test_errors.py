import pytest

from ustat_lil.errors import (
    GuardViolation,
    ShapeMismatch,
    SpecFormatError,
    UStatError,
    check_cap,
    enforce,
)


def test_error_hierarchy():
    assert issubclass(SpecFormatError, ValueError)
    assert issubclass(ShapeMismatch, ValueError)
    assert issubclass(GuardViolation, UStatError)
    assert not issubclass(GuardViolation, ValueError)


def test_check_cap_boundary():
    check_cap("cells", 16, 16)
    with pytest.raises(GuardViolation) as info:
        check_cap("cells", 17, 16)
    assert (info.value.requested, info.value.cap) == (17, 16)


def test_enforce_sees_defaults_and_keywords():
    seen = []

    def record(a, b, **_):
        seen.append((a, b))
        check_cap("b", b, 10)

    @enforce(record)
    def add(a, b=3):
        """Sum of two numbers."""
        return a + b

    assert add(1) == 4
    assert add(1, b=5) == 6
    assert seen == [(1, 3), (1, 5)]
    with pytest.raises(GuardViolation):
        add(1, b=11)
    assert add.__doc__ == "Sum of two numbers."
    assert add.__name__ == "add"
