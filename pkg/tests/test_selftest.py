import pytest

from ustat_lil.selftest import CHECKS, SelfTestFailure, check, run_selftest


def test_quick_checks_pass():
    records = run_selftest(names=["combinatorics", "truncated-example", "chaos-anchors"])
    assert [r.name for r in records] == ["combinatorics", "truncated-example", "chaos-anchors"]
    assert all(r.passed for r in records)
    assert all(r.detail for r in records)


def test_unknown_check():
    with pytest.raises(ValueError):
        run_selftest(names=["no-such-check"])


def test_failure_is_recorded():
    @check("always-fails")
    def _fails(seed):
        raise SelfTestFailure(f"seed {seed}")

    try:
        (record,) = run_selftest(seed=3, names=["always-fails"])
        assert not record.passed
        assert record.detail == "seed 3"
    finally:
        del CHECKS["always-fails"]


@pytest.mark.slow
def test_full_suite_passes():
    assert all(r.passed for r in run_selftest())
