"""
Exceptions and guards shared by the whole package.

Library calls raise plain ``ValueError`` for violated preconditions. The
classes below mark the failures the command line front end maps to distinct
exit codes: malformed kernel files (:class:`SpecFormatError`), requests that
would enumerate or allocate beyond the documented caps
(:class:`GuardViolation`) and incompatible kernel sequences
(:class:`ShapeMismatch`).

Guards are attached with :func:`enforce`, a signature-preserving decorator,
so that introspection (Sphinx, doctest, ``inspect``) still sees the wrapped
function's own signature.
"""

import inspect
from typing import Any, Callable

from decorator import decorator

#: Largest number of configurations any exact enumeration may visit.
ENUMERATION_CAP: int = 2**24

#: Largest dyadic exponent accepted by the LIL path simulator.
DYADIC_CAP: int = 20

#: Largest alphabet size and kernel order accepted from kernel files.
ALPHABET_CAP: int = 16
ORDER_CAP: int = 4


class UStatError(Exception):
    """Base class of all errors raised on purpose by ustat-lil."""


class SpecFormatError(UStatError, ValueError):
    """A kernel specification document is malformed.

    Examples:
        >>> err = SpecFormatError("probs", "must sum to 1")
        >>> err.field
        'probs'
        >>> str(err)
        "invalid field 'probs': must sum to 1"
    """

    def __init__(self, field: str, reason: str) -> None:
        super().__init__(f"invalid field {field!r}: {reason}")
        self.field = field
        self.reason = reason


class GuardViolation(UStatError):
    """A request exceeds one of the documented size caps.

    Examples:
        >>> err = GuardViolation("enumeration", 2**30, 2**24)
        >>> err.limit
        'enumeration'
    """

    def __init__(self, limit: str, requested: int, cap: int) -> None:
        super().__init__(f"{limit} limit exceeded: requested {requested}, cap {cap}")
        self.limit = limit
        self.requested = requested
        self.cap = cap


class ShapeMismatch(UStatError, ValueError):
    """Kernels in a sequence do not share order or value dimension."""


def check_cap(limit: str, requested: int, cap: int) -> None:
    """Raise :class:`GuardViolation` when ``requested`` exceeds ``cap``.

    Examples:
        >>> check_cap("cells", 10, 16)
        >>> check_cap("cells", 17, 16)
        Traceback (most recent call last):
        ...
        ustat_lil.errors.GuardViolation: cells limit exceeded: requested 17, cap 16
    """
    if requested > cap:
        raise GuardViolation(limit, requested, cap)


def enforce(check: Callable[..., None]) -> Callable[..., Any]:
    """Build a decorator running ``check`` on the bound call arguments.

    ``check`` receives every parameter of the decorated function by name,
    defaults applied, and raises to veto the call.

    :param check: validation callback taking the decorated function's
                  parameters as keyword arguments

    :type check: Callable[..., None]

    :return: a signature-preserving decorator

    Examples:
        >>> def small(n, **_):
        ...     check_cap("n", n, 3)
        >>> @enforce(small)
        ... def square(n, scale=1):
        ...     return scale * n * n
        >>> square(2)
        4
        >>> square(5)
        Traceback (most recent call last):
        ...
        ustat_lil.errors.GuardViolation: n limit exceeded: requested 5, cap 3
    """

    @decorator
    def _enforce(func, *args, **kwargs):
        bound = inspect.signature(func).bind(*args, **kwargs)
        bound.apply_defaults()
        check(**bound.arguments)
        return func(*args, **kwargs)

    return _enforce
