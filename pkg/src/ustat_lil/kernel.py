"""
Kernels on a finite alphabet and the functionals computed from them.

A :class:`Kernel` is a dense table ``h: {0..m-1}^d -> R^q`` together with the
law :class:`DiscreteDistribution` of each argument. The Hilbert space is
``R^q`` with the Euclidean inner product. Coordinates are 1-based in the
public API (coordinate ``k`` lives on tensor axis ``k - 1``); the last axis of
``Kernel.values`` is the value axis of length ``q``.

Partial expectations contract the tensor against the law. The Hoeffding
projection is computed by inclusion-exclusion over the ``2**d`` subsets, each
term reusing cached partial expectations. Alphabet cells of probability zero
are allowed; they never occur, so they are excluded from every supremum.

Kernel specification files are JSON documents::

    {"format": 1, "d": 2, "m": 2, "q": 1, "probs": [0.5, 0.5],
     "values": [1.0, -1.0, -1.0, 1.0], "symmetric": true}

``values`` is the row-major flattening over ``(x_1, ..., x_d)`` then the value
coordinate. Floats are written with ``repr`` precision so that load, save and
load again gives identical tensors.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, NamedTuple, Sequence, Union

import numpy as np

from .errors import ALPHABET_CAP, ORDER_CAP, SpecFormatError, check_cap
from .indexing import CoordSet, ground

_logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
E_E = math.exp(math.e)
DEFAULT_TOL = 1e-10
PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Law of a single argument on ``{0..m-1}``.

    Examples:
        >>> law = DiscreteDistribution.uniform(4)
        >>> law.m, law.p_min
        (4, 0.25)
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if probs.size < 1:
            raise ValueError("a distribution needs at least one cell")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0.0):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, m: int) -> "DiscreteDistribution":
        return cls(np.full(m, 1.0 / m))

    @property
    def m(self) -> int:
        return int(self.probs.size)

    @property
    def support(self) -> np.ndarray:
        """Boolean mask of the cells with positive probability."""
        return self.probs > 0.0

    @property
    def p_min(self) -> float:
        """Smallest positive cell probability."""
        return float(self.probs[self.support].min())


def product_law(probs: np.ndarray, d: int) -> np.ndarray:
    """The product law on ``{0..m-1}^d`` as a dense ``(m,)*d`` tensor.

    Examples:
        >>> product_law(np.array([0.25, 0.75]), 2).tolist()
        [[0.0625, 0.1875], [0.1875, 0.5625]]
    """
    if d == 0:
        return np.ones(())
    return reduce(np.multiply.outer, [np.asarray(probs, dtype=float)] * d)


def _axis_weights(probs: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = probs.size
    return probs.reshape(shape)


def mean_over(values: np.ndarray, probs: np.ndarray, axes: Iterable[int], keepdims: bool = False) -> np.ndarray:
    """Integrate ``values`` against ``probs`` along the tensor ``axes``."""
    out = values
    for axis in sorted(set(axes), reverse=True):
        out = np.sum(out * _axis_weights(probs, axis, out.ndim), axis=axis, keepdims=keepdims)
    return out


@dataclass(frozen=True, eq=False)
class Kernel:
    """An order-``d`` kernel ``h: {0..m-1}^d -> R^q`` with its sampling law.

    :param values: tensor of shape ``(m,)*d + (q,)``
    :param law: distribution of every argument
    :param symmetric: claim of symmetry, verified at construction

    Examples:
        >>> h = Kernel.from_function(lambda x, y: (-1.0) ** (x + y), 2, [0.5, 0.5])
        >>> h.d, h.m, h.q
        (2, 2, 1)
        >>> second_moment(h)
        1.0
    """

    values: np.ndarray
    law: DiscreteDistribution
    symmetric: bool = False
    _cache: Dict[CoordSet, np.ndarray] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim < 2:
            raise ValueError("values need at least one argument axis and the value axis")
        d = values.ndim - 1
        if values.shape[-1] < 1:
            raise ValueError("value dimension q must be at least 1")
        if any(s != self.law.m for s in values.shape[:-1]):
            raise ValueError(f"argument axes {values.shape[:-1]} do not match alphabet size {self.law.m}")
        if not np.all(np.isfinite(values)):
            raise ValueError("kernel values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.symmetric and not self.is_symmetric():
            raise ValueError(f"kernel of order {d} is flagged symmetric but is not")

    @classmethod
    def from_function(
        cls,
        func: Callable[..., Any],
        d: int,
        probs: Sequence[float],
        q: int = 1,
        symmetric: bool = False,
    ) -> "Kernel":
        """Tabulate ``func(x_1, ..., x_d)`` (scalar or length-``q`` vector)."""
        law = DiscreteDistribution(np.asarray(probs, dtype=float))
        values = np.empty((law.m,) * d + (q,))
        for x in itertools.product(range(law.m), repeat=d):
            values[x] = np.reshape(np.asarray(func(*x), dtype=float), q)
        return cls(values, law, symmetric)

    @classmethod
    def zeros(cls, d: int, probs: Sequence[float], q: int = 1) -> "Kernel":
        law = DiscreteDistribution(np.asarray(probs, dtype=float))
        return cls(np.zeros((law.m,) * d + (q,)), law, symmetric=True)

    @property
    def d(self) -> int:
        return self.values.ndim - 1

    @property
    def m(self) -> int:
        return self.law.m

    @property
    def q(self) -> int:
        return int(self.values.shape[-1])

    @property
    def probs(self) -> np.ndarray:
        return self.law.probs

    @property
    def support_mask(self) -> np.ndarray:
        """Boolean ``(m,)*d`` mask of the argument cells with positive probability."""
        return product_law(self.probs, self.d) > 0.0

    def norms(self) -> np.ndarray:
        """Pointwise Euclidean norm ``|h(x)|`` as an ``(m,)*d`` tensor."""
        return np.linalg.norm(self.values, axis=-1)

    def expect(self, coords: CoordSet) -> np.ndarray:
        """``E_I h`` with the contracted axes kept as length-1 axes (cached)."""
        coords = frozenset(coords)
        cached = self._cache.get(coords)
        if cached is None:
            if not coords:
                cached = self.values
            else:
                last = max(coords)
                cached = mean_over(self.expect(coords - {last}), self.probs, [last - 1], keepdims=True)
            self._cache[coords] = cached
        return cached

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """Exact tensor permutation check within ``tol``."""
        for perm in itertools.permutations(range(self.d)):
            if np.max(np.abs(self.values - np.transpose(self.values, perm + (self.d,))), initial=0.0) > tol:
                return False
        return True

    def symmetrize(self) -> "Kernel":
        """Average over all coordinate permutations."""
        perms = list(itertools.permutations(range(self.d)))
        total = sum(np.transpose(self.values, p + (self.d,)) for p in perms)
        return Kernel(total / len(perms), self.law, symmetric=True)

    def permute_coordinates(self, perm: Sequence[int]) -> "Kernel":
        """Kernel ``x -> h(x_{perm(1)}, ..., x_{perm(d)})`` for a 1-based ``perm``."""
        axes = tuple(p - 1 for p in perm)
        if sorted(axes) != list(range(self.d)):
            raise ValueError(f"{perm} is not a permutation of 1..{self.d}")
        return Kernel(np.transpose(self.values, axes + (self.d,)), self.law, self.symmetric)

    def scaled(self, alpha: float) -> "Kernel":
        return Kernel(alpha * self.values, self.law, self.symmetric)

    def restrict(self, m: int) -> "Kernel":
        """Restriction to the first ``m`` symbols with the renormalized law."""
        if not 1 <= m <= self.m:
            raise ValueError(f"cannot restrict an alphabet of size {self.m} to {m}")
        mass = self.probs[:m].sum()
        if mass <= 0.0:
            raise ValueError("restricted alphabet carries no probability")
        cut = tuple(slice(0, m) for _ in range(self.d))
        return Kernel(self.values[cut], DiscreteDistribution(self.probs[:m] / mass), self.symmetric)

    def __add__(self, other: "Kernel") -> "Kernel":
        return Kernel(self.values + other.values, self.law)


@dataclass(frozen=True)
class CalibrationConstants:
    """Numerical stand-ins for the order-dependent constants of the inequalities.

    ``L_d`` multiplies the moment and tail bounds, ``c_d`` is the matching
    lower constant and ``eta_d`` the splitting level in ``(0, 1)``.

    Examples:
        >>> CalibrationConstants(L_d=2.0).as_dict()
        {'L_d': 2.0, 'c_d': 1.0, 'eta_d': 0.5}
    """

    L_d: float = 1.0
    c_d: float = 1.0
    eta_d: float = 0.5

    def __post_init__(self) -> None:
        if not (self.L_d > 0 and self.c_d > 0):
            raise ValueError("L_d and c_d must be positive")
        if not 0.0 < self.eta_d < 1.0:
            raise ValueError("eta_d must lie in (0, 1)")

    def as_dict(self) -> Dict[str, float]:
        return {"L_d": self.L_d, "c_d": self.c_d, "eta_d": self.eta_d}


def random_kernel(
    rng: np.random.Generator,
    d: int,
    m: int,
    q: int = 1,
    canonical: bool = False,
    symmetric: bool = False,
    uniform: bool = False,
) -> Kernel:
    """Kernel with standard normal entries and a random (or uniform) law."""
    probs = np.full(m, 1.0 / m) if uniform else rng.dirichlet(np.ones(m))
    # exact renormalization keeps the sum inside PROB_TOL
    probs = probs / probs.sum()
    h = Kernel(rng.standard_normal((m,) * d + (q,)), DiscreteDistribution(probs))
    if symmetric:
        h = h.symmetrize()
    if canonical:
        h = hoeffding_project(h)
    return h


def partial_expectation(h: Kernel, coords: Iterable[int]) -> Union[Kernel, np.ndarray]:
    """``E_I h``, a kernel in the remaining ``d - |I|`` variables.

    When ``I = {1..d}`` the result is the mean vector in ``R^q``.

    Examples:
        >>> h = Kernel.from_function(lambda x: x, 1, [0.5, 0.5])
        >>> partial_expectation(h, {1})
        array([0.5])
    """
    coords = frozenset(coords)
    if not coords <= ground(h.d):
        raise ValueError(f"coordinates {sorted(coords)} not within 1..{h.d}")
    reduced = np.squeeze(h.expect(coords), axis=tuple(c - 1 for c in sorted(coords)))
    if len(coords) == h.d:
        return np.array(reduced, copy=True)
    return Kernel(reduced, h.law)


def hoeffding_project(h: Kernel) -> Kernel:
    """Hoeffding projection ``pi_d h = (delta_x1 - P) x ... x (delta_xd - P) h``.

    Expanded as ``sum over I of (-1)^(d-|I|) (E_{I^c} h)(x_I)``.

    Examples:
        >>> h = Kernel.from_function(lambda x: x, 1, [0.5, 0.5])
        >>> hoeffding_project(h).values.ravel().tolist()
        [-0.5, 0.5]
    """
    d = h.d
    out = np.zeros_like(h.values)
    for outer in itertools.chain.from_iterable(
        itertools.combinations(range(1, d + 1), k) for k in range(d + 1)
    ):
        sign = -1.0 if len(outer) % 2 else 1.0
        out = out + sign * h.expect(frozenset(outer))
    return Kernel(out, h.law, h.symmetric)


class CanonicalCheck(NamedTuple):
    canonical: bool
    violation: float


def is_canonical(h: Kernel, tol: float = DEFAULT_TOL) -> CanonicalCheck:
    """Check ``E_j h = 0`` for every coordinate ``j`` within ``tol``.

    The violation is the largest ``|E_j h(x)|`` over coordinates and over the
    remaining arguments of positive probability.

    Examples:
        >>> is_canonical(Kernel.from_function(lambda x: 1.0, 1, [0.5, 0.5]))
        CanonicalCheck(canonical=False, violation=1.0)
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    support = h.support_mask
    violation = 0.0
    for j in range(1, h.d + 1):
        mean = np.linalg.norm(h.expect(frozenset({j})), axis=-1)
        mask = np.any(support, axis=j - 1, keepdims=True)
        violation = max(violation, float(np.max(np.where(mask, mean, 0.0), initial=0.0)))
    return CanonicalCheck(violation <= tol, violation)


def ll(x: float) -> float:
    """Guarded iterated logarithm ``loglog(max(x, e^e))``, always at least 1.

    Examples:
        >>> ll(0.0)
        1.0
        >>> ll(math.exp(math.exp(2.0)))
        2.0
    """
    if x < 0:
        raise ValueError("LL is defined for nonnegative arguments")
    return math.log(math.log(max(x, E_E)))


def ll_array(x: np.ndarray) -> np.ndarray:
    """Vectorized :func:`ll`."""
    return np.log(np.log(np.maximum(np.asarray(x, dtype=float), E_E)))


def second_moment(h: Kernel) -> float:
    """``E|h(X)|^2`` under the product law."""
    return float(np.sum(product_law(h.probs, h.d) * np.sum(h.values**2, axis=-1)))


def ll_weighted_second_moment(h: Kernel) -> float:
    """``E |h|^2 / (LL |h|)^d`` by exact summation.

    Examples:
        >>> h = Kernel.from_function(lambda x: 3.0 * x, 1, [0.5, 0.5])
        >>> ll_weighted_second_moment(h)
        4.5
    """
    sq = np.sum(h.values**2, axis=-1)
    weight = ll_array(np.sqrt(sq)) ** h.d
    return float(np.sum(product_law(h.probs, h.d) * sq / weight))


def truncated_second_moment(h: Kernel, u: float) -> float:
    """``E min(|h|^2, u)`` by exact summation.

    Examples:
        >>> h = Kernel.from_function(lambda x: [1.0, 3.0][x], 1, [0.5, 0.5])
        >>> truncated_second_moment(h, 4.0)
        2.5
    """
    if u <= 0:
        raise ValueError("truncation level u must be positive")
    sq = np.sum(h.values**2, axis=-1)
    return float(np.sum(product_law(h.probs, h.d) * np.minimum(sq, u)))


def conditional_sup_norm(h: Kernel, coords: Iterable[int]) -> float:
    """``sup over x_{I^c} of sqrt(E_I |h(x_{I^c}, X_I)|^2)``.

    Only outer arguments of positive probability take part in the supremum.
    For ``I = {1..d}`` this is ``sqrt(E|h|^2)``; for ``I`` empty, the plain
    sup norm.

    Examples:
        >>> h = Kernel.from_function(lambda x, y: (-1.0) ** (x + y), 2, [0.5, 0.5])
        >>> conditional_sup_norm(h, {2})
        1.0
    """
    coords = frozenset(coords)
    if not coords <= ground(h.d):
        raise ValueError(f"coordinates {sorted(coords)} not within 1..{h.d}")
    sq = np.sum(h.values**2, axis=-1)
    inner = mean_over(sq, h.probs, [c - 1 for c in coords], keepdims=True)
    mask = h.support_mask
    for c in coords:
        mask = np.any(mask, axis=c - 1, keepdims=True)
    return float(np.sqrt(np.max(np.where(mask, inner, 0.0), initial=0.0)))


# ---- kernel specification files ----


def kernel_to_dict(h: Kernel) -> Dict[str, Any]:
    return {
        "format": FORMAT_VERSION,
        "d": h.d,
        "m": h.m,
        "q": h.q,
        "probs": [float(p) for p in h.probs],
        "values": [float(v) for v in h.values.reshape(-1)],
        "symmetric": bool(h.symmetric),
    }


def _field(doc: Dict[str, Any], name: str, kind: type) -> Any:
    if name not in doc:
        raise SpecFormatError(name, "missing")
    value = doc[name]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise SpecFormatError(name, f"expected an integer, got {value!r}")
    if kind is list and not isinstance(value, list):
        raise SpecFormatError(name, "expected an array")
    return value


def _float_array(doc: Dict[str, Any], name: str, size: int) -> np.ndarray:
    raw = _field(doc, name, list)
    if len(raw) != size:
        raise SpecFormatError(name, f"expected {size} entries, got {len(raw)}")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        raise SpecFormatError(name, "entries must be numbers")
    arr = np.array(raw, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise SpecFormatError(name, "entries must be finite")
    return arr


def kernel_from_dict(doc: Dict[str, Any]) -> Kernel:
    """Validate and build a kernel from a specification document."""
    if not isinstance(doc, dict):
        raise SpecFormatError("format", "document must be a JSON object")
    if doc.get("format") != FORMAT_VERSION:
        raise SpecFormatError("format", f"expected {FORMAT_VERSION}, got {doc.get('format')!r}")
    d = _field(doc, "d", int)
    m = _field(doc, "m", int)
    q = _field(doc, "q", int)
    if d < 1:
        raise SpecFormatError("d", "order must be at least 1")
    if m < 1:
        raise SpecFormatError("m", "alphabet size must be at least 1")
    if q < 1:
        raise SpecFormatError("q", "value dimension must be at least 1")
    check_cap("order", d, ORDER_CAP)
    check_cap("alphabet", m, ALPHABET_CAP)
    probs = _float_array(doc, "probs", m)
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > PROB_TOL:
        raise SpecFormatError("probs", "must be nonnegative and sum to 1")
    values = _float_array(doc, "values", m**d * q).reshape((m,) * d + (q,))
    symmetric = doc.get("symmetric", False)
    if not isinstance(symmetric, bool):
        raise SpecFormatError("symmetric", "expected true or false")
    try:
        return Kernel(values, DiscreteDistribution(probs), symmetric)
    except ValueError as err:
        raise SpecFormatError("symmetric" if symmetric else "values", str(err)) from err


def save_kernel(h: Kernel, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(kernel_to_dict(h), indent=1) + "\n", encoding="utf-8")


def load_kernel(path: Union[str, Path]) -> Kernel:
    """Read a kernel specification file.

    :raises SpecFormatError: when the document does not parse or a field is invalid
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise SpecFormatError("document", f"not valid JSON ({err.msg} at line {err.lineno})") from err
    h = kernel_from_dict(doc)
    _logger.debug("loaded kernel d=%d m=%d q=%d from %s", h.d, h.m, h.q, path)
    return h


if __name__ == "__main__":
    import doctest

    doctest.testmod()
