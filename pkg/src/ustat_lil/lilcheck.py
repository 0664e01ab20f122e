"""
Finite-alphabet diagnostics for the bounded law of the iterated logarithm.

The necessary and sufficient conditions for ``limsup |S_n| / (n LL n)^{d/2}``
to be finite are complete degeneracy, the integrability of
``|h|^2 / (LL |h|)^d`` and, for every partition spec ``(K, J)``, a bound

    |h|_{K,J,u} <= D (LL u)^{(d - deg J)/2}

on the growth of the truncated norms in ``u``. On a finite alphabet the
truncated norms saturate, so every growth curve eventually decays and the
certificate reports the largest normalized value over a grid, ``D*``. The
countable-alphabet regime is probed with :func:`truncation_trend` along a
sequence of ever larger alphabets.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ShapeMismatch
from .indexing import PartitionSpec, enumerate_partition_specs
from .kernel import (
    CalibrationConstants,
    CanonicalCheck,
    DiscreteDistribution,
    Kernel,
    is_canonical,
    ll,
    ll_weighted_second_moment,
)
from .norms import norm_kju, saturation_level
from .rng import DEFAULT_SEED
from .simulate import UStatKind, lil_ratio_sequence

_logger = logging.getLogger(__name__)

GRID_POINTS = 24
TREND_TOL = 1e-6


@dataclass(frozen=True)
class GrowthPoint:
    u: float
    value: float
    normalized: float
    converged: bool


@dataclass(frozen=True)
class GrowthCurve:
    """Truncated norms of one spec along an increasing grid of levels ``u``."""

    spec: PartitionSpec
    points: Tuple[GrowthPoint, ...]
    saturation_u: float

    @property
    def values(self) -> np.ndarray:
        return np.array([pt.value for pt in self.points])

    @property
    def normalized(self) -> np.ndarray:
        return np.array([pt.normalized for pt in self.points])

    @property
    def maximum(self) -> float:
        return float(np.max(self.normalized, initial=0.0))

    @property
    def converged(self) -> bool:
        return all(pt.converged for pt in self.points)


@dataclass(frozen=True)
class LilCertificate:
    """Everything the LIL conditions ask of a kernel, with verdicts derived from it.

    ``envelope`` is the largest simulated LIL ratio ``C*`` when a simulation
    was requested, next to the growth maximum ``D*``.
    """

    canonical: CanonicalCheck
    symmetric: bool
    integrability_value: float
    curves: Tuple[GrowthCurve, ...]
    envelope: Optional[float]
    constants_used: CalibrationConstants

    @property
    def d_star(self) -> float:
        return max((c.maximum for c in self.curves), default=0.0)

    @property
    def d_star_spec(self) -> Optional[PartitionSpec]:
        if not self.curves:
            return None
        return max(self.curves, key=lambda c: c.maximum).spec

    @property
    def degenerate(self) -> bool:
        return self.canonical.canonical

    @property
    def integrable(self) -> bool:
        # a finite alphabet always gives a finite value
        return math.isfinite(self.integrability_value)

    @property
    def growth_bounded(self) -> bool:
        return math.isfinite(self.d_star)

    @property
    def holds(self) -> bool:
        return self.degenerate and self.integrable and self.growth_bounded

    @property
    def scope(self) -> str:
        """``"decoupled_only"`` for kernels that are not symmetric."""
        return "decoupled_and_undecoupled" if self.symmetric else "decoupled_only"


@dataclass(frozen=True)
class TruncationTrend:
    """Growth curves along a refinement sequence and the trend of their maxima."""

    curves: Tuple[GrowthCurve, ...]
    maxima: Tuple[float, ...]
    raw_maxima: Tuple[float, ...]
    trend: str


def default_u_grid(h: Kernel, points: int = GRID_POINTS) -> np.ndarray:
    """Log-spaced levels from 1 to four times the largest saturation level.

    Examples:
        >>> h = Kernel.from_function(lambda x: [-1.0, 3.0][x], 1, [0.75, 0.25])
        >>> grid = default_u_grid(h)
        >>> len(grid), float(grid[0]), round(float(grid[-1]), 12)
        (24, 1.0, 8.0)
    """
    top = max(saturation_level(h, spec) for spec in enumerate_partition_specs(h.d))
    return np.geomspace(1.0, 4.0 * top, points)


def _check_grid(u_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(u_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("u_grid must be a nonempty sequence")
    if not np.all(grid > 0.0) or np.any(np.diff(grid) <= 0.0):
        raise ValueError("u_grid must be positive and strictly increasing")
    return grid


def growth_curve(h: Kernel, spec: PartitionSpec, u_grid: Sequence[float], **options) -> GrowthCurve:
    """Normalized truncated norms ``|h|_{K,J,u} / (LL u)^{(d - deg J)/2}`` over ``u_grid``.

    Each level is warm-started from the certificate of the previous one, and
    the values are kept nondecreasing in ``u``.

    Examples:
        >>> h = Kernel.from_function(lambda x: [-1.0, 3.0][x], 1, [0.75, 0.25])
        >>> curve = growth_curve(h, PartitionSpec.of(1, [], [{1}]), [1.0, 2.0])
        >>> [round(v, 12) for v in curve.normalized ** 2]
        [2.25, 3.0]
    """
    grid = _check_grid(u_grid)
    exponent = (h.d - spec.deg) / 2.0
    points = []
    warm = None
    best = 0.0
    for u in grid:
        result = norm_kju(h, spec, float(u), warm=warm, **options)
        warm = result.certificate
        best = max(best, result.value)
        points.append(GrowthPoint(float(u), best, best / ll(float(u)) ** exponent, result.converged))
    return GrowthCurve(spec, tuple(points), saturation_level(h, spec))


def _all_curves(h: Kernel, grid: np.ndarray, workers: int, options) -> Tuple[GrowthCurve, ...]:
    specs = enumerate_partition_specs(h.d)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return tuple(pool.map(lambda s: growth_curve(h, s, grid, **options), specs))
    return tuple(growth_curve(h, s, grid, **options) for s in specs)


def lil_certificate(
    h: Kernel,
    u_grid: Optional[Sequence[float]] = None,
    consts: Optional[CalibrationConstants] = None,
    *,
    n_max: Optional[int] = None,
    reps: int = 32,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
    **options,
) -> LilCertificate:
    """Assemble canonicality, symmetry, integrability and every growth curve of ``h``.

    :param h: the kernel
    :param u_grid: truncation levels, :func:`default_u_grid` when omitted
    :param consts: constants echoed in the certificate
    :param n_max: when given, also simulate decoupled LIL ratios up to
                  ``n = 2^n_max`` and record their envelope
    :param reps: replications of the simulation
    :param seed: master seed of the solver restarts and of the simulation
    :param workers: threads over the specs (and replications)

    Examples:
        >>> cert = lil_certificate(Kernel.zeros(2, [0.5, 0.5]), [1.0, 4.0])
        >>> cert.holds, cert.d_star
        (True, 0.0)
    """
    grid = _check_grid(default_u_grid(h) if u_grid is None else u_grid)
    consts = consts or CalibrationConstants()
    curves = _all_curves(h, grid, workers, dict(options, seed=seed))
    envelope = None
    if n_max is not None:
        envelope = lil_ratio_sequence(h, UStatKind.DECOUPLED, n_max, reps, seed, workers).envelope
    cert = LilCertificate(
        is_canonical(h), h.is_symmetric(), ll_weighted_second_moment(h), curves, envelope, consts
    )
    _logger.info("LIL certificate: D* = %.6g, canonical %s, %s", cert.d_star, cert.degenerate, cert.scope)
    if not all(c.converged for c in curves):
        _logger.warning("some truncated norms did not converge; D* is a lower estimate")
    return cert


def _trend(maxima: Sequence[float]) -> str:
    if len(maxima) < 2:
        return "stable"
    last, prev = maxima[-1], maxima[-2]
    if abs(last - prev) <= TREND_TOL * max(abs(last), abs(prev), 1.0):
        return "stable"
    return "growing" if last > prev else "shrinking"


def truncation_trend(
    seq: Sequence[Kernel], spec: PartitionSpec, u_grid: Optional[Sequence[float]] = None, **options
) -> TruncationTrend:
    """Growth curves of one spec along a sequence of refining alphabets.

    The trend compares the normalized maxima of the last two kernels:
    ``"stable"`` within a relative 1e-6, else ``"growing"`` or ``"shrinking"``.
    The shared grid defaults to that of the last kernel.

    :raises ShapeMismatch: when the kernels differ in order or value dimension,
                           or the alphabets shrink
    """
    if not seq:
        raise ValueError("need at least one kernel")
    first = seq[0]
    for prev, h in zip(seq, seq[1:]):
        if (h.d, h.q) != (first.d, first.q):
            raise ShapeMismatch(f"kernel of order {h.d} and dimension {h.q} in a sequence of ({first.d}, {first.q})")
        if h.m < prev.m:
            raise ShapeMismatch(f"alphabet shrinks from {prev.m} to {h.m}")
    if spec.d != first.d:
        raise ShapeMismatch(f"partition spec of order {spec.d} for kernels of order {first.d}")
    grid = _check_grid(default_u_grid(seq[-1]) if u_grid is None else u_grid)
    curves = tuple(growth_curve(h, spec, grid, **options) for h in seq)
    maxima = tuple(c.maximum for c in curves)
    raw = tuple(float(c.values[-1]) for c in curves)
    trend = _trend(maxima)
    _logger.debug("truncation trend %s over %d kernels: %s", spec.label(), len(seq), trend)
    return TruncationTrend(curves, maxima, raw, trend)


def heavy_tail_kernel(m: int, d: int = 1) -> Kernel:
    """Symmetric canonical kernel with a slowly diverging second moment.

    Symbols ``2j`` and ``2j + 1`` take the values ``+v_k`` and ``-v_k`` for
    ``k = j + 3``, each with probability proportional to ``2^-k``, where
    ``v_k^2 = 2^k / (k log k)``. Growing ``m`` adds mass further out: ``E h^2``
    grows like ``log log m`` while ``E h^2 / LL|h|`` stays bounded. Orders
    ``d > 1`` take the tensor power of the one-variable kernel.

    Examples:
        >>> h = heavy_tail_kernel(4)
        >>> h.m, h.d
        (4, 1)
        >>> abs(float(h.expect({1}).ravel()[0])) < 1e-15
        True
    """
    if m < 2 or m % 2:
        raise ValueError("heavy-tail alphabets have an even size of at least 2")
    if d < 1:
        raise ValueError("order d must be at least 1")
    k = np.arange(m) // 2 + 3
    probs = 2.0 ** (-k.astype(float))
    f = np.where(np.arange(m) % 2 == 0, 1.0, -1.0) * np.sqrt(2.0**k / (k * np.log(k)))
    values = f
    for _ in range(d - 1):
        values = np.multiply.outer(values, f)
    return Kernel(values[..., None], DiscreteDistribution(probs / probs.sum()), symmetric=True)


def heavy_tail_sequence(sizes: Sequence[int], d: int = 1) -> List[Kernel]:
    """:func:`heavy_tail_kernel` for each alphabet size, in order."""
    return [heavy_tail_kernel(m, d) for m in sizes]


if __name__ == "__main__":
    import doctest

    doctest.testmod()
