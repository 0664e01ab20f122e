"""
Exact enumeration and seeded Monte Carlo for U-statistics.

Four sums are supported, named by :class:`UStatKind`:

* ``decoupled``: ``sum over |i| <= n of h(X^(1)_{i_1}, ..., X^(d)_{i_d})``
  with ``d`` independent sample columns;
* ``undecoupled``: ``sum over pairwise distinct i of h(X_{i_1}, ..., X_{i_d})``
  with a single column;
* their randomized versions, where each term is multiplied by
  ``eps^(1)_{i_1} ... eps^(d)_{i_d}`` (decoupled) or ``eps_{i_1} ... eps_{i_d}``
  (undecoupled, one shared sign column).

All sums share one vectorized evaluation. For a block ``B`` of coordinates
the weights ``W_B[x_B] = sum_i prod_{k in B} eps_{k,i} 1[X_{k,i} = x_k]``
collect the terms whose indices are equal on ``B``; contracting ``h`` with
the weights of the blocks of a partition gives the sum over indices constant
on those blocks. The full grid is the all-singletons partition and the
off-diagonal sum follows by Moebius inversion over all partitions.

Samples are drawn in dyadic levels: level 0 holds index 1 and level ``k``
holds indices ``2^(k-1)+1 .. 2^k``. Each ``(rep, level, column)`` has its own
counter-based stream, so a sample of size ``n`` is a prefix of every larger
one and nothing depends on thread scheduling.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from .errors import DYADIC_CAP, ENUMERATION_CAP, check_cap
from .indexing import CoordSet, all_subsets, enumerate_partitions, ground, mobius_weight
from .kernel import Kernel, ll
from .rng import DEFAULT_SEED, rademacher, stream

_logger = logging.getLogger(__name__)

Z_95: float = float(norm.ppf(0.975))
CHUNK = 2**14
REP_CHUNK = 256
DIVERGENCE_SLOPE = 0.25
_REL_SLACK = 1e-12


class UStatKind(str, Enum):
    UNDECOUPLED = "undecoupled"
    DECOUPLED = "decoupled"
    RANDOMIZED_UNDECOUPLED = "randomized_undecoupled"
    RANDOMIZED_DECOUPLED = "randomized_decoupled"

    @property
    def decoupled(self) -> bool:
        return self in (UStatKind.DECOUPLED, UStatKind.RANDOMIZED_DECOUPLED)

    @property
    def randomized(self) -> bool:
        return self in (UStatKind.RANDOMIZED_UNDECOUPLED, UStatKind.RANDOMIZED_DECOUPLED)


@dataclass(frozen=True)
class SampleConfig:
    """Sample size, replication count, master seed and kind of sum.

    Examples:
        >>> SampleConfig(4).kind.value
        'decoupled'
    """

    n: int
    reps: int = 256
    seed: int = DEFAULT_SEED
    kind: UStatKind = UStatKind.DECOUPLED

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("sample size n must be at least 1")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        object.__setattr__(self, "kind", UStatKind(self.kind))


@dataclass(frozen=True)
class SimReport:
    estimates: Dict[str, float]
    ci_half_widths: Dict[str, float]
    reps_used: int
    seed: int
    intervals: Dict[str, Tuple[float, float]] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Sample:
    """One replication: ``columns[k, i]`` is the value of slot ``k`` at index ``i + 1``."""

    columns: np.ndarray
    signs: Optional[np.ndarray]


# ---- drawing ----


def level_size(level: int) -> int:
    """Number of indices in dyadic level ``level``."""
    return 1 if level == 0 else 2 ** (level - 1)


def _draw_level(h: Kernel, kind: UStatKind, seed: int, rep: int, level: int) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    size = level_size(level)
    slots = h.d if kind.decoupled else 1
    columns = np.empty((slots, size), dtype=np.int64)
    signs = np.empty((slots, size))
    for slot in range(slots):
        gen = stream(seed, rep, level, slot)
        columns[slot] = gen.choice(h.m, size=size, p=h.probs)
        signs[slot] = rademacher(gen, (size,))
    if not kind.decoupled:
        columns = np.repeat(columns, h.d, axis=0)
        signs = np.repeat(signs, h.d, axis=0)
    return columns, signs if kind.randomized else None


def draw_sample(h: Kernel, config: SampleConfig, rep: int) -> Sample:
    """Replication ``rep`` of ``config``, as ``(d, n)`` arrays.

    Undecoupled kinds repeat their single column ``d`` times.

    Examples:
        >>> h = Kernel.from_function(lambda x, y: x * y, 2, [0.5, 0.5])
        >>> small = draw_sample(h, SampleConfig(3), rep=0)
        >>> large = draw_sample(h, SampleConfig(16), rep=0)
        >>> bool((large.columns[:, :3] == small.columns).all())
        True
    """
    levels = [_draw_level(h, config.kind, config.seed, rep, k) for k in range((config.n - 1).bit_length() + 1)]
    columns = np.concatenate([c for c, _ in levels], axis=1)[:, : config.n]
    signs = None
    if config.kind.randomized:
        signs = np.concatenate([s for _, s in levels], axis=1)[:, : config.n]
    return Sample(columns, signs)


def _draw_batch(h: Kernel, config: SampleConfig, reps: Sequence[int]) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    samples = [draw_sample(h, config, rep) for rep in reps]
    columns = np.stack([s.columns for s in samples])
    signs = np.stack([s.signs for s in samples]) if config.kind.randomized else None
    return columns, signs


# ---- evaluation ----


def _subset_weights(
    m: int, columns: np.ndarray, signs: Optional[np.ndarray], subsets: Sequence[CoordSet]
) -> Dict[CoordSet, np.ndarray]:
    """Block weights ``W_B`` of shape ``(R,) + (m,)*|B|`` for batched ``(R, d, n)`` draws."""
    reps, _, n = columns.shape
    out = {}
    for block in subsets:
        axes = [c - 1 for c in sorted(block)]
        cells = m ** len(axes)
        idx = np.zeros((reps, n), dtype=np.int64)
        weight = np.ones((reps, n))
        for a in axes:
            idx = idx * m + columns[:, a, :]
            if signs is not None:
                weight = weight * signs[:, a, :]
        flat = (idx + cells * np.arange(reps)[:, None]).ravel()
        counts = np.bincount(flat, weights=weight.ravel(), minlength=reps * cells)
        out[block] = counts.reshape((reps,) + (m,) * len(axes))
    return out


def _contract_blocks(h: Kernel, weights: Dict[CoordSet, np.ndarray], blocks: Sequence[CoordSet]) -> np.ndarray:
    letters = "abcdefghijklmnopqstuvwxy"[: h.d]
    terms = [letters + "z"] + ["r" + "".join(letters[c - 1] for c in sorted(b)) for b in blocks]
    return np.einsum(",".join(terms) + "->rz", h.values, *(weights[b] for b in blocks), optimize=True)


def _sums_from_weights(h: Kernel, weights: Dict[CoordSet, np.ndarray], offdiag: bool) -> np.ndarray:
    singletons = [frozenset({k}) for k in range(1, h.d + 1)]
    if not offdiag:
        return _contract_blocks(h, weights, singletons)
    total = 0.0
    for partition in enumerate_partitions(ground(h.d)):
        total = total + mobius_weight(partition) * _contract_blocks(h, weights, partition.blocks)
    return total


def _batch_sums(h: Kernel, columns: np.ndarray, signs: Optional[np.ndarray], offdiag: bool) -> np.ndarray:
    """Sums of shape ``(R, q)`` for batched draws of shape ``(R, d, n)``."""
    if offdiag and columns.shape[2] < h.d:
        return np.zeros((columns.shape[0], h.q))
    subsets = all_subsets(h.d)[1:] if offdiag else [frozenset({k}) for k in range(1, h.d + 1)]
    return _sums_from_weights(h, _subset_weights(h.m, columns, signs, subsets), offdiag)


def _as_batch(h: Kernel, array: np.ndarray, n: int, dtype: type) -> Tuple[np.ndarray, bool]:
    array = np.asarray(array, dtype=dtype)
    single = array.ndim < 3
    if array.ndim == 1:
        array = array[None, :]
    if single:
        array = array[None]
    if array.shape[1] == 1:
        array = np.repeat(array, h.d, axis=1)
    if array.shape[1] != h.d or array.shape[2] < n:
        raise ValueError(f"draws of shape {array.shape[1:]} cannot feed an order-{h.d} sum of size {n}")
    return array[:, :, :n], single


def ustat_sum(h: Kernel, config: SampleConfig, sample: np.ndarray, signs: Optional[np.ndarray] = None) -> np.ndarray:
    """The sum of kind ``config.kind`` over the first ``config.n`` draws.

    :param sample: ``(d, n)`` columns for decoupled kinds, one length-``n``
                   column for undecoupled kinds
    :param signs: Rademacher draws shaped like ``sample``, required by the
                  randomized kinds

    :return: a vector in ``R^q``

    Examples:
        >>> h = Kernel.from_function(lambda x, y: 1.0, 2, [0.5, 0.5])
        >>> ustat_sum(h, SampleConfig(3), np.zeros((2, 3), dtype=int)).tolist()
        [9.0]
        >>> ustat_sum(h, SampleConfig(3, kind="undecoupled"), np.zeros(3, dtype=int)).tolist()
        [6.0]
    """
    kind = config.kind
    if kind.randomized and signs is None:
        raise ValueError(f"{kind.value} sums need Rademacher signs")
    columns, _ = _as_batch(h, sample, config.n, np.int64)
    sgn = _as_batch(h, signs, config.n, float)[0] if kind.randomized else None
    return _batch_sums(h, columns, sgn, offdiag=not kind.decoupled)[0]


def offdiag_sum(h: Kernel, columns: np.ndarray, signs: Optional[np.ndarray] = None) -> np.ndarray:
    """Sum over pairwise distinct indices of ``(d, n)`` or batched ``(R, d, n)`` draws."""
    cols, single = _as_batch(h, columns, np.shape(columns)[-1], np.int64)
    sgn = _as_batch(h, signs, cols.shape[2], float)[0] if signs is not None else None
    out = _batch_sums(h, cols, sgn, offdiag=True)
    return out[0] if single else out


def diagonal_sum(h: Kernel, config: SampleConfig, sample: np.ndarray, signs: Optional[np.ndarray] = None) -> np.ndarray:
    """Sum over the ``|i| <= n`` with a repeated coordinate: full grid minus off-diagonal.

    Examples:
        >>> h = Kernel.from_function(lambda x, y: x + 2.0 * y, 2, [0.5, 0.5])
        >>> diagonal_sum(h, SampleConfig(1), np.array([[1], [1]])).tolist()
        [3.0]
    """
    if not config.kind.decoupled:
        raise ValueError("diagonal sums are taken over decoupled samples")
    columns, _ = _as_batch(h, sample, config.n, np.int64)
    sgn = _as_batch(h, signs, config.n, float)[0] if config.kind.randomized else None
    full = _batch_sums(h, columns, sgn, offdiag=False)
    return (full - _batch_sums(h, columns, sgn, offdiag=True))[0]


# ---- exact enumeration ----


def enumeration_size(h: Kernel, n: int, kind: UStatKind) -> int:
    """Number of sample (and sign) configurations of a sum of size ``n``."""
    variables = n * h.d if UStatKind(kind).decoupled else n
    count = h.m**variables
    if UStatKind(kind).randomized:
        count *= 2**variables
    return count


def _enumerate(h: Kernel, n: int, kind: UStatKind) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """Chunks of (configuration probability, sum) over every configuration."""
    kind = UStatKind(kind)
    if n < 1:
        raise ValueError("sample size n must be at least 1")
    total = enumeration_size(h, n, kind)
    check_cap("enumeration", total, ENUMERATION_CAP)
    slots = h.d if kind.decoupled else 1
    variables = slots * n
    for start in range(0, total, CHUNK):
        rest = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
        digits = np.empty((rest.size, variables), dtype=np.int64)
        for j in range(variables):
            rest, digits[:, j] = np.divmod(rest, h.m)
        weights = np.prod(h.probs[digits], axis=1)
        columns = digits.reshape(-1, slots, n)
        signs = None
        if kind.randomized:
            bits = np.empty((rest.size, variables))
            for j in range(variables):
                rest, bits[:, j] = np.divmod(rest, 2)
            signs = (2.0 * bits - 1.0).reshape(-1, slots, n)
            weights = weights * 0.5**variables
        if not kind.decoupled:
            columns = np.repeat(columns, h.d, axis=1)
            signs = np.repeat(signs, h.d, axis=1) if signs is not None else None
        yield weights, _batch_sums(h, columns, signs, offdiag=not kind.decoupled)


def _reaches(norms: np.ndarray, t: float) -> np.ndarray:
    return norms >= t * (1.0 - _REL_SLACK)


def exact_moment(h: Kernel, n: int, p: float, kind: UStatKind = UStatKind.DECOUPLED) -> float:
    """``E|S|^p`` by full enumeration.

    :raises GuardViolation: when there are more than 2**24 configurations

    Examples:
        >>> h = Kernel.from_function(lambda x: [-1.0, 1.0][x], 1, [0.5, 0.5])
        >>> exact_moment(h, 3, 2)
        3.0
    """
    if not p >= 1.0:
        raise ValueError("p must be at least 1")
    return float(sum(np.dot(w, np.linalg.norm(s, axis=1) ** p) for w, s in _enumerate(h, n, kind)))


def exact_tail(h: Kernel, n: int, t: float, kind: UStatKind = UStatKind.DECOUPLED) -> float:
    """``P(|S| >= t)`` by full enumeration."""
    if t < 0:
        raise ValueError("threshold t must be nonnegative")
    return float(sum(np.sum(w[_reaches(np.linalg.norm(s, axis=1), t)]) for w, s in _enumerate(h, n, kind)))


def exact_mean(h: Kernel, n: int, kind: UStatKind = UStatKind.DECOUPLED) -> np.ndarray:
    return sum(w @ s for w, s in _enumerate(h, n, kind))


def exact_variance(h: Kernel, n: int, kind: UStatKind = UStatKind.DECOUPLED) -> float:
    """``E|S - ES|^2`` by full enumeration."""
    first = np.zeros(h.q)
    second = 0.0
    for w, s in _enumerate(h, n, kind):
        first = first + w @ s
        second += float(np.dot(w, np.sum(s * s, axis=1)))
    return max(second - float(first @ first), 0.0)


def exact_distribution(h: Kernel, n: int, kind: UStatKind = UStatKind.DECOUPLED) -> Tuple[np.ndarray, np.ndarray]:
    """Atoms of the law of ``|S|`` and their probabilities, atoms increasing."""
    atoms: List[np.ndarray] = []
    masses: List[np.ndarray] = []
    for w, s in _enumerate(h, n, kind):
        values, inverse = np.unique(np.linalg.norm(s, axis=1), return_inverse=True)
        atoms.append(values)
        masses.append(np.bincount(inverse.ravel(), weights=w, minlength=values.size))
    values, inverse = np.unique(np.concatenate(atoms), return_inverse=True)
    return values, np.bincount(inverse.ravel(), weights=np.concatenate(masses), minlength=values.size)


# ---- Monte Carlo ----


def sample_norms(h: Kernel, config: SampleConfig, workers: int = 1) -> np.ndarray:
    """``|S|`` for every replication of ``config``, in replication order."""
    offdiag = not config.kind.decoupled

    def work(reps: range) -> np.ndarray:
        columns, signs = _draw_batch(h, config, reps)
        return np.linalg.norm(_batch_sums(h, columns, signs, offdiag), axis=1)

    chunks = [range(s, min(s + REP_CHUNK, config.reps)) for s in range(0, config.reps, REP_CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    _logger.debug("drew %d replications of a %s sum, n=%d", config.reps, config.kind.value, config.n)
    return np.concatenate(parts)


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Examples:
        >>> lo, hi = wilson_interval(0, 100)
        >>> lo, round(hi, 4)
        (0.0, 0.037)
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4 * trials * trials))
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def summarize_moment(norms: np.ndarray, p: float, seed: int) -> SimReport:
    """Mean of ``|S|^p`` with a normal-approximation 95% half-width."""
    if not p >= 1.0:
        raise ValueError("p must be at least 1")
    powers = np.asarray(norms, dtype=float) ** p
    reps = powers.size
    half = Z_95 * float(np.std(powers, ddof=1)) / math.sqrt(reps) if reps > 1 else math.inf
    return SimReport({"moment": float(np.mean(powers))}, {"moment": half}, reps, seed)


def summarize_tail(norms: np.ndarray, t: float, seed: int) -> SimReport:
    """Frequency of ``|S| >= t`` with its Wilson 95% interval."""
    if t < 0:
        raise ValueError("threshold t must be nonnegative")
    norms = np.asarray(norms, dtype=float)
    hits = int(np.count_nonzero(_reaches(norms, t)))
    lo, hi = wilson_interval(hits, norms.size)
    return SimReport({"tail": hits / norms.size}, {"tail": (hi - lo) / 2.0}, norms.size, seed, {"tail": (lo, hi)})


def mc_moment(h: Kernel, config: SampleConfig, p: float, workers: int = 1) -> SimReport:
    """Monte Carlo estimate of ``E|S|^p``; identical for every worker count."""
    return summarize_moment(sample_norms(h, config, workers), p, config.seed)


def mc_tail(h: Kernel, config: SampleConfig, t: float, workers: int = 1) -> SimReport:
    """Monte Carlo estimate of ``P(|S| >= t)`` with a Wilson interval."""
    if t < 0:
        raise ValueError("threshold t must be nonnegative")
    return summarize_tail(sample_norms(h, config, workers), t, config.seed)


# ---- LIL paths ----


@dataclass(frozen=True)
class LilLevel:
    k: int
    n: int
    median: float
    maximum: float


@dataclass(frozen=True, eq=False)
class LilReport:
    """Ratios ``|S_{2^k}| / (2^k LL 2^k)^{d/2}``, one row per replication.

    ``trend`` is ``"divergent"`` when the medians grow like a power of ``n``
    over the later half of the levels, ``"bounded"`` otherwise.
    """

    kind: UStatKind
    seed: int
    ratios: np.ndarray
    levels: Tuple[LilLevel, ...]
    slope: float
    trend: str

    @property
    def envelope(self) -> float:
        """Largest ratio over all levels and replications."""
        return float(np.max(self.ratios, initial=0.0))


def _lil_path(h: Kernel, kind: UStatKind, n_max: int, seed: int, rep: int) -> np.ndarray:
    offdiag = not kind.decoupled
    subsets = all_subsets(h.d)[1:] if offdiag else [frozenset({k}) for k in range(1, h.d + 1)]
    weights = {b: np.zeros((1,) + (h.m,) * len(b)) for b in subsets}
    ratios = np.zeros(n_max + 1)
    for level in range(n_max + 1):
        columns, signs = _draw_level(h, kind, seed, rep, level)
        step = _subset_weights(h.m, columns[None], None if signs is None else signs[None], subsets)
        for b in subsets:
            weights[b] += step[b]
        n = 2**level
        if offdiag and n < h.d:
            continue
        total = _sums_from_weights(h, weights, offdiag)[0]
        ratios[level] = np.linalg.norm(total) / (n * ll(n)) ** (h.d / 2.0)
    return ratios


def growth_slope(medians: np.ndarray) -> Tuple[float, str]:
    """Least-squares slope of ``log median`` against ``log n`` on the later half of the levels.

    Examples:
        >>> slope, trend = growth_slope(np.sqrt(2.0 ** np.arange(8)))
        >>> round(slope, 12), trend
        (0.5, 'divergent')
        >>> growth_slope(np.zeros(8))
        (0.0, 'bounded')
    """
    medians = np.asarray(medians, dtype=float)
    ks = np.arange(medians.size)[medians.size // 2 :]
    tail = medians[medians.size // 2 :]
    keep = tail > 0.0
    if np.count_nonzero(keep) < 2:
        return 0.0, "bounded"
    slope = float(np.polyfit(ks[keep] * math.log(2.0), np.log(tail[keep]), 1)[0])
    return slope, "divergent" if slope > DIVERGENCE_SLOPE else "bounded"


def lil_ratio_sequence(
    h: Kernel,
    kind: UStatKind = UStatKind.DECOUPLED,
    n_max: int = 15,
    reps: int = 32,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> LilReport:
    """LIL ratios along dyadic sample sizes ``n = 2^k``, ``k = 0..n_max``.

    Every replication is a single growing sample: the draws of level ``k``
    extend those of the earlier levels.

    :raises GuardViolation: when ``n_max`` exceeds 20
    """
    kind = UStatKind(kind)
    if n_max < 0 or reps < 1:
        raise ValueError("n_max must be nonnegative and reps positive")
    check_cap("dyadic exponent", n_max, DYADIC_CAP)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            paths = list(pool.map(lambda r: _lil_path(h, kind, n_max, seed, r), range(reps)))
    else:
        paths = [_lil_path(h, kind, n_max, seed, r) for r in range(reps)]
    ratios = np.vstack(paths)
    medians = np.median(ratios, axis=0)
    levels = tuple(
        LilLevel(k, 2**k, float(medians[k]), float(np.max(ratios[:, k]))) for k in range(n_max + 1)
    )
    slope, trend = growth_slope(medians)
    _logger.info("LIL path %s: envelope %.4g, slope %.3g (%s)", kind.value, float(ratios.max()), slope, trend)
    return LilReport(kind, seed, ratios, levels, slope, trend)


def diagonal_ratio_medians(
    h: Kernel, n_grid: Sequence[int], reps: int = 64, seed: int = DEFAULT_SEED
) -> List[Tuple[int, float]]:
    """Median of ``|diagonal sum| / (n LL n)^{d/2}`` for each ``n`` of the grid.

    The sizes share prefix-consistent decoupled samples.
    """
    grid = sorted(set(int(n) for n in n_grid))
    if not grid or grid[0] < 1:
        raise ValueError("n_grid must hold positive sample sizes")
    config = SampleConfig(grid[-1], reps, seed, UStatKind.DECOUPLED)
    columns, _ = _draw_batch(h, config, range(reps))
    out = []
    for n in grid:
        prefix = columns[:, :, :n]
        diag = _batch_sums(h, prefix, None, offdiag=False) - _batch_sums(h, prefix, None, offdiag=True)
        ratio = np.linalg.norm(diag, axis=1) / (n * ll(n)) ** (h.d / 2.0)
        out.append((n, float(np.median(ratio))))
    return out


if __name__ == "__main__":
    import doctest

    doctest.testmod()
