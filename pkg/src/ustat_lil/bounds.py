"""
Moment, tail, variance and anti-concentration bounds, with drivers that
check them against exact enumeration and Monte Carlo.

The inequalities hold up to constants depending only on the order ``d``;
those are carried by :class:`~ustat_lil.kernel.CalibrationConstants` and echoed
in every report. :func:`calibrate` fits the smallest power of two for
``L_d`` that makes a set of calibration kernels pass, and
:func:`verify_bounds` checks frozen constants on fresh kernels.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from .indexing import enumerate_partition_specs, format_coords, proper_subsets
from .kernel import (
    CalibrationConstants,
    DiscreteDistribution,
    Kernel,
    conditional_sup_norm,
    hoeffding_project,
    mean_over,
    random_kernel,
    second_moment,
)
from .norms import norm_kj
from .rng import DEFAULT_SEED, stream
from .simulate import (
    SampleConfig,
    UStatKind,
    draw_sample,
    exact_moment,
    sample_norms,
    summarize_moment,
    summarize_tail,
)

_logger = logging.getLogger(__name__)

_REL_TOL = 1e-12


class BoundMode(str, Enum):
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


@dataclass(frozen=True)
class BoundReport:
    """A bound with its terms: ``bound_value == prefactor * sum(terms.values())``."""

    bound_value: float
    terms: Dict[str, float]
    prefactor: float
    constants_used: CalibrationConstants
    mode: BoundMode


@dataclass(frozen=True)
class TailBound:
    """``P(|S| >= threshold) <= bound``; ``m1``/``m2`` are the two exponent minima."""

    t: float
    threshold: float
    bound: float
    m1: float
    m2: float
    constants_used: CalibrationConstants


@dataclass(frozen=True)
class PaleyZygmundBound:
    """``P(S >= level) >= probability``, with ``simplified = (1-lam)^2 2^-d min(1, t)``."""

    level: float
    probability: float
    simplified: float


@dataclass(frozen=True)
class HypothesisRejection:
    """A hypothesis of the anti-concentration bound failed; nothing is claimed."""

    inequality: str
    lhs: float
    rhs: float

    def __str__(self) -> str:
        return f"hypothesis {self.inequality} fails: {self.lhs!r} vs {self.rhs!r}"


@dataclass(frozen=True)
class DecouplingComparison:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + _REL_TOL) + _REL_TOL


@dataclass(frozen=True)
class VerificationRecord:
    kernel: int
    quantity: str
    t: float
    bound: float
    observed: float
    ci_half_width: float
    passed: bool


def subset_label(coords) -> str:
    return "I=" + format_coords(coords)


def norm_table(h: Kernel, **options) -> Dict[str, float]:
    """``|h|_{K,J}`` for every spec, keyed by the spec label."""
    return {spec.label(): norm_kj(h, spec, **options).value for spec in enumerate_partition_specs(h.d)}


def _sample_sup_term(h: Kernel, coords, n: int, p: float, reps: int, seed: int) -> float:
    """Monte Carlo ``E max over i_{I^c} of (E_I|h|^2)^{p/2}`` on decoupled outer draws."""
    outer = [k for k in range(1, h.d + 1) if k not in coords]
    inner = mean_over(np.sum(h.values**2, axis=-1), h.probs, [c - 1 for c in coords])
    inner = inner ** (p / 2.0)
    config = SampleConfig(n, reps, seed, UStatKind.DECOUPLED)
    total = 0.0
    for rep in range(reps):
        columns = draw_sample(h, config, rep).columns
        seen = inner
        for axis, k in enumerate(outer):
            hit = np.zeros(h.m, dtype=bool)
            hit[columns[k - 1]] = True
            seen = np.compress(hit, seen, axis=axis)
        total += float(np.max(seen))
    return total / reps


def moment_bound(
    h: Kernel,
    n: int,
    p: float,
    consts: Optional[CalibrationConstants] = None,
    mode: BoundMode = BoundMode.DETERMINISTIC,
    *,
    norms: Optional[Mapping[str, float]] = None,
    reps: int = 256,
    seed: int = DEFAULT_SEED,
) -> BoundReport:
    """Moment bound for a canonical kernel.

    ``E|S|^p <= L_d^p * (sum over (K, J) of p^{p deg J / 2} n^{dp/2} |h|_{K,J}^p
    + sum over I proper of p^{p(d + #I^c)/2} n^{#I p/2} T_I)``, with
    ``T_I = E max_{i_{I^c}} (E_I|h|^2)^{p/2}``. Deterministic mode replaces
    ``T_I`` by ``conditional_sup_norm(h, I)^p``; stochastic mode estimates it
    from ``reps`` decoupled draws of the outer coordinates.
    """
    if not p >= 2.0:
        raise ValueError("moment bounds need p >= 2")
    if n < 1:
        raise ValueError("sample size n must be at least 1")
    consts = consts or CalibrationConstants()
    mode = BoundMode(mode)
    norms = norms if norms is not None else norm_table(h)
    d = h.d
    terms: Dict[str, float] = {}
    for spec in enumerate_partition_specs(d):
        terms[spec.label()] = p ** (p * spec.deg / 2.0) * n ** (d * p / 2.0) * norms[spec.label()] ** p
    for coords in proper_subsets(d):
        if mode is BoundMode.DETERMINISTIC:
            sup_term = conditional_sup_norm(h, coords) ** p
        else:
            sup_term = _sample_sup_term(h, coords, n, p, reps, seed)
        weight = p ** (p * (d + d - len(coords)) / 2.0) * n ** (len(coords) * p / 2.0)
        terms[subset_label(coords)] = weight * sup_term
    prefactor = consts.L_d**p
    return BoundReport(prefactor * sum(terms.values()), terms, prefactor, consts, mode)


def _ratio_power(num: float, den: float, exponent: float) -> float:
    if den <= 0.0:
        return math.inf
    return (num / den) ** exponent


def tail_bound_canonical(
    h: Kernel,
    n: int,
    t: float,
    consts: Optional[CalibrationConstants] = None,
    *,
    norms: Optional[Mapping[str, float]] = None,
) -> TailBound:
    """Tail bound for a bounded canonical kernel.

    ``P(|S| >= L_d (n^{d/2} sqrt(E|h|^2) + t)) <= L_d exp(-min(M1, M2) / L_d)``
    where ``M1`` runs over the specs other than ``(I_d, {})`` and ``M2`` over
    the proper subsets ``I``. Zero denominators contribute ``+inf``.

    Examples:
        >>> h = Kernel.from_function(lambda x: [-1.0, 1.0][x], 1, [0.5, 0.5])
        >>> tail_bound_canonical(h, 4, 0.0).bound
        1.0
    """
    if t < 0:
        raise ValueError("threshold t must be nonnegative")
    consts = consts or CalibrationConstants()
    norms = norms if norms is not None else norm_table(h)
    d = h.d
    m1 = math.inf
    for spec in enumerate_partition_specs(d):
        if spec.is_full:
            continue
        assert spec.deg >= 1
        m1 = min(m1, _ratio_power(t, n ** (d / 2.0) * norms[spec.label()], 2.0 / spec.deg))
    m2 = math.inf
    for coords in proper_subsets(d):
        den = n ** (len(coords) / 2.0) * conditional_sup_norm(h, coords)
        m2 = min(m2, _ratio_power(t, den, 2.0 / (d + d - len(coords))))
    L = consts.L_d
    threshold = L * (n ** (d / 2.0) * math.sqrt(second_moment(h)) + t)
    bound = min(1.0, L * math.exp(-min(m1, m2) / L))
    return TailBound(t, threshold, bound, m1, m2, consts)


def tail_bound_projected(
    h: Kernel,
    n: int,
    t: float,
    consts: Optional[CalibrationConstants] = None,
    *,
    norms: Optional[Mapping[str, float]] = None,
) -> TailBound:
    """Tail bound for the decoupled sum of ``pi_d h`` with ``h`` bounded, not necessarily canonical.

    The bound takes the norms of ``h`` itself.
    """
    return tail_bound_canonical(h, n, t, consts, norms=norms)


def variance_bound(g: Kernel, n: int) -> float:
    """``(2^d - 1) n^{2d-1} E g^2`` bounds the variance of the decoupled full-grid sum.

    Examples:
        >>> g = Kernel.from_function(lambda x, y: x + y, 2, [0.5, 0.5])
        >>> variance_bound(g, 2)
        36.0
    """
    if g.q != 1:
        raise ValueError("variance bounds take real-valued kernels (q = 1)")
    if n < 1:
        raise ValueError("sample size n must be at least 1")
    return (2**g.d - 1) * n ** (2 * g.d - 1) * second_moment(g)


def pz_lower(
    h: Kernel, N: int, a: float, t: float, lam: float
) -> Union[PaleyZygmundBound, HypothesisRejection]:
    """Paley-Zygmund lower bound for a nonnegative kernel.

    Under ``N^d E h >= t a`` and ``|E_I h|_inf <= N^{-#I} a`` for every proper
    ``I``, ``P(sum over |i| <= N of h(X_i) >= lam t a) >= (1-lam)^2 t/(t + 2^d - 1)``.
    Hypotheses are checked with a relative tolerance of 1e-12; a failed one is
    returned as a :class:`HypothesisRejection`.

    Examples:
        >>> h = Kernel.from_function(lambda x: 0.5, 1, [0.5, 0.5])
        >>> pz_lower(h, 2, 1.0, 1.0, 0.5).probability
        0.125
    """
    if h.q != 1:
        raise ValueError("the anti-concentration bound takes real-valued kernels (q = 1)")
    if np.any(h.values[h.support_mask] < 0.0):
        raise ValueError("the anti-concentration bound takes nonnegative kernels")
    if not (a > 0 and t > 0 and 0.0 < lam < 1.0 and N >= 1):
        raise ValueError("need a > 0, t > 0, N >= 1 and lam in (0, 1)")
    d = h.d
    mean = float(h.expect(frozenset(range(1, d + 1))).ravel()[0])
    if N**d * mean < t * a * (1.0 - _REL_TOL):
        return HypothesisRejection("N^d E h >= t a", N**d * mean, t * a)
    for coords in proper_subsets(d):
        sup = sup_conditional_mean(h, coords)
        cap = N ** (-len(coords)) * a
        if sup > cap * (1.0 + _REL_TOL):
            return HypothesisRejection(f"|E_I h|_inf <= N^-#I a for {subset_label(coords)}", sup, cap)
    probability = (1.0 - lam) ** 2 * t / (t + 2**d - 1)
    simplified = (1.0 - lam) ** 2 * 2.0 ** (-d) * min(1.0, t)
    return PaleyZygmundBound(lam * t * a, probability, simplified)


def sup_conditional_mean(h: Kernel, coords) -> float:
    """``sup over x_{I^c} of |E_I h(x_{I^c}, X_I)|`` over cells of positive probability."""
    coords = frozenset(coords)
    mean = np.linalg.norm(h.expect(coords), axis=-1)
    mask = h.support_mask
    for c in coords:
        mask = np.any(mask, axis=c - 1, keepdims=True)
    return float(np.max(np.where(mask, mean, 0.0), initial=0.0))


def hitting_probability_lower(
    A: np.ndarray, probs: Sequence[float], N: int
) -> Union[PaleyZygmundBound, HypothesisRejection]:
    """Lower bound ``2^-d min(N^d P(A), 1)`` on the chance that some ``X_i`` lands in ``A``.

    Requires ``P_I((x_{I^c}, X_I) in A) <= N^{-#I}`` for every nonempty proper
    ``I`` and every ``x_{I^c}``. The returned level is 1: one hit among the
    ``N^d`` decoupled indices.

    Examples:
        >>> A = np.array([[True, False], [False, False]])
        >>> hitting_probability_lower(A, [0.5, 0.5], 2).simplified
        0.25
    """
    A = np.asarray(A, dtype=bool)
    h = Kernel(A.astype(float)[..., None], DiscreteDistribution(np.asarray(probs, dtype=float)))
    d = h.d
    for coords in proper_subsets(d)[1:]:
        sup = sup_conditional_mean(h, coords)
        cap = float(N) ** (-len(coords))
        if sup > cap * (1.0 + _REL_TOL):
            return HypothesisRejection(f"P_I(A) <= N^-#I for {subset_label(coords)}", sup, cap)
    t = N**d * float(h.expect(frozenset(range(1, d + 1))).ravel()[0])
    if t == 0.0:
        return PaleyZygmundBound(1.0, 0.0, 0.0)
    return PaleyZygmundBound(1.0, t / (t + 2**d - 1), 2.0 ** (-d) * min(1.0, t))


def decoupling_comparison(h: Kernel, n: int, p: float) -> DecouplingComparison:
    """Exact ``|sum pi_d h(X_i)|_p`` against ``2^d |sum eps_i h(X_i)|_p``, decoupled.

    Both sides enumerate every configuration (the right side also every sign
    pattern) and share the enumeration guard.
    """
    lhs = exact_moment(hoeffding_project(h), n, p, UStatKind.DECOUPLED) ** (1.0 / p)
    rhs = 2**h.d * exact_moment(h, n, p, UStatKind.RANDOMIZED_DECOUPLED) ** (1.0 / p)
    return DecouplingComparison(lhs, rhs)


# ---- calibration ----


def fit_power_of_two(predicate: Callable[[float], bool], max_exponent: int = 40) -> float:
    """Smallest ``2^k``, ``k >= 0``, satisfying ``predicate``.

    Examples:
        >>> fit_power_of_two(lambda L: L >= 5)
        8.0
    """
    for k in range(max_exponent + 1):
        if predicate(2.0**k):
            return 2.0**k
    raise ValueError(f"no power of two up to 2**{max_exponent} passes")


def calibration_kernels(count: int, seed: int = DEFAULT_SEED, d_max: int = 2, m_max: int = 4, q_max: int = 2) -> List[Kernel]:
    """Random canonical kernels of order ``<= d_max``, alphabet ``<= m_max`` and dimension ``<= q_max``."""
    kernels = []
    for index in range(count):
        gen = stream(seed, index)
        d = int(gen.integers(1, d_max + 1))
        m = int(gen.integers(2, m_max + 1))
        q = int(gen.integers(1, q_max + 1))
        kernels.append(random_kernel(gen, d, m, q, canonical=True))
    return kernels


@dataclass(frozen=True, eq=False)
class _Evidence:
    kernel: Kernel
    norms: Dict[str, float]
    observed: np.ndarray
    projected: np.ndarray


def _collect(kernels: Sequence[Kernel], n: int, reps: int, seed: int, workers: int) -> List[_Evidence]:
    config = SampleConfig(n, reps, seed, UStatKind.DECOUPLED)
    return [
        _Evidence(h, norm_table(h), sample_norms(h, config, workers), sample_norms(hoeffding_project(h), config, workers))
        for h in kernels
    ]


def _check(
    evidence: Sequence[_Evidence], consts: CalibrationConstants, n: int, p: float, t_grid: Sequence[float], seed: int
) -> List[VerificationRecord]:
    records = []
    for index, ev in enumerate(evidence):
        h = ev.kernel
        moment = summarize_moment(ev.observed, p, seed)
        bound = moment_bound(h, n, p, consts, norms=ev.norms).bound_value
        est, half = moment.estimates["moment"], moment.ci_half_widths["moment"]
        records.append(VerificationRecord(index, "moment", 0.0, bound, est, half, bound >= est - half))
        for quantity, draws, evaluate in (
            ("tail_canonical", ev.observed, tail_bound_canonical),
            ("tail_projected", ev.projected, tail_bound_projected),
        ):
            for t in t_grid:
                tb = evaluate(h, n, t, consts, norms=ev.norms)
                tail = summarize_tail(draws, tb.threshold, seed)
                lo, _ = tail.intervals["tail"]
                observed = tail.estimates["tail"]
                half = tail.ci_half_widths["tail"]
                records.append(VerificationRecord(index, quantity, float(t), tb.bound, observed, half, tb.bound >= lo))
    return records


def verify_bounds(
    kernels: Sequence[Kernel],
    consts: CalibrationConstants,
    n: int,
    p: float,
    t_grid: Sequence[float],
    reps: int = 4096,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> List[VerificationRecord]:
    """Check the moment bound and both tail bounds against Monte Carlo.

    A record passes when the bound is at least the lower end of the 95%
    interval of the observed quantity. Tail records take the frequency of
    ``|S| >= threshold`` for the threshold of the bound at each ``t``; the
    projected records sample the decoupled sum of ``pi_d h``.
    """
    records = _check(_collect(kernels, n, reps, seed, workers), consts, n, p, t_grid, seed)
    _logger.debug("verified %d kernels, %d records", len(kernels), len(records))
    return records


def calibrate(
    kernels: Sequence[Kernel],
    n: int,
    p: float,
    t_grid: Sequence[float],
    reps: int = 4096,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> CalibrationConstants:
    """Smallest power-of-two ``L_d`` under which every calibration record passes.

    Draws and norms are computed once and reused for every candidate.
    """
    evidence = _collect(kernels, n, reps, seed, workers)

    def passes(L: float) -> bool:
        return all(r.passed for r in _check(evidence, CalibrationConstants(L_d=L), n, p, t_grid, seed))

    L = fit_power_of_two(passes)
    _logger.info("calibrated L_d = %g on %d kernels", L, len(kernels))
    return CalibrationConstants(L_d=L)


if __name__ == "__main__":
    import doctest

    doctest.testmod()
