"""
Oracle suite behind ``ustat-lil selftest``.

Each check compares a library result with an independent oracle on tiny
instances (Bell numbers, explicit projections, singular values, exhaustive
enumeration) and returns a short detail line. Checks are registered by name
in :data:`CHECKS` and run in registration order.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .bounds import decoupling_comparison, variance_bound
from .indexing import (
    PartitionSpec,
    bell_number,
    enumerate_partition_specs,
    enumerate_partitions,
    ground,
    partition_spec_count,
)
from .kernel import Kernel, hoeffding_project, is_canonical, random_kernel, second_moment
from .norms import bruteforce_norm_oracle, chaos_star_norm, norm_kj, norm_kju
from .rng import DEFAULT_SEED, stream
from .simulate import (
    SampleConfig,
    UStatKind,
    diagonal_sum,
    draw_sample,
    exact_moment,
    exact_variance,
    lil_ratio_sequence,
    offdiag_sum,
    ustat_sum,
)

_logger = logging.getLogger(__name__)

Check = Callable[[int], str]

CHECKS: Dict[str, Check] = {}


class SelfTestFailure(AssertionError):
    pass


@dataclass(frozen=True)
class SelfTestRecord:
    name: str
    passed: bool
    detail: str


def check(name: str) -> Callable[[Check], Check]:
    """Register ``func`` under ``name``."""

    def register(func: Check) -> Check:
        CHECKS[name] = func
        return func

    return register


def _expect(ok: bool, message: str) -> None:
    if not ok:
        raise SelfTestFailure(message)


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@check("combinatorics")
def _combinatorics(seed: int) -> str:
    bell = [1, 1, 2, 5, 15, 52, 203]
    for k, expected in enumerate(bell):
        _expect(bell_number(k) == expected, f"B_{k} = {bell_number(k)}, expected {expected}")
        _expect(len(enumerate_partitions(ground(k))) == expected, f"{k} coordinates: wrong partition count")
    for d in range(1, 6):
        total = sum(math.comb(d, j) * bell[d - j] for j in range(d + 1))
        _expect(partition_spec_count(d) == total == len(enumerate_partition_specs(d)), f"spec count for d={d}")
    return "Bell numbers up to 6, spec counts up to 5"


@check("projection")
def _projection(seed: int) -> str:
    for index in range(20):
        gen = stream(seed, 1, index)
        d, m, q = (int(x) for x in (gen.integers(1, 4), gen.integers(2, 4), gen.integers(1, 3)))
        h = random_kernel(gen, d, m, q)
        g = random_kernel(gen, d, m, q)
        g = Kernel(g.values, h.law)
        ph = hoeffding_project(h)
        _expect(is_canonical(ph).canonical, f"projection of kernel {index} is not canonical")
        _expect(np.allclose(hoeffding_project(ph).values, ph.values, atol=1e-12), f"projection {index} not idempotent")
        lin = hoeffding_project(h + g.scaled(2.0)).values
        _expect(np.allclose(lin, ph.values + 2.0 * hoeffding_project(g).values, atol=1e-12), f"kernel {index}: nonlinear")
    return "20 kernels idempotent, linear and canonical"


@check("norm-anchors")
def _norm_anchors(seed: int) -> str:
    spec = PartitionSpec.of(2, [], [{1}, {2}])
    for index in range(10):
        gen = stream(seed, 2, index)
        h = random_kernel(gen, 2, int(gen.integers(2, 5)))
        full = norm_kj(h, PartitionSpec.of(2, {1, 2}, [])).value
        _expect(_close(full, math.sqrt(second_moment(h)), 1e-12), f"kernel {index}: full norm {full}")
        root = np.sqrt(h.probs)
        top = float(np.linalg.svd(root[:, None] * h.values[..., 0] * root[None, :], compute_uv=False)[0])
        value = norm_kj(h, spec, seed=seed).value
        _expect(_close(value, top, 1e-8), f"kernel {index}: operator norm {value} vs {top}")
    return "full-spec norms and 10 operator norms"


@check("truncated-example")
def _truncated_example(seed: int) -> str:
    h = Kernel.from_function(lambda x: [-1.0, 3.0][x], 1, [0.75, 0.25])
    spec = PartitionSpec.of(1, [], [{1}])
    low = norm_kju(h, spec, 1.0, seed=seed).value
    high = norm_kju(h, spec, 2.0, seed=seed).value
    oracle = bruteforce_norm_oracle(h, spec, 1.0, seed=seed)
    _expect(_close(low, 1.5, 1e-6) and _close(oracle, 1.5, 1e-6), f"u=1: {low}, oracle {oracle}")
    _expect(_close(high, math.sqrt(3.0), 1e-8), f"u=2: {high}")
    return f"|h|_u = {low:.6g} at u=1, {high:.6g} at u=2"


@check("chaos-anchors")
def _chaos_anchors(seed: int) -> str:
    gen = stream(seed, 3)
    spec = PartitionSpec.of(1, {1}, [])
    for _ in range(5):
        a = gen.standard_normal((4, 2))
        _expect(_close(chaos_star_norm(a, spec, 3.0), float(np.linalg.norm(a)), 1e-12), "vector chaos norm")
    return "order-1 chaos norms equal Euclidean norms"


@check("exact-identities")
def _exact_identities(seed: int) -> str:
    for index in range(6):
        gen = stream(seed, 4, index)
        d = 1 + index % 2
        h = random_kernel(gen, d, 2, canonical=True)
        n = 3 if d == 1 else 2
        _expect(_close(exact_moment(h, n, 2.0), n**d * second_moment(h), 1e-10), f"kernel {index}: second moment")
        config = SampleConfig(6, kind=UStatKind.DECOUPLED)
        columns = draw_sample(h, config, index).columns
        split = offdiag_sum(h, columns) + diagonal_sum(h, config, columns)
        _expect(np.allclose(ustat_sum(h, config, columns), split, rtol=1e-12, atol=1e-12), f"kernel {index}: split")
    return "6 kernels: E|S|^2 = n^d E|h|^2 and full = offdiag + diagonal"


@check("decoupling")
def _decoupling(seed: int) -> str:
    for index in range(6):
        gen = stream(seed, 5, index)
        h = random_kernel(gen, 1 + index % 2, 2)
        result = decoupling_comparison(h, 2, 2.0)
        _expect(result.holds, f"kernel {index}: {result.lhs} > {result.rhs}")
    return "6 decoupling comparisons"


@check("variance-bound")
def _variance_bound(seed: int) -> str:
    for index in range(6):
        gen = stream(seed, 6, index)
        g = random_kernel(gen, 1 + index % 2, 2)
        exact = exact_variance(g, 2)
        _expect(variance_bound(g, 2) >= exact * (1.0 - 1e-12), f"kernel {index}: exact variance {exact}")
    return "6 variance bounds"


@check("lil-smoke")
def _lil_smoke(seed: int) -> str:
    coin = Kernel.from_function(lambda x: [-1.0, 1.0][x], 1, [0.5, 0.5])
    report = lil_ratio_sequence(coin, n_max=10, reps=16, seed=seed)
    _expect(report.envelope < 4.0, f"fair coin envelope {report.envelope}")
    constant = Kernel.from_function(lambda x: 1.0, 1, [0.5, 0.5])
    _expect(lil_ratio_sequence(constant, n_max=10, reps=4, seed=seed).trend == "divergent", "constant kernel bounded")
    return f"fair coin envelope {report.envelope:.4g}; constant kernel divergent"


def run_selftest(seed: int = DEFAULT_SEED, names: Optional[Sequence[str]] = None) -> List[SelfTestRecord]:
    """Run the named checks (all by default) and record each outcome."""
    selected = list(CHECKS) if names is None else list(names)
    records = []
    for name in selected:
        if name not in CHECKS:
            raise ValueError(f"unknown check {name!r}")
        try:
            detail = CHECKS[name](seed)
            records.append(SelfTestRecord(name, True, detail))
        except SelfTestFailure as exc:
            _logger.warning("check %s failed: %s", name, exc)
            records.append(SelfTestRecord(name, False, str(exc)))
    _logger.info("selftest: %d of %d checks passed", sum(r.passed for r in records), len(records))
    return records
