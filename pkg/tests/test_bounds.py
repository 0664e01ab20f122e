import math

import numpy as np
import pytest
from pytest import approx

from ustat_lil.bounds import (
    BoundMode,
    HypothesisRejection,
    PaleyZygmundBound,
    calibrate,
    calibration_kernels,
    decoupling_comparison,
    fit_power_of_two,
    hitting_probability_lower,
    moment_bound,
    norm_table,
    pz_lower,
    sup_conditional_mean,
    tail_bound_canonical,
    tail_bound_projected,
    variance_bound,
    verify_bounds,
)
from ustat_lil.indexing import partition_spec_count, proper_subsets
from ustat_lil.kernel import CalibrationConstants, Kernel, is_canonical, random_kernel
from ustat_lil.rng import stream
from ustat_lil.simulate import exact_tail, exact_variance


def test_norm_table_keys(sign2):
    table = norm_table(sign2)
    assert len(table) == partition_spec_count(2)
    assert table["K={1,2};J={}"] == approx(1.0)


def test_moment_bound_terms_add_up(gen):
    h = random_kernel(gen, 2, 3, canonical=True)
    consts = CalibrationConstants(L_d=2.0)
    report = moment_bound(h, 4, 3.0, consts)
    assert report.prefactor == approx(8.0)
    assert report.bound_value == approx(report.prefactor * sum(report.terms.values()))
    # five specs and three proper subsets
    assert len(report.terms) == 5 + 3
    assert report.constants_used is consts
    assert report.mode is BoundMode.DETERMINISTIC


def test_moment_bound_is_homogeneous(gen):
    h = random_kernel(gen, 2, 3, canonical=True)
    p = 4.0
    base = moment_bound(h, 3, p).bound_value
    assert moment_bound(h.scaled(3.0), 3, p).bound_value == approx(3.0**p * base, rel=1e-8)


def test_stochastic_mode_is_tighter(gen):
    h = random_kernel(gen, 2, 3, canonical=True)
    det = moment_bound(h, 4, 2.0)
    sto = moment_bound(h, 4, 2.0, mode=BoundMode.STOCHASTIC, reps=64)
    assert sto.bound_value <= det.bound_value * (1.0 + 1e-12)
    assert sto.mode is BoundMode.STOCHASTIC


def test_moment_bound_rejects_small_p(coin):
    with pytest.raises(ValueError):
        moment_bound(coin, 4, 1.5)


def test_tail_bound_coin(coin):
    tb = tail_bound_canonical(coin, 4, 2.0)
    assert tb.m1 == approx(1.0)
    assert tb.m2 == approx(2.0)
    assert tb.bound == approx(math.exp(-1.0))
    assert tb.threshold == approx(4.0)


def test_tail_bound_monotone_in_t(gen):
    h = random_kernel(gen, 2, 3, canonical=True)
    norms = norm_table(h)
    bounds = [tail_bound_canonical(h, 4, t, norms=norms).bound for t in (0.0, 0.5, 1.0, 4.0, 16.0)]
    assert bounds[0] == 1.0
    assert all(0.0 <= b <= 1.0 for b in bounds)
    assert all(b <= a for a, b in zip(bounds, bounds[1:]))
    assert tail_bound_projected(h, 4, 1.0, norms=norms).bound == bounds[2]


def test_tail_bound_zero_kernel_is_trivial():
    h = Kernel.zeros(1, [0.5, 0.5])
    # every ratio has a zero denominator
    assert tail_bound_canonical(h, 3, 1.0).bound == 0.0


def test_variance_bound_dominates_exact():
    for index in range(8):
        gen = stream(21, index)
        d = 1 + index % 2
        g = random_kernel(gen, d, 2)
        for n in (1, 2):
            assert variance_bound(g, n) >= exact_variance(g, n) * (1.0 - 1e-12)


def test_decoupling_comparison_holds():
    for index in range(8):
        gen = stream(22, index)
        h = random_kernel(gen, 1 + index % 2, 2, q=1 + index % 3 % 2)
        for p in (2.0, 3.0):
            assert decoupling_comparison(h, 2, p).holds


def _passing_pz_instance(h, N):
    """The smallest ``a`` meeting every conditional-mean hypothesis, with ``t`` making the mean one tight."""
    d = h.d
    a = max(N ** len(I) * sup_conditional_mean(h, I) for I in proper_subsets(d))
    mean = float(h.expect(frozenset(range(1, d + 1))).ravel()[0])
    return a, N**d * mean / a


def test_pz_lower_below_exact_probability():
    for index in range(6):
        gen = stream(23, index)
        d = 1 + index % 2
        h = Kernel(np.abs(random_kernel(gen, d, 2).values), random_kernel(gen, d, 2).law)
        N = 2
        a, t = _passing_pz_instance(h, N)
        for lam in (0.25, 0.5):
            result = pz_lower(h, N, a, t, lam)
            assert isinstance(result, PaleyZygmundBound)
            assert result.probability <= exact_tail(h, N, result.level) + 1e-12
            assert result.simplified <= result.probability + 1e-12


def test_pz_lower_rejects_failed_hypotheses():
    h = Kernel.from_function(lambda x: [0.0, 4.0][x], 1, [0.5, 0.5])
    result = pz_lower(h, 2, 1.0, 1.0, 0.5)
    assert isinstance(result, HypothesisRejection)
    assert "{}" in result.inequality
    with pytest.raises(ValueError):
        pz_lower(h.scaled(-1.0), 2, 1.0, 1.0, 0.5)


def test_hitting_probability():
    A = np.zeros((4, 4), dtype=bool)
    A[0, 0] = True
    result = hitting_probability_lower(A, [0.25] * 4, 2)
    assert isinstance(result, PaleyZygmundBound)
    assert result.probability == approx(0.25 / 3.25)
    assert result.simplified == approx(0.25 * 0.25)
    indicator = Kernel(A.astype(float)[..., None], random_kernel(stream(0), 2, 4, uniform=True).law)
    assert result.probability <= exact_tail(indicator, 2, 1.0)


def test_hitting_probability_rejection():
    A = np.zeros((2, 2), dtype=bool)
    A[0, :] = True
    assert isinstance(hitting_probability_lower(A, [0.5, 0.5], 4), HypothesisRejection)


def test_fit_power_of_two():
    assert fit_power_of_two(lambda L: True) == 1.0
    assert fit_power_of_two(lambda L: L > 100) == 128.0
    with pytest.raises(ValueError):
        fit_power_of_two(lambda L: False, max_exponent=3)


def test_calibration_kernels_are_canonical():
    kernels = calibration_kernels(5, seed=4)
    assert len(kernels) == 5
    assert all(is_canonical(h).canonical for h in kernels)
    assert all(h.d <= 2 and h.m <= 4 and h.q <= 2 for h in kernels)


@pytest.mark.slow
def test_calibrated_constants_pass_their_own_kernels():
    kernels = calibration_kernels(3, seed=8)
    consts = calibrate(kernels, 4, 2.0, [0.5, 2.0], reps=512, seed=9)
    assert consts.L_d >= 1.0
    records = verify_bounds(kernels, consts, 4, 2.0, [0.5, 2.0], reps=512, seed=9)
    assert len(records) == 3 * (1 + 2 * 2)
    assert all(r.passed for r in records)


@pytest.mark.slow
def test_frozen_constants_hold_on_fresh_kernels():
    consts = calibrate(calibration_kernels(20, seed=1), 8, 2.0, [1.0, 4.0], reps=1024, seed=2)
    fresh = calibration_kernels(20, seed=3)
    records = verify_bounds(fresh, CalibrationConstants(L_d=2.0 * consts.L_d), 8, 2.0, [1.0, 4.0], reps=1024, seed=4)
    assert all(r.passed for r in records)
