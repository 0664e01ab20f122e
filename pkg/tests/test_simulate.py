import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx

from ustat_lil.errors import GuardViolation
from ustat_lil.indexing import iterate_indices
from ustat_lil.kernel import Kernel, ll, random_kernel, second_moment
from ustat_lil.rng import stream
from ustat_lil.simulate import (
    SampleConfig,
    UStatKind,
    diagonal_ratio_medians,
    diagonal_sum,
    draw_sample,
    enumeration_size,
    exact_distribution,
    exact_mean,
    exact_moment,
    exact_tail,
    exact_variance,
    growth_slope,
    lil_ratio_sequence,
    mc_moment,
    mc_tail,
    offdiag_sum,
    sample_norms,
    ustat_sum,
    wilson_interval,
)


def brute_sum(h, columns, signs, offdiag):
    """Explicit loop over the multi-indices."""
    d, n = columns.shape
    total = np.zeros(h.q)
    for index in iterate_indices(n, d, offdiag_only=offdiag):
        cell = tuple(columns[k, i - 1] for k, i in enumerate(index))
        weight = 1.0
        if signs is not None:
            weight = np.prod([signs[k, i - 1] for k, i in enumerate(index)])
        total += weight * h.values[cell]
    return total


@pytest.mark.parametrize("kind", list(UStatKind))
def test_sums_match_explicit_loops(kind, gen):
    h = random_kernel(gen, 3, 3, 2)
    config = SampleConfig(5, kind=kind)
    for rep in range(3):
        sample = draw_sample(h, config, rep)
        got = ustat_sum(h, config, sample.columns, sample.signs)
        assert got == approx(brute_sum(h, sample.columns, sample.signs, not config.kind.decoupled), rel=1e-10, abs=1e-10)


def test_undecoupled_columns_repeat(gen):
    h = random_kernel(gen, 2, 3)
    sample = draw_sample(h, SampleConfig(7, kind=UStatKind.RANDOMIZED_UNDECOUPLED), 0)
    assert np.array_equal(sample.columns[0], sample.columns[1])
    assert np.array_equal(sample.signs[0], sample.signs[1])


def test_full_is_offdiag_plus_diagonal(gen):
    h = random_kernel(gen, 2, 4, 2)
    config = SampleConfig(9)
    for rep in range(5):
        columns = draw_sample(h, config, rep).columns
        full = ustat_sum(h, config, columns)
        assert full == approx(offdiag_sum(h, columns) + diagonal_sum(h, config, columns), rel=1e-12, abs=1e-12)


def test_draws_are_prefix_consistent(gen):
    h = random_kernel(gen, 2, 3)
    small = draw_sample(h, SampleConfig(5, kind="randomized_decoupled"), 4)
    large = draw_sample(h, SampleConfig(37, kind="randomized_decoupled"), 4)
    assert np.array_equal(large.columns[:, :5], small.columns)
    assert np.array_equal(large.signs[:, :5], small.signs)


def test_zero_probability_symbols_never_drawn():
    h = Kernel.from_function(lambda x: float(x), 1, [0.5, 0.0, 0.5])
    columns = draw_sample(h, SampleConfig(64), 0).columns
    assert not np.any(columns == 1)


def test_exact_second_moment_canonical(gen):
    for d, n in ((1, 4), (2, 2), (2, 3)):
        h = random_kernel(gen, d, 2, canonical=True)
        assert exact_moment(h, n, 2.0) == approx(n**d * second_moment(h), rel=1e-10)


def test_exact_small_cases(coin, sign2):
    assert exact_moment(coin, 3, 2) == approx(3.0)
    assert exact_tail(coin, 4, 2.0) == approx(0.625)
    assert exact_moment(sign2, 2, 2, UStatKind.UNDECOUPLED) == approx(4.0)
    constant = Kernel.from_function(lambda x, y: 1.5, 2, [0.2, 0.8])
    assert exact_mean(constant, 2).tolist() == approx([6.0])
    assert exact_variance(constant, 2) == approx(0.0, abs=1e-12)


def test_exact_distribution(coin):
    atoms, probs = exact_distribution(coin, 4)
    assert atoms.tolist() == approx([0.0, 2.0, 4.0])
    assert probs.tolist() == approx([6 / 16, 8 / 16, 2 / 16])


def test_exact_moment_matches_enumeration_by_hand(gen):
    """Randomized decoupled moment against an explicit product over samples and signs."""
    h = random_kernel(gen, 2, 2)
    n = 2
    total = 0.0
    for xs in itertools.product(range(2), repeat=4):
        px = np.prod(h.probs[list(xs)])
        cols = np.array(xs).reshape(2, n)
        for bits in itertools.product((-1.0, 1.0), repeat=4):
            s = brute_sum(h, cols, np.array(bits).reshape(2, n), False)
            total += px / 16.0 * float(np.sum(s * s)) ** 1.5
    assert exact_moment(h, n, 3.0, UStatKind.RANDOMIZED_DECOUPLED) == approx(total, rel=1e-10)


@pytest.mark.parametrize("kind", list(UStatKind))
def test_exact_distribution_total_mass(kind, gen):
    h = random_kernel(gen, 2, 2)
    _, masses = exact_distribution(h, 2, kind)
    assert masses.sum() == approx(1.0, rel=1e-12)
    assert exact_tail(h, 2, 0.0, kind) == approx(1.0, rel=1e-12)


def test_randomized_second_moment_has_no_cross_terms(gen):
    # independent signs cancel every cross term, canonical or not
    for d, n in ((1, 3), (2, 2)):
        h = random_kernel(gen, d, 2)
        assert exact_moment(h, n, 2.0, UStatKind.RANDOMIZED_DECOUPLED) == approx(n**d * second_moment(h), rel=1e-10)
        g = random_kernel(gen, d, 2, canonical=True)
        assert exact_moment(g, n, 2.0, UStatKind.RANDOMIZED_DECOUPLED) == approx(exact_moment(g, n, 2.0), rel=1e-10)


def test_enumeration_guard(gen):
    h = random_kernel(gen, 2, 4)
    assert enumeration_size(h, 3, UStatKind.RANDOMIZED_DECOUPLED) == 4**6 * 2**6
    with pytest.raises(GuardViolation):
        exact_moment(h, 12, 2.0)


def test_monte_carlo_is_thread_count_independent(gen):
    h = random_kernel(gen, 2, 3, canonical=True)
    config = SampleConfig(6, reps=600, seed=3)
    assert np.array_equal(sample_norms(h, config, workers=1), sample_norms(h, config, workers=4))


def test_monte_carlo_agrees_with_exact(coin):
    config = SampleConfig(8, reps=4096, seed=1)
    report = mc_moment(coin, config, 2.0)
    assert abs(report.estimates["moment"] - 8.0) <= 3.0 * report.ci_half_widths["moment"]
    tail = mc_tail(coin, config, 4.0)
    lo, hi = tail.intervals["tail"]
    exact = exact_tail(coin, 8, 4.0)
    assert lo - 0.02 <= exact <= hi + 0.02


def test_wilson_interval():
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert 0.5 - lo == approx(hi - 0.5)


def test_sample_config_validation():
    with pytest.raises(ValueError):
        SampleConfig(0)
    with pytest.raises(ValueError):
        SampleConfig(4, reps=0)
    with pytest.raises(ValueError):
        SampleConfig(4, kind="sideways")


def test_lil_fair_coin_stays_bounded(coin):
    report = lil_ratio_sequence(coin, n_max=15, reps=32, seed=20240917)
    assert report.ratios.shape == (32, 16)
    assert report.envelope < 4.0
    assert report.trend == "bounded"
    assert [level.n for level in report.levels] == [2**k for k in range(16)]


def test_lil_constant_kernel_diverges():
    constant = Kernel.from_function(lambda x: 1.0, 1, [0.5, 0.5])
    report = lil_ratio_sequence(constant, n_max=12, reps=4)
    assert report.trend == "divergent"
    assert report.slope > 0.25


def test_lil_paths_match_direct_sums(sign2):
    """The incremental path reproduces a direct off-diagonal sum at n = 2^k."""
    report = lil_ratio_sequence(sign2, UStatKind.UNDECOUPLED, n_max=4, reps=2, seed=5)
    config = SampleConfig(16, reps=2, seed=5, kind=UStatKind.UNDECOUPLED)
    columns = draw_sample(sign2, config, 1).columns
    direct = abs(ustat_sum(sign2, config, columns)[0])
    assert report.ratios[1, 4] == approx(direct / (16 * ll(16)))


def test_lil_guard(coin):
    with pytest.raises(GuardViolation):
        lil_ratio_sequence(coin, n_max=21)


def test_diagonal_ratios_decrease(sign2):
    medians = diagonal_ratio_medians(sign2, [4, 16, 64, 256], reps=64)
    values = [m for _, m in medians]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_growth_slope_flat():
    slope, trend = growth_slope(np.ones(10))
    assert slope == approx(0.0, abs=1e-12)
    assert trend == "bounded"


def test_draws_use_independent_streams(gen):
    h = random_kernel(gen, 1, 4)
    a = draw_sample(h, SampleConfig(32, seed=1), 0).columns
    b = draw_sample(h, SampleConfig(32, seed=1), 1).columns
    assert not np.array_equal(a, b)
    assert stream(1, 0).integers(0, 2**31) != stream(1, 1).integers(0, 2**31)


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.integers(2, 6), st.booleans())
def test_undecoupled_sums_ignore_sample_order(seed, d, n, randomized):
    """Off-diagonal sums run over all ordered tuples, so relabeling the draws changes nothing."""
    gen = stream(seed, 0)
    h = random_kernel(gen, d, 3, 2)
    kind = UStatKind.RANDOMIZED_UNDECOUPLED if randomized else UStatKind.UNDECOUPLED
    config = SampleConfig(n, kind=kind)
    sample = draw_sample(h, config, 0)
    column = sample.columns[0]
    signs = sample.signs[0] if randomized else None
    perm = gen.permutation(n)
    base = ustat_sum(h.symmetrize(), config, column, signs)
    moved = ustat_sum(h.symmetrize(), config, column[perm], None if signs is None else signs[perm])
    assert moved == approx(base, rel=1e-10, abs=1e-10)
    # a non-symmetric kernel gives the same sum as its symmetrization
    assert ustat_sum(h, config, column, signs) == approx(base, rel=1e-10, abs=1e-10)
