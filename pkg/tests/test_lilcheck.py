import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx

from ustat_lil.errors import ShapeMismatch
from ustat_lil.indexing import PartitionSpec
from ustat_lil.kernel import (
    Kernel,
    hoeffding_project,
    is_canonical,
    ll_weighted_second_moment,
    random_kernel,
    second_moment,
)
from ustat_lil.lilcheck import (
    default_u_grid,
    growth_curve,
    heavy_tail_kernel,
    heavy_tail_sequence,
    lil_certificate,
    truncation_trend,
)
from ustat_lil.norms import saturation_level
from ustat_lil.rng import stream

BLOCK = PartitionSpec.of(1, [], [{1}])


def test_zero_kernel_certificate():
    cert = lil_certificate(Kernel.zeros(2, [0.25, 0.75]), [1.0, 2.0, 8.0])
    assert cert.holds
    assert cert.d_star == 0.0
    assert cert.integrability_value == 0.0
    assert cert.scope == "decoupled_and_undecoupled"


def test_constant_kernel_is_not_degenerate():
    h = Kernel.from_function(lambda x, y: 1.0, 2, [0.5, 0.5])
    cert = lil_certificate(h, [1.0, 4.0])
    assert not cert.degenerate
    assert not cert.holds
    assert cert.canonical.violation == approx(1.0)


def test_projected_symmetric_kernel(gen):
    h = hoeffding_project(random_kernel(gen, 2, 3).symmetrize())
    cert = lil_certificate(h, [1.0, 2.0, 4.0, 16.0])
    assert cert.degenerate and cert.holds
    assert cert.symmetric
    assert len(cert.curves) == 5
    assert cert.d_star_spec is not None
    assert cert.d_star >= max(c.normalized[0] for c in cert.curves)


def test_asymmetric_scope(gen):
    h = hoeffding_project(random_kernel(gen, 2, 3))
    assert not h.is_symmetric()
    assert lil_certificate(h, [1.0, 4.0]).scope == "decoupled_only"


def test_certificate_does_not_depend_on_workers(gen):
    h = hoeffding_project(random_kernel(gen, 2, 3, 2))
    grid = [1.0, 3.0, 9.0]
    one = lil_certificate(h, grid, seed=5)
    two = lil_certificate(h, grid, seed=5, workers=2)
    assert [c.maximum for c in one.curves] == [c.maximum for c in two.curves]


def test_certificate_envelope(coin):
    cert = lil_certificate(coin, [1.0, 2.0], n_max=6, reps=4, seed=3)
    assert cert.envelope is not None and cert.envelope > 0.0
    assert lil_certificate(coin, [1.0, 2.0]).envelope is None


def test_growth_curve_saturates(skewed):
    curve = growth_curve(skewed, BLOCK, [1.0, 2.0, 4.0, 8.0])
    assert curve.saturation_u == approx(2.0)
    assert np.all(np.diff(curve.values) >= 0.0)
    assert curve.values[-1] == approx(math.sqrt(3.0), rel=1e-8)
    assert curve.converged


def test_growth_values_scale_linearly(gen):
    h = hoeffding_project(random_kernel(gen, 2, 3))
    grid = [1.0, 2.0, 5.0]
    for spec in (PartitionSpec.of(2, [], [{1}, {2}]), PartitionSpec.of(2, {1}, [{2}])):
        base = growth_curve(h, spec, grid).values
        double = growth_curve(h.scaled(2.0), spec, grid).values
        assert double == approx(2.0 * base, rel=1e-8, abs=1e-12)


def test_product_kernel_operator_norm():
    """f(x) f(y) has operator norm E f^2 once u passes the saturation level."""
    f = np.array([-2.0, 1.0, 1.0])
    probs = [0.25, 0.25, 0.5]
    h = Kernel.from_function(lambda x, y: f[x] * f[y], 2, probs, symmetric=True)
    spec = PartitionSpec.of(2, [], [{1}, {2}])
    u = 2.0 * saturation_level(h, spec)
    curve = growth_curve(h, spec, [u])
    assert curve.normalized[-1] == approx(float(np.dot(probs, f**2)), rel=1e-8)


def test_grid_validation(skewed):
    for grid in ([], [2.0, 1.0], [0.0, 1.0], [1.0, 1.0]):
        with pytest.raises(ValueError):
            growth_curve(skewed, BLOCK, grid)
    grid = default_u_grid(skewed, 5)
    assert len(grid) == 5 and grid[0] == approx(1.0)


def test_trend_stable_on_repeats(gen):
    h = random_kernel(gen, 1, 5)
    seq = [h.restrict(2), h.restrict(3), h, h]
    result = truncation_trend(seq, BLOCK, [1.0, 2.0, 4.0])
    assert result.trend == "stable"
    assert len(result.maxima) == len(result.raw_maxima) == 4


def test_trend_growing_on_heavy_tail():
    seq = heavy_tail_sequence([2, 4, 6])
    result = truncation_trend(seq, BLOCK)
    assert result.trend == "growing"
    for h, top in zip(seq, result.maxima):
        assert top == approx(math.sqrt(second_moment(h)), rel=1e-6)


def test_trend_shape_checks(gen):
    h1 = random_kernel(gen, 1, 3)
    h2 = random_kernel(gen, 2, 3)
    with pytest.raises(ShapeMismatch):
        truncation_trend([h1, h2], BLOCK, [1.0])
    with pytest.raises(ShapeMismatch):
        truncation_trend([h1, h1.restrict(2)], BLOCK, [1.0])
    with pytest.raises(ShapeMismatch):
        truncation_trend([h2], BLOCK, [1.0])
    with pytest.raises(ValueError):
        truncation_trend([], BLOCK, [1.0])


def test_heavy_tail_second_moment_diverges_slowly():
    seq = heavy_tail_sequence([8, 24, 48])
    moments = [second_moment(h) for h in seq]
    ratios = [ll_weighted_second_moment(h) / second_moment(h) for h in seq]
    assert moments[0] < moments[1] < moments[2]
    assert ratios[0] == approx(1.0)
    assert ratios[2] < ratios[1] < ratios[0]


def test_heavy_tail_kernel_shapes():
    h = heavy_tail_kernel(6, 2)
    assert (h.m, h.d, h.q) == (6, 2, 1)
    assert h.is_symmetric()
    assert is_canonical(h).canonical
    assert h.probs.sum() == approx(1.0)
    for m in (1, 3):
        with pytest.raises(ValueError):
            heavy_tail_kernel(m)
    with pytest.raises(ValueError):
        heavy_tail_kernel(4, 0)


@settings(deadline=None, max_examples=15)
@given(st.integers(0, 2**32 - 1), st.integers(3, 4))
def test_d_star_ignores_coordinate_order(seed, m):
    h = hoeffding_project(random_kernel(stream(seed, 0), 2, m))
    swapped = h.permute_coordinates([2, 1])
    grid = [1.0, 2.0, 8.0]
    one = lil_certificate(h, grid)
    two = lil_certificate(swapped, grid)
    assert two.d_star == approx(one.d_star, rel=1e-6, abs=1e-12)
    assert two.holds == one.holds
