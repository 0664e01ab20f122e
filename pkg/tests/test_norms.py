import math

import numpy as np
import pytest
from pytest import approx

from ustat_lil.errors import GuardViolation
from ustat_lil.indexing import Partition, PartitionSpec, enumerate_partition_specs
from ustat_lil.kernel import Kernel, product_law, random_kernel, second_moment
from ustat_lil.norms import (
    all_norms,
    array_norm,
    bruteforce_norm_oracle,
    chaos_star_norm,
    evaluate_objective,
    norm_kj,
    norm_kju,
    replicated_array_norm,
    saturation_level,
)
from ustat_lil.rng import stream


def test_full_spec_is_l2_norm(gen):
    for d in (1, 2, 3):
        h = random_kernel(gen, d, 3, 2)
        full = PartitionSpec.of(d, range(1, d + 1), [])
        assert norm_kj(h, full).value == approx(math.sqrt(second_moment(h)), rel=1e-12)


def test_operator_norm_matches_svd():
    """(K={}, J={{1},{2}}) of a scalar order-2 kernel is the top singular value of sqrt(P) h sqrt(P)."""
    spec = PartitionSpec.of(2, [], [{1}, {2}])
    for index in range(20):
        gen = stream(99, index)
        h = random_kernel(gen, 2, int(gen.integers(2, 6)))
        root = np.sqrt(h.probs)
        top = np.linalg.svd(root[:, None] * h.values[..., 0] * root[None, :], compute_uv=False)[0]
        assert norm_kj(h, spec).value == approx(top, rel=1e-8)


def test_truncated_example(skewed):
    spec = PartitionSpec.of(1, [], [{1}])
    assert norm_kju(skewed, spec, 1.0).value == approx(1.5, abs=1e-6)
    assert norm_kju(skewed, spec, 2.0).value == approx(math.sqrt(3.0), abs=1e-8)
    assert bruteforce_norm_oracle(skewed, spec, 1.0) == approx(1.5, abs=1e-6)
    assert saturation_level(skewed, spec) == approx(2.0)


def test_solver_between_oracle_and_l2():
    """Solver values dominate the sampled oracle and never exceed sqrt(E|h|^2)."""
    for index in range(6):
        gen = stream(7, index)
        d = 1 + index % 3
        h = random_kernel(gen, d, 2, 1 + index % 2)
        top = math.sqrt(second_moment(h))
        for spec in enumerate_partition_specs(d):
            value = norm_kj(h, spec).value
            assert value >= bruteforce_norm_oracle(h, spec, samples=64) - 1e-9
            assert value <= top + 1e-9


def test_truncated_norms_grow_and_saturate(gen):
    h = random_kernel(gen, 2, 3, canonical=True)
    for spec in enumerate_partition_specs(2):
        top = saturation_level(h, spec)
        levels = np.geomspace(0.5, top, 6)
        values = []
        warm = None
        for u in levels:
            result = norm_kju(h, spec, float(u), warm=warm)
            warm = result.certificate
            values.append(result.value)
        assert np.all(np.diff(values) >= -1e-9)
        assert values[-1] == approx(norm_kj(h, spec).value, rel=1e-8, abs=1e-12)


def test_certificate_attains_value(gen):
    h = random_kernel(gen, 2, 3, 2)
    for spec in enumerate_partition_specs(2):
        result = norm_kj(h, spec)
        assert evaluate_objective(h, spec, result.certificate) == approx(result.value, rel=1e-9, abs=1e-12)


def test_certificate_is_feasible_under_caps(gen):
    h = random_kernel(gen, 2, 3)
    u = 1.2
    spec = PartitionSpec.of(2, [], [{1}, {2}])
    bundle = norm_kju(h, spec, u).certificate
    for f in bundle.f:
        assert np.dot(h.probs, f**2) <= 1.0 + 1e-9
        assert np.max(np.abs(f)) <= u + 1e-9
    assert np.linalg.norm(bundle.phi) <= 1.0 + 1e-12


def test_zero_kernel():
    h = Kernel.zeros(2, [0.5, 0.5], q=2)
    assert all(r.value == 0.0 for r in all_norms(h))
    assert all(r.value == 0.0 for r in all_norms(h, u=1.0))


def test_norms_are_thread_count_independent(gen):
    h = random_kernel(gen, 3, 2, 2)
    spec = PartitionSpec.of(3, {1}, [{2}, {3}])
    one = norm_kj(h, spec, workers=1)
    many = norm_kj(h, spec, workers=4)
    assert one.value == many.value


def test_norm_is_linear_in_scale(gen):
    h = random_kernel(gen, 2, 3)
    spec = PartitionSpec.of(2, [], [{1}, {2}])
    assert norm_kju(h.scaled(2.0), spec, 1.5).value == approx(2.0 * norm_kju(h, spec, 1.5).value, rel=1e-8)


def test_spec_order_mismatch(coin):
    with pytest.raises(ValueError):
        norm_kj(coin, PartitionSpec.of(2, {1, 2}, []))
    with pytest.raises(ValueError):
        norm_kju(coin, PartitionSpec.of(1, {1}, []), 0.0)


def test_oracle_guard():
    h = Kernel(np.zeros((9, 9, 1)), random_kernel(stream(1), 2, 9).law)
    with pytest.raises(GuardViolation):
        bruteforce_norm_oracle(h, PartitionSpec.of(2, [], [{1, 2}]))


def test_array_norms():
    u = np.array([1.0, 2.0, 2.0])
    v = np.array([3.0, 4.0])
    a = np.outer(u, v)
    assert array_norm(a, Partition.of([{1}, {2}])) == approx(15.0, rel=1e-10)
    assert array_norm(a, Partition.of([{1, 2}])) == approx(15.0)


def test_array_norms_of_rectangular_arrays(gen):
    a = gen.standard_normal((4, 2))
    top = np.linalg.svd(a, compute_uv=False)[0]
    assert array_norm(a, Partition.of([{1}, {2}])) == approx(top, rel=1e-8)
    assert array_norm(a, Partition.of([{1, 2}])) == approx(np.linalg.norm(a))
    b = gen.standard_normal((2, 3, 4))
    top = np.linalg.svd(b.reshape(6, 4), compute_uv=False)[0]
    assert array_norm(b, Partition.of([{1, 2}, {3}])) == approx(top, rel=1e-8)


def test_chaos_norm_of_rectangular_arrays(gen):
    a = gen.standard_normal((3, 2, 2))
    assert chaos_star_norm(a, PartitionSpec.of(2, {1, 2}, []), 2.0) == approx(np.linalg.norm(a))
    # p = 1 leaves the unit ball on the block, so this is a plain operator norm
    top = np.linalg.svd(np.transpose(a, (0, 2, 1)).reshape(6, 2), compute_uv=False)[0]
    assert chaos_star_norm(a, PartitionSpec.of(2, {1}, [{2}]), 1.0) == approx(top, rel=1e-8)


def test_chaos_order_one_is_euclidean(gen):
    a = gen.standard_normal((5, 3))
    assert chaos_star_norm(a, PartitionSpec.of(1, {1}, []), 2.0) == approx(np.linalg.norm(a))


def test_chaos_scaling_in_p():
    """Growing p by a factor t grows the starred norm by at most t^(deg J / 2)."""
    for index in range(10):
        gen = stream(5, index)
        a = gen.standard_normal((3, 3, 1))
        for spec in enumerate_partition_specs(2):
            low = chaos_star_norm(a, spec, 2.0)
            high = chaos_star_norm(a, spec, 8.0)
            assert high <= 4.0 ** (spec.deg / 2.0) * low * (1.0 + 1e-6) + 1e-12


def test_replicated_array_scaling():
    h = random_kernel(stream(11), 2, 2)
    for spec in enumerate_partition_specs(2):
        base = norm_kj(h, spec).value
        for n in (2, 3, 4):
            assert replicated_array_norm(h, spec, n) == approx(base * n, rel=1e-6)


def test_weighted_tensor_uses_product_law(skewed):
    spec = PartitionSpec.of(1, {1}, [])
    assert norm_kj(skewed, spec).value ** 2 == approx(float(np.sum(product_law(skewed.probs, 1) * skewed.values[:, 0] ** 2)))


def test_norm_solver_benchmark(benchmark):
    h = random_kernel(stream(3), 3, 3, 2, canonical=True)
    spec = PartitionSpec.of(3, [], [{1}, {2}, {3}])
    result = benchmark(norm_kj, h, spec)
    assert result.value <= math.sqrt(second_moment(h)) + 1e-9
