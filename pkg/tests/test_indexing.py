import itertools
from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ustat_lil.indexing import (
    Partition,
    PartitionSpec,
    all_subsets,
    bell_number,
    complement,
    enumerate_partition_specs,
    enumerate_partitions,
    falling_factorial,
    ground,
    is_offdiagonal,
    iterate_indices,
    mobius_weight,
    partition_spec_count,
    proper_subsets,
)

BELL = [1, 1, 2, 5, 15, 52, 203]


def test_bell_triangle():
    for k, expected in enumerate(BELL):
        assert bell_number(k) == expected
        assert len(enumerate_partitions(range(1, k + 1))) == expected


def test_partition_spec_count():
    for d in range(1, 6):
        total = sum(comb(d, j) * BELL[d - j] for j in range(d + 1))
        assert partition_spec_count(d) == total
        assert len(enumerate_partition_specs(d)) == total


def test_partitions_are_distinct_and_cover():
    parts = enumerate_partitions({1, 2, 3, 4})
    assert len({str(p) for p in parts}) == len(parts)
    for part in parts:
        assert part.support == ground(4)


def test_partition_order_d3():
    assert [str(p) for p in enumerate_partitions({1, 2, 3})] == [
        "{{1,2,3}}",
        "{{1,2},{3}}",
        "{{1,3},{2}}",
        "{{1},{2,3}}",
        "{{1},{2},{3}}",
    ]


def test_spec_order_d2():
    labels = [s.label() for s in enumerate_partition_specs(2)]
    assert labels == [
        "K={};J={{1,2}}",
        "K={};J={{1},{2}}",
        "K={1};J={{2}}",
        "K={2};J={{1}}",
        "K={1,2};J={}",
    ]


def test_spec_d1():
    specs = enumerate_partition_specs(1)
    assert [s.label() for s in specs] == ["K={};J={{1}}", "K={1};J={}"]
    assert specs[-1].is_full
    assert specs[0].deg == 1


def test_spec_rejects_bad_cover():
    with pytest.raises(ValueError):
        PartitionSpec.of(3, {1}, [{2}])
    with pytest.raises(ValueError):
        PartitionSpec.of(2, {1}, [{1, 2}])
    with pytest.raises(ValueError):
        enumerate_partition_specs(0)


def test_partition_rejects_overlap():
    with pytest.raises(ValueError):
        Partition.of([{1, 2}, {2, 3}])
    with pytest.raises(ValueError):
        Partition.of([set()])


def test_subsets():
    assert len(all_subsets(3)) == 8
    assert frozenset({1, 2, 3}) not in proper_subsets(3)
    assert proper_subsets(3)[0] == frozenset()
    assert complement({1, 3}, 3) == frozenset({2})
    with pytest.raises(ValueError):
        complement({4}, 3)


def test_mobius_inversion_counts_distinct_tuples():
    """Moebius weights over all partitions turn the full grid count into the falling factorial."""
    for d in range(1, 5):
        for n in range(1, 6):
            total = sum(mobius_weight(p) * n ** p.deg for p in enumerate_partitions(ground(d)))
            assert total == falling_factorial(n, d)


@given(st.integers(1, 5), st.integers(1, 3))
def test_iterate_indices_offdiag(n, d):
    offdiag = list(iterate_indices(n, d, offdiag_only=True))
    assert len(offdiag) == falling_factorial(n, d)
    assert all(is_offdiagonal(i) for i in offdiag)
    full = list(iterate_indices(n, d))
    assert full == list(itertools.product(range(1, n + 1), repeat=d))
    assert [i for i in full if is_offdiagonal(i)] == offdiag
