"""
Combinatorics of coordinate sets, partitions and multi-indices.

Coordinates are labelled ``1..d``. A coordinate set is a ``frozenset`` of
labels, a :class:`Partition` is a tuple of disjoint nonempty blocks and a
:class:`PartitionSpec` is a pair ``(K, J)`` where ``J`` partitions the
complement of ``K`` in ``{1..d}``. These pairs index every norm, bound term
and growth curve of the package.

Partitions are produced in restricted-growth-string order over the sorted
ground set, which lists blocks by their smallest element. Partition specs are
ordered by the size of ``K``, then lexicographically by ``K``, then by the
partition order, so that reports are byte-stable across runs.

Multi-index streams are lazy: :func:`iterate_indices` never builds the
``n**d`` grid in memory.
"""

import itertools
from dataclasses import dataclass
from math import comb, factorial, perm
from typing import FrozenSet, Iterable, Iterator, List, Tuple

CoordSet = FrozenSet[int]
MultiIndex = Tuple[int, ...]

EMPTY: CoordSet = frozenset()


def ground(d: int) -> CoordSet:
    """The full coordinate set ``{1..d}``.

    Examples:
        >>> sorted(ground(3))
        [1, 2, 3]
    """
    return frozenset(range(1, d + 1))


def complement(coords: Iterable[int], d: int) -> CoordSet:
    """Complement of ``coords`` in ``{1..d}``.

    Examples:
        >>> sorted(complement({2}, 3))
        [1, 3]
    """
    coords = frozenset(coords)
    if not coords <= ground(d):
        raise ValueError(f"coordinates {sorted(coords)} not within 1..{d}")
    return ground(d) - coords


def all_subsets(d: int) -> List[CoordSet]:
    """Every subset of ``{1..d}`` ordered by size, then lexicographically.

    Examples:
        >>> [sorted(s) for s in all_subsets(2)]
        [[], [1], [2], [1, 2]]
    """
    return [
        frozenset(c)
        for size in range(d + 1)
        for c in itertools.combinations(range(1, d + 1), size)
    ]


def proper_subsets(d: int) -> List[CoordSet]:
    """Every ``I`` strictly contained in ``{1..d}``, including the empty set."""
    return all_subsets(d)[:-1]


def format_coords(coords: Iterable[int]) -> str:
    """Render a coordinate set as ``{1,2}``.

    Examples:
        >>> format_coords({2, 1})
        '{1,2}'
        >>> format_coords(set())
        '{}'
    """
    return "{" + ",".join(str(c) for c in sorted(coords)) + "}"


@dataclass(frozen=True)
class Partition:
    """A partition of a finite coordinate set into nonempty blocks.

    Blocks are kept sorted by their smallest element; the empty partition
    (no blocks) partitions the empty set and has degree 0.

    Examples:
        >>> part = Partition.of([{3}, {1, 2}])
        >>> part.deg
        2
        >>> str(part)
        '{{1,2},{3}}'
    """

    blocks: Tuple[CoordSet, ...]

    def __post_init__(self) -> None:
        seen: set = set()
        for block in self.blocks:
            if not block:
                raise ValueError("partition blocks must be nonempty")
            if seen & block:
                raise ValueError("partition blocks must be pairwise disjoint")
            seen |= block
        ordered = tuple(sorted(self.blocks, key=min))
        object.__setattr__(self, "blocks", ordered)

    @classmethod
    def of(cls, blocks: Iterable[Iterable[int]]) -> "Partition":
        return cls(tuple(frozenset(b) for b in blocks))

    @property
    def deg(self) -> int:
        return len(self.blocks)

    @property
    def support(self) -> CoordSet:
        """Union of all blocks."""
        return frozenset().union(*self.blocks)

    def __str__(self) -> str:
        return "{" + ",".join(format_coords(b) for b in self.blocks) + "}"


EMPTY_PARTITION = Partition(())


@dataclass(frozen=True)
class PartitionSpec:
    """A pair ``(K, J)`` indexing one partition norm of an order-``d`` kernel.

    ``K`` carries the Hilbert-space valued test function; ``J`` partitions
    the remaining coordinates into the blocks carrying scalar test functions.

    Examples:
        >>> spec = PartitionSpec.of(2, {1}, [{2}])
        >>> spec.label()
        'K={1};J={{2}}'
        >>> spec.deg
        1
        >>> PartitionSpec.of(2, {1, 2}, []).is_full
        True
    """

    d: int
    K: CoordSet
    J: Partition

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError("order d must be at least 1")
        if self.K & self.J.support:
            raise ValueError("K must be disjoint from the blocks of J")
        if self.K | self.J.support != ground(self.d):
            raise ValueError(f"K and the blocks of J must cover 1..{self.d}")

    @classmethod
    def of(cls, d: int, K: Iterable[int], J: Iterable[Iterable[int]]) -> "PartitionSpec":
        return cls(d, frozenset(K), Partition.of(J))

    @property
    def deg(self) -> int:
        return self.J.deg

    @property
    def is_full(self) -> bool:
        """True for ``(I_d, {})``, the plain L2 norm."""
        return len(self.K) == self.d

    def label(self) -> str:
        return f"K={format_coords(self.K)};J={self.J}"

    def __str__(self) -> str:
        return self.label()


def enumerate_partitions(coords: Iterable[int]) -> List[Partition]:
    """All set partitions of ``coords`` in restricted-growth-string order.

    :param coords: the ground set (labels need not be contiguous)

    :type coords: Iterable[int]

    :return: list of partitions; the empty set yields the single empty
             partition

    Examples:
        >>> [str(p) for p in enumerate_partitions({1, 2, 3})]
        ['{{1,2,3}}', '{{1,2},{3}}', '{{1,3},{2}}', '{{1},{2,3}}', '{{1},{2},{3}}']
        >>> enumerate_partitions(set())
        [Partition(blocks=())]
    """
    elems = sorted(set(coords))
    if not elems:
        return [EMPTY_PARTITION]
    result: List[Partition] = []

    def extend(rgs: List[int], top: int) -> None:
        if len(rgs) == len(elems):
            blocks: List[List[int]] = [[] for _ in range(top + 1)]
            for elem, label in zip(elems, rgs):
                blocks[label].append(elem)
            result.append(Partition.of(blocks))
            return
        for label in range(top + 2):
            extend(rgs + [label], max(top, label))

    extend([0], 0)
    return result


def enumerate_partition_specs(d: int) -> List[PartitionSpec]:
    """Every ``(K, J)`` with ``K ⊆ {1..d}`` and ``J`` a partition of the rest.

    Examples:
        >>> [s.label() for s in enumerate_partition_specs(2)]
        ['K={};J={{1,2}}', 'K={};J={{1},{2}}', 'K={1};J={{2}}', 'K={2};J={{1}}', 'K={1,2};J={}']
        >>> len(enumerate_partition_specs(3))
        15
    """
    if d < 1:
        raise ValueError("order d must be at least 1")
    return [
        PartitionSpec(d, K, J)
        for K in all_subsets(d)
        for J in enumerate_partitions(complement(K, d))
    ]


def bell_number(k: int) -> int:
    """Number of partitions of a ``k``-element set, by the Bell triangle.

    Examples:
        >>> [bell_number(k) for k in range(7)]
        [1, 1, 2, 5, 15, 52, 203]
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    row = [1]
    for _ in range(k):
        nxt = [row[-1]]
        for value in row:
            nxt.append(nxt[-1] + value)
        row = nxt
    return row[0]


def partition_spec_count(d: int) -> int:
    """``sum_j C(d, j) B_{d-j}``, the number of partition specs of order d."""
    return sum(comb(d, j) * bell_number(d - j) for j in range(d + 1))


def falling_factorial(n: int, d: int) -> int:
    """``n (n-1) ... (n-d+1)``, zero when ``n < d``.

    Examples:
        >>> falling_factorial(5, 3)
        60
        >>> falling_factorial(1, 2)
        0
    """
    return perm(n, d) if n >= d else 0


def mobius_weight(partition: Partition) -> int:
    """Möbius coefficient of ``partition`` against the all-singletons one.

    Summing ``mobius_weight(P)`` times the sum over indices constant on the
    blocks of ``P`` gives the sum over pairwise distinct indices.

    Examples:
        >>> mobius_weight(Partition.of([{1}, {2}]))
        1
        >>> mobius_weight(Partition.of([{1, 2, 3}]))
        2
    """
    weight = 1
    for block in partition.blocks:
        size = len(block)
        weight *= (-1) ** (size - 1) * factorial(size - 1)
    return weight


def is_offdiagonal(index: MultiIndex) -> bool:
    """True iff all coordinates of ``index`` are distinct."""
    return len(set(index)) == len(index)


def iterate_indices(n: int, d: int, offdiag_only: bool = False) -> Iterator[MultiIndex]:
    """Lazily stream the multi-indices ``i`` with ``|i| <= n``.

    :param n: sample size, indices run over ``1..n``
    :param d: number of coordinates
    :param offdiag_only: restrict to pairwise distinct coordinates

    :return: iterator of ``d``-tuples in lexicographic order

    Examples:
        >>> list(iterate_indices(2, 2, offdiag_only=True))
        [(1, 2), (2, 1)]
        >>> sum(1 for _ in iterate_indices(2, 2))
        4
        >>> list(iterate_indices(1, 2, offdiag_only=True))
        []
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be at least 1")
    labels = range(1, n + 1)
    if offdiag_only:
        return itertools.permutations(labels, d)
    return itertools.product(labels, repeat=d)


if __name__ == "__main__":
    import doctest

    doctest.testmod()
