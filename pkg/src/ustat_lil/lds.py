"""
Low-discrepancy directions

Sampled test functions for the brute-force norm oracle are drawn from a
Halton sequence instead of pseudo-random numbers, so that the oracle covers
its search space evenly and gives the same answer on every platform.

The core generator is the Van der Corput sequence: an integer is written in
a given base, its digits are reversed and placed after the radix point. In
base 2 the sequence starts 1/2, 1/4, 3/4, 1/8, 5/8, ... The Halton sequence
uses one Van der Corput generator per dimension with pairwise coprime bases
(the first primes). :class:`SphereN` maps Halton points through the inverse
normal distribution function and normalizes the result, which yields
quasi-random directions on the unit sphere of any dimension.

Each generator has ``pop()`` for the next value and ``reseed()`` to restart
the stream at a given index.
"""

from typing import List, Sequence

import numpy as np
from scipy.special import ndtri


def vdc(k: int, base: int = 2) -> float:
    """Van der Corput sequence

    The function `vdc` converts a given number `k` from base `base` to a floating point number.

    :param k: index of the element in the sequence

    :type k: int

    :param base: base of the digit expansion, defaults to 2

    :type base: int (optional)

    :return: the radical inverse of `k` in base `base`

    Examples:
        >>> vdc(11, 2)
        0.8125
        >>> vdc(1, 3)
        0.3333333333333333
    """
    res = 0.0
    denom = 1.0
    while k != 0:
        denom *= base
        k, remainder = divmod(k, base)
        res += remainder / denom
    return res


class VdCorput:
    """Van der Corput sequence generator

    Examples:
        >>> vgen = VdCorput(2)
        >>> vgen.reseed(0)
        >>> [vgen.pop() for _ in range(5)]
        [0.5, 0.25, 0.75, 0.125, 0.625]
    """

    def __init__(self, base: int = 2) -> None:
        """
        :param base: base of the sequence, an integer at least 2, defaults to 2

        :type base: int (optional)
        """
        if base < 2:
            raise ValueError("base must be at least 2")
        self.count: int = 0
        self.base: int = base

    def pop(self) -> float:
        """
        Next value of the sequence; index 0 is skipped.

        Examples:
            >>> vgen = VdCorput(3)
            >>> vgen.pop()
            0.3333333333333333
        """
        self.count += 1  # ignore 0
        return vdc(self.count, self.base)

    def reseed(self, seed: int) -> None:
        """
        Restart the sequence so that the next ``pop()`` returns element ``seed + 1``.

        :param seed: new starting index

        :type seed: int
        """
        self.count = seed


class HaltonN:
    """HaltonN sequence generator

    Examples:
        >>> hgen = HaltonN([2, 3, 5])
        >>> hgen.reseed(0)
        >>> for _ in range(2):
        ...     print(hgen.pop())
        ...
        [0.5, 0.3333333333333333, 0.2]
        [0.25, 0.6666666666666666, 0.4]
    """

    vdcs: List[VdCorput]

    def __init__(self, base: Sequence[int]) -> None:
        """
        :param base: one base per dimension, pairwise coprime

        :type base: Sequence[int]
        """
        self.vdcs = [VdCorput(b) for b in base]

    def pop(self) -> List[float]:
        """
        Next point of the sequence, one coordinate per base.
        """
        return [vdc.pop() for vdc in self.vdcs]

    def reseed(self, seed: int) -> None:
        for vdc in self.vdcs:
            vdc.reseed(seed)


def primes(k: int) -> List[int]:
    """The first ``k`` prime numbers, by trial division.

    Examples:
        >>> primes(6)
        [2, 3, 5, 7, 11, 13]
        >>> primes(0)
        []
    """
    found: List[int] = []
    candidate = 2
    while len(found) < k:
        if all(candidate % p for p in found if p * p <= candidate):
            found.append(candidate)
        candidate += 1
    return found


class SphereN:
    """Quasi-random unit directions in ``R^dim``

    Each Halton point is pushed through the inverse normal distribution
    function coordinatewise and normalized, a deterministic stand-in for a
    normalized Gaussian vector.

    Examples:
        >>> sgen = SphereN(3)
        >>> sgen.reseed(0)
        >>> point = sgen.pop()
        >>> point.shape
        (3,)
        >>> float(np.round(np.linalg.norm(point), 12))
        1.0
    """

    def __init__(self, dim: int) -> None:
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        self.dim = dim
        self.halton = HaltonN(primes(dim))

    def pop(self) -> np.ndarray:
        """Next direction; a length-``dim`` numpy vector of unit norm."""
        point = ndtri(np.array(self.halton.pop()))
        size = np.linalg.norm(point)
        return point / size if size > 0.0 else point

    def reseed(self, seed: int) -> None:
        self.halton.reseed(seed)


if __name__ == "__main__":
    import doctest

    doctest.testmod()
