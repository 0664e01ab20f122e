"""
Counter-based random streams.

Every random draw of the package comes from :func:`stream`, keyed by the
master seed and a tuple of nonnegative integers such as
``(rep, level, column)``. Streams for different keys are statistically
independent and do not depend on the order in which they are created, so
work can be split across threads without changing any result.
"""

from typing import Sequence

import numpy as np

#: Fixed master seed used when none is given.
DEFAULT_SEED: int = 20240917


def stream(seed: int, *key: int) -> np.random.Generator:
    """A Philox generator for the stream ``key`` under master ``seed``.

    Examples:
        >>> a = stream(7, 1, 2).integers(0, 1000, 4)
        >>> b = stream(7, 1, 2).integers(0, 1000, 4)
        >>> bool((a == b).all())
        True
    """
    if seed < 0 or any(k < 0 for k in key):
        raise ValueError("seed and stream keys must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def rademacher(gen: np.random.Generator, size: Sequence[int]) -> np.ndarray:
    """Independent random signs as floats."""
    return 2.0 * gen.integers(0, 2, size=size) - 1.0


if __name__ == "__main__":
    import doctest

    doctest.testmod()
