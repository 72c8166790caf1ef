"""
Seeded random number generation.

All randomness in the toolkit flows through ``numpy.random.Generator``
instances created here, so a seed fully determines every output.
"""

from typing import List

import numpy as np


def get_rng(seed: int) -> np.random.Generator:
    """Get a numpy generator for the given seed.

    Args:
        seed: Non-negative integer seed.

    Returns:
        A fresh ``numpy.random.Generator``.
    """
    return np.random.default_rng(seed)


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Derive ``count`` independent child seeds from one base seed.

    Children come from ``SeedSequence.spawn`` so they are statistically
    independent and stable across runs.

    Args:
        seed: Base seed.
        count: Number of child seeds.

    Returns:
        List of 63-bit integer seeds.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) >> 1 for child in children]
