"""Counter-based random streams: one independent generator per (seed, rep)."""

from __future__ import annotations

import numpy as np

SEED_BITS = 64


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed < 2**SEED_BITS:
        raise ValueError(f"seed must lie in [0, 2^64), got {seed}")
    return seed


def rep_generator(seed: int, rep: int) -> np.random.Generator:
    """Philox stream keyed by seed in the low 64 bits and the rep index in the high 64.

    Streams for different reps never overlap, and a rep's draws do not depend
    on which other reps were run or in what order.
    """
    seed = check_seed(seed)
    if rep < 0:
        raise ValueError(f"rep index must be nonnegative, got {rep}")
    return np.random.Generator(np.random.Philox(key=(int(rep) << SEED_BITS) | seed))
