"""Counter-based random streams, one per trajectory.

Trajectory ``r`` under seed ``s`` draws from Philox with key ``s`` and the
trajectory index in the upper 128 bits of the counter. Streams are fixed by
``(s, r)`` alone, so results do not depend on how trajectories are split
across workers. Each trajectory consumes far fewer than ``2^128`` blocks.
"""

from __future__ import annotations

import numpy as np

SEED_MAX = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trajectory ``index``."""
    if index < 0:
        raise ValueError("trajectory index must be non-negative")
    return np.random.Generator(np.random.Philox(key=check_seed(seed), counter=int(index) << 128))
