"""Counter-based random streams.

Replications are grouped into fixed-size blocks. Each (seed, channel, block)
triple keys its own Philox generator, so a replication's draws depend only
on its index and never on worker count or on how many replications a run
requests in total.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 4096  # replications per block; must stay even (complex draws give pairs)

PATH = 0
PATH_SECOND = 1
PERTURBATION = 2


def block_generator(seed: int, channel: int, block: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(channel), int(block)))
    return np.random.Generator(np.random.Philox(seq))


def block_ranges(replications: int, block_size: int = BLOCK_SIZE):
    """``(block_index, start, stop)`` covering ``range(replications)``."""
    for b, start in enumerate(range(0, replications, block_size)):
        yield b, start, min(start + block_size, replications)
