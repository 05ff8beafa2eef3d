"""Counter-based random streams.

Every consumer derives its generator from (seed, *path) so that replicas,
grid cells, and purposes get statistically independent streams without any
coordination, and the whole run is reproducible from one 64-bit seed.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *path: int) -> np.random.Generator:
    """A Philox generator keyed by seed and a derivation path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
