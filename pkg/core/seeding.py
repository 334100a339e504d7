from __future__ import annotations

import numpy as np


def derive_rng(seed: int, *tags: int) -> np.random.Generator:
    """
    Deterministic child generator for (seed, tag, tag, ...).

    Streams for different tags are independent, so initializing component 1
    never shifts the draws of component 0.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def derive_seed(seed: int, *tags: int) -> int:
    """Integer seed derived the same way as ``derive_rng``."""
    seq = np.random.SeedSequence([int(seed), *map(int, tags)])
    return int(seq.generate_state(1, dtype=np.uint32)[0])
