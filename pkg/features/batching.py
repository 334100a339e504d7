# features/batching.py
from __future__ import annotations

import math
from typing import Iterator, Sequence

import numpy as np

from core.errors import ArgumentError

from .schema import Dataset, ExampleBatch


def split(
    dataset: Dataset, fractions: Sequence[float], seed: int
) -> tuple[Dataset, Dataset, Dataset]:
    """
    Deterministic shuffled (train, val, test) partition.

    Sizes: val and test take floor(n * fraction); the remainder goes to train.
    """
    if len(fractions) != 3:
        raise ArgumentError(f"expected 3 fractions (train, val, test), got {list(fractions)}")
    if any(f < 0 or not math.isfinite(f) for f in fractions):
        raise ArgumentError(f"fractions must be finite and >= 0, got {list(fractions)}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ArgumentError(f"fractions must sum to 1, got {sum(fractions)!r}")
    if fractions[0] <= 0:
        raise ArgumentError("train fraction must be positive")

    n = len(dataset)
    n_val = int(math.floor(n * fractions[1]))
    n_test = int(math.floor(n * fractions[2]))
    n_train = n - n_val - n_test

    perm = np.random.default_rng(seed).permutation(n)
    return (
        dataset.take(perm[:n_train]),
        dataset.take(perm[n_train : n_train + n_val]),
        dataset.take(perm[n_train + n_val :]),
    )


def batch_iter(
    dataset: Dataset, batch_size: int, shuffle_seed: int | None = None
) -> Iterator[ExampleBatch]:
    """
    One epoch of mini-batches; every row appears exactly once.

    With a seed the row order is a seeded permutation; without one it is the
    stored order (one-epoch streaming mode). The last batch may be short.
    """
    if batch_size < 1:
        raise ArgumentError(f"batch_size must be >= 1, got {batch_size}")
    n = len(dataset)
    if shuffle_seed is None:
        order = np.arange(n)
    else:
        order = np.random.default_rng(shuffle_seed).permutation(n)
    for start in range(0, n, batch_size):
        yield dataset.batch(order[start : start + batch_size])


def n_batches(dataset: Dataset, batch_size: int) -> int:
    return -(-len(dataset) // batch_size)
