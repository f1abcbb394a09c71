"""Counter-based random streams keyed by index tuples.

Every random draw in the toolkit comes from
``Generator(Philox(SeedSequence([master, *index])))``. The seed sequence
hashes the full entropy list, so the stream for trial ``(master, a, v, k)``
depends only on that tuple and never on scheduling, thread count, or how
many trials other cells ran.
"""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np

SeedKey = Union[int, Sequence[int]]


def seed_entropy(seed: SeedKey) -> list[int]:
    """Flatten a seed key into the entropy list fed to SeedSequence."""
    if isinstance(seed, (int, np.integer)):
        entropy = [int(seed)]
    else:
        entropy = [int(part) for part in seed]
    if not entropy or any(part < 0 for part in entropy):
        raise ValueError(f"seed key must be non-negative integers, got {seed!r}")
    return entropy


def make_generator(seed: SeedKey) -> np.random.Generator:
    """Build the Philox generator for a master seed or an index tuple."""
    sequence = np.random.SeedSequence(seed_entropy(seed))
    return np.random.Generator(np.random.Philox(sequence))


def split_seed(master: int, *index: int) -> tuple[int, ...]:
    """Key of the sub-stream for ``index`` under ``master``."""
    return (int(master), *(int(i) for i in index))
