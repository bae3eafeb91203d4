"""Counter-based random streams keyed by integer tuples.

Every stream is a Philox-4x64 generator seeded through numpy's SeedSequence, so
a key such as (seed, molecule, iteration, sample) always yields the same numbers
on every platform, independent of what other streams were drawn.
"""
from __future__ import annotations

import numpy as np


def stream(*key: int) -> np.random.Generator:
    if any(int(k) < 0 for k in key):
        raise ValueError(f"stream keys must be non-negative, got {key}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def generator_state(g: np.random.Generator) -> dict:
    return g.bit_generator.state


def restore_generator(state: dict) -> np.random.Generator:
    bg = np.random.Philox()
    bg.state = state
    return np.random.Generator(bg)
