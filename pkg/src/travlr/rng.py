"""Deterministic RNG substreams.

All randomness in the package flows through `substream`: a root seed plus an
integer key path yields an independent PCG64 generator. Derivation is
counter-based (SeedSequence spawn keys), so any stream can be reconstructed
in isolation -- workers generating example i never need the state left behind
by example i-1, which is what makes parallel and serial builds byte-identical.
"""

from __future__ import annotations

import numpy as np

# Purpose codes: first component of every key path.
STREAM_PARTITION = 1
STREAM_QUERY_SPLIT = 2
STREAM_EXAMPLE = 3
STREAM_VIEW = 4
STREAM_FEWSHOT = 5

TASK_CODES = {
    "spatiality": 0,
    "cardinality": 1,
    "quantifiers": 2,
    "comparison": 3,
}

SPLIT_CODES = {
    "train": 0,
    "val": 1,
    "ind_test": 2,
    "ood_test": 3,
}


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key path); same inputs, same stream."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def pick(rng: np.random.Generator, items):
    """Uniform choice from a sequence, by index (keeps item types intact)."""
    if not len(items):
        raise ValueError("cannot pick from an empty sequence")
    return items[int(rng.integers(len(items)))]
