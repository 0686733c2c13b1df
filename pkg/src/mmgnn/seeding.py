"""Named, splittable randomness.

Every random consumer (split, init, dropout, synthetic data, benchmarks) asks
for its own stream by name, so re-seeding one component never shifts another.
"""

from __future__ import annotations

import zlib

import numpy as np

SPLIT_STREAM = "split"
INIT_STREAM = "init"
DROPOUT_STREAM = "dropout"
SYNTH_STREAM = "synth"


def stream_seed(seed: int, stream: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(stream.encode("utf-8"))])


def rng_for(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(stream_seed(seed, stream))
