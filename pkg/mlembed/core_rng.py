from __future__ import annotations

import numpy as np

# Stream tags: one per consumer so streams never overlap.
STREAM_WALK = 1
STREAM_TRAIN = 2
STREAM_SPLIT = 3
STREAM_CANDIDATES = 4
STREAM_SYNTHETIC = 5
STREAM_LAYER = 6
STREAM_EXPERIMENT = 7


def make_stream(seed: int, stream: int, *keys: int) -> np.random.Generator:
    entropy = [int(seed), int(stream)] + [int(key) for key in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, stream: int, *keys: int) -> int:
    entropy = [int(seed), int(stream)] + [int(key) for key in keys]
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint32)
    return int(state[0])
