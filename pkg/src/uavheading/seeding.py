"""Named random substreams derived from a single master seed."""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, name: str, *index: int) -> np.random.Generator:
    """Independent generator for (seed, name, *index).

    Streams with different names or indices never share state, so e.g. the
    detector noise of frame 17 does not depend on how many frames came before.
    """
    key = (zlib.crc32(name.encode()), *(int(i) for i in index))
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=key))
