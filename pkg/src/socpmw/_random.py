import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part)


def derive_rng(seed: int, *keys) -> np.random.Generator:
    """Independent generator for the stream named by ``(seed, *keys)``.

    Keys may be ints or strings; the same name always yields the same stream
    regardless of which other streams were created before it.
    """
    return np.random.default_rng(np.random.SeedSequence(_key(seed), spawn_key=tuple(_key(k) for k in keys)))
