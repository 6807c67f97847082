"""Counter-based seed derivation.

Every random stream in the package is a :class:`numpy.random.Generator`
(PCG64) seeded from a :class:`numpy.random.SeedSequence` built from the
global seed plus integer keys, so the stream for ``(seed, key...)`` never
depends on evaluation order or on how work is split across processes.
"""

import numpy as np


def derive_seed(seed, *keys):
    """Return a 63-bit integer seed derived from ``seed`` and ``keys``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed, *keys):
    """Return a PCG64 generator for the substream ``(seed, *keys)``."""
    return np.random.default_rng(np.random.SeedSequence(
        [int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)]
    ))
