"""Counter-based random streams.

Every trajectory gets its own generator keyed by ``(master_seed, index)`` so
results never depend on how work is split across threads.
"""

import numpy as np

_BOOTSTRAP_TAG = 1 << 40


def stream(master_seed, index):
    """Return an independent Philox generator for ``(master_seed, index)``."""
    seq = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(index)])
    return np.random.Generator(np.random.Philox(seq))


def bootstrap_stream(master_seed, key):
    """Generator reserved for bootstrap resampling of table row ``key``."""
    return stream(master_seed, _BOOTSTRAP_TAG + int(key))
