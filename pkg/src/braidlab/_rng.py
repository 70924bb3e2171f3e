"""Seeded random streams.

All randomness goes through numpy's PCG64 bit generator seeded by a
``SeedSequence``.  Child streams are derived with ``spawn_key`` so that the
stream for, say, trial ``t`` of a simulation depends only on
``(master_seed, t)`` and never on scheduling order.
"""

import numpy as np


def make_rng(seed, *key):
    """Return a Generator for ``seed`` and an optional integer spawn key."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def child_seed(seed, *key):
    """A 64-bit integer seed derived from ``(seed, *key)``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
