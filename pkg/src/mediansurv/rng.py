"""Deterministic random-stream derivation.

Every stochastic routine in the package draws from a counter-based Philox
generator whose key is derived from ``(seed, *path)`` through numpy's
SeedSequence.  Streams with distinct paths are independent, and a result
computed from such streams is a pure function of the seed and the structural
indices in the path, never of execution order or worker count.
"""

import numpy as np


def substream(seed, *path):
    """Independent generator for the unit identified by ``(seed, *path)``.

    Parameters
    ----------
    seed : int
        Base seed of the run.
    *path : int or str
        Structural indices (replicate number, study number, purpose tag, ...).
        Strings are folded to integers so call sites can use readable tags.
    """
    key = tuple(_as_index(x) for x in path)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def _as_index(x):
    if isinstance(x, str):
        # stable fold of a short ASCII tag into an integer
        acc = 0
        for ch in x.encode("ascii"):
            acc = (acc * 257 + ch) % (2**63)
        return acc
    return int(x)
