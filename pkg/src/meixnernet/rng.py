"""Deterministic counter-based random streams.

One global seed keys independent Philox streams per purpose (weight init,
per-epoch dropout, data synthesis), so e.g. evaluation or extra data draws
can never perturb the dropout sequence.
"""

import numpy as np

INIT = 0
DROPOUT = 1
DATA = 2

_MASK64 = (1 << 64) - 1


def stream(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    """Generator for (seed, purpose, index); streams never overlap."""
    key = np.array([seed & _MASK64, purpose & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, 0, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
