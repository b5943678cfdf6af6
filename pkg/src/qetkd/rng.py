"""Counter-based random streams.

All randomness in the package flows from a single 64-bit seed through
Philox streams keyed by (seed, stream index), so results never depend on
evaluation order and parallel sweeps stay reproducible.
"""

import numpy as np


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Return the deterministic generator for (seed, index)."""
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
