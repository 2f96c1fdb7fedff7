"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by
``(seed, kind, index)``.  Because the key fully determines the stream, sample
``i`` of a scenario set is independent of how many samples are drawn in total
(prefix property) and streams can be regenerated out of order, e.g. for
parallel generation or for drawing fresh validation samples.
"""

import numpy as np

_MASK48 = (1 << 48) - 1
_MASK64 = (1 << 64) - 1

# Stream kinds.  Values are part of the reproducibility contract: changing
# them changes every generated problem.
KIND_SCENARIO = 0
KIND_VIOLATION = 1
KIND_TRAINING = 2
KIND_SPLIT = 3
KIND_WEIGHTS = 4
KIND_SHUFFLE = 5
KIND_STRUCTURE = 6


def stream(seed: int, kind: int, index: int = 0) -> np.random.Generator:
    """Return the generator for stream ``(seed, kind, index)``."""
    if index < 0 or index > _MASK48:
        raise ValueError(f"stream index out of range: {index}")
    key = np.array(
        [seed & _MASK64, ((kind & 0xFFFF) << 48) | (index & _MASK48)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))
