"""Named, reproducible random streams.

Every stochastic component draws from its own counter-based (Philox)
stream keyed by ``(seed, labels...)``, so results do not depend on the
order in which components happen to consume randomness.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, *labels: object) -> np.random.Generator:
    """Return an independent generator for the given seed and label path."""
    tag = ":".join(str(part) for part in labels).encode()
    key = hashlib.blake2b(
        tag, digest_size=16, key=(seed & _MASK64).to_bytes(8, "little")
    ).digest()
    return np.random.Generator(np.random.Philox(key=int.from_bytes(key, "little")))
