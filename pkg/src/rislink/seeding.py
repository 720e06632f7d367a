"""Deterministic seed derivation.

Every random draw in the package takes an explicit integer seed. Child seeds
for sub-streams (frames, ensemble members, sweep points) are derived from a
parent seed and an index path so that results never depend on execution order.
"""

import numpy as np


def job_seed(*keys: int) -> int:
    """Derive a 64-bit seed from a parent seed and index path."""
    if not keys:
        raise ValueError("job_seed needs at least one key")
    for k in keys:
        if int(k) < 0:
            raise ValueError(f"seed keys must be non-negative, got {k}")
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def complex_normal(rng: np.random.Generator, size, power: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with E|x|^2 = power."""
    scale = np.sqrt(power / 2.0)
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return scale * (re + 1j * im)
