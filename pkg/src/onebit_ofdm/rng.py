"""Counter-based random stream derivation.

Each stream is keyed by ``(master seed, trial index, role, *extra)`` through
:class:`numpy.random.SeedSequence` spawn keys, so streams never collide and
do not depend on the order in which trials are executed.
"""

from __future__ import annotations

import numpy as np

ROLES = {"channel": 0, "data": 1, "noise": 2, "interleaver": 3, "aux": 4}


def seed_schedule(seed: int, trial: int, role: str, *extra: int) -> np.random.Generator:
    """Return an independent generator for one (trial, role) pair.

    ``extra`` integers further split a role, e.g. one noise stream per SNR
    point or per OFDM symbol.
    """
    try:
        role_id = ROLES[role]
    except KeyError:
        raise ValueError(f"unknown stream role {role!r}; expected one of {sorted(ROLES)}") from None
    key = (int(trial), role_id) + tuple(int(e) for e in extra)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def crandn(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with variance ``var``."""
    scale = np.sqrt(var / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
