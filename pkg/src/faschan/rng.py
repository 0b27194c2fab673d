"""Seeded random streams.

All randomness in the package flows through counter-based Philox generators
keyed by a seed that is either a non-negative int or a flat tuple of
non-negative ints.  Independent sub-streams are derived by appending branch
integers to the seed tuple, so any task (a batch row, a candidate order, a
threshold) can be reproduced in isolation from its derived seed.
"""

from __future__ import annotations

import numpy as np


def _entropy(seed) -> "tuple[int, ...]":
    if isinstance(seed, (tuple, list)):
        parts = tuple(int(s) for s in seed)
    else:
        parts = (int(seed),)
    if any(s < 0 for s in parts):
        raise ValueError(f"seed components must be non-negative, got {parts}")
    return parts


def make_rng(seed) -> np.random.Generator:
    """Generator for this seed; same seed, same stream, always."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_entropy(seed))))


def derive(seed, *branch: int) -> tuple[int, ...]:
    """Child seed for an independent sub-stream (row index, candidate id, ...)."""
    return _entropy(seed) + tuple(int(b) for b in branch)


def complex_standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussians with unit variance per entry.

    Real and imaginary parts are independent N(0, 1/2) draws, so
    E|z|^2 = 1.  The real block is drawn before the imaginary block.
    """
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)
