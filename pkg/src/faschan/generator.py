"""Stationary AR(p) channel realizations via burn-in.

The recursion is started from zeros, driven by B + N innovation draws, and
the first B outputs are discarded so the retained block follows the
stationary law.  Batch rows use per-row derived seeds, so any single row is
reproducible in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arfit import ArpModel, check_stability
from .errors import UnstableModelError
from .rng import complex_standard_normal, derive, make_rng


@dataclass(frozen=True)
class SimulationConfig:
    """Output length N, burn-in length B, and the stream seed."""

    N: int
    B: int
    seed: "int | tuple[int, ...]" = 0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.B < 0:
            raise ValueError(f"B must be >= 0, got {self.B}")


def _innovations(model: ArpModel, total: int, seed, count: int) -> np.ndarray:
    """(count, total) innovations, row i from the derived stream (seed, i)."""
    scale = np.sqrt(model.sigma_eps2)
    eps = np.empty((count, total), dtype=np.complex128)
    for i in range(count):
        eps[i] = complex_standard_normal(make_rng(derive(seed, i)), total)
    eps *= scale
    return eps


def _recursion(alpha: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Run g_k = sum_i alpha_i g_{k-i} + eps_k from zero initial state.

    The lag terms are accumulated in a fixed order, one elementwise product
    per coefficient, so each realization's trajectory is bit-identical no
    matter how many realizations share the batch.  Work happens in a
    time-major layout so every lag access is a contiguous row.
    """
    count, total = eps.shape
    p = alpha.size
    g = np.zeros((p + total, count), dtype=np.complex128)
    eps_t = np.ascontiguousarray(eps.T)
    for k in range(total):
        acc = eps_t[k].copy()
        for i in range(p):
            acc += alpha[i] * g[p + k - 1 - i]
        g[p + k] = acc
    return np.ascontiguousarray(g[p:].T)


def simulate(model: ArpModel, config: SimulationConfig) -> np.ndarray:
    """One length-N realization: run B + N steps from zeros, keep the last N."""
    if not check_stability(model).stable:
        raise UnstableModelError("refusing to simulate an unstable model")
    rng = make_rng(config.seed)
    eps = complex_standard_normal(rng, (1, config.B + config.N)) * np.sqrt(model.sigma_eps2)
    return _recursion(model.alpha, eps)[0, config.B :]


def simulate_batch(model: ArpModel, config: SimulationConfig, count: int) -> np.ndarray:
    """(count, N) independent realizations; row i uses the derived seed (seed, i)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not check_stability(model).stable:
        raise UnstableModelError("refusing to simulate an unstable model")
    eps = _innovations(model, config.B + config.N, config.seed, count)
    return _recursion(model.alpha, eps)[:, config.B :]
