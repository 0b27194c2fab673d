import numpy as np
import pytest
from scipy.linalg import toeplitz

from faschan.arfit import ArpModel, unit_noise_gain
from faschan.correlation import ClarkeModel, build_covariance, eigen_spectrum
from faschan.rng import make_rng


@pytest.fixture(scope="session")
def clarke_w2n100():
    return ClarkeModel(W=2.0, N=100)


@pytest.fixture(scope="session")
def spectrum_w2n100(clarke_w2n100):
    return eigen_spectrum(build_covariance(clarke_w2n100))


def make_consistent_model(p: int, seed=0, max_mod: float = 0.6, roots=None) -> ArpModel:
    """Stable AR(p) whose source lags are its own stationary lags.

    Roots are drawn inside a disk of radius ``max_mod`` unless given
    explicitly; the innovation variance normalizes the stationary per-port
    variance to 1, and the lag sequence comes from the state-covariance
    fixed point, so the model, its induced covariance, and the lag-Toeplitz
    state prior all describe exactly the same Gaussian law.
    """
    if roots is None:
        rng = make_rng(seed)
        roots = max_mod * np.sqrt(rng.random(p)) * np.exp(2j * np.pi * rng.random(p))
    roots = np.asarray(roots, dtype=complex)
    assert roots.size == p
    alpha = -np.poly(roots)[1:]
    sigma_eps2 = 1.0 / unit_noise_gain(alpha)
    a = np.zeros((p, p), dtype=complex)
    a[0] = alpha
    if p > 1:
        a[np.arange(1, p), np.arange(p - 1)] = 1.0
    q = np.zeros((p, p), dtype=complex)
    q[0, 0] = sigma_eps2
    lhs = np.eye(p * p, dtype=complex) - np.kron(np.conj(a), a)
    pinf = np.linalg.solve(lhs, q.reshape(-1, order="F")).reshape(p, p, order="F")
    pinf = (pinf + pinf.conj().T) / 2
    lags = np.empty(p + 1, dtype=complex)
    lags[:p] = pinf[0, :]
    lags[p] = alpha @ lags[p - 1 :: -1][:p] if p > 1 else alpha[0] * lags[0]
    return ArpModel(alpha=alpha, sigma_eps2=sigma_eps2, p=p, source_lags=lags)


def lag_toeplitz_prior(model: ArpModel) -> np.ndarray:
    """Stationary lifted-state covariance implied by the matched lags."""
    head = model.source_lags[: model.p]
    return toeplitz(np.conj(head), head)
