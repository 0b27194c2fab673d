"""Complex AR(p) surrogate fitted by correlation matching.

The fit solves the complex Yule-Walker normal equations R a = r built from
the target lags r(0..p), takes the innovation variance as r(0) - a^H r, and
is accepted only if every root of 1 - sum_i a_i z^-i lies inside the unit
circle with margin.  The induced autocorrelation of the fitted process
reproduces r(0..p) exactly and extends by the same recursion, which gives a
full Toeplitz covariance for cross-checking against dense conditioning.

Order selection follows the Monte-Carlo procedure: an exact-model reference
sample of the selection gain, one simulated sample per stable candidate
order, and the two-sample KS distance between them decides the order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .correlation import ClarkeModel, ToeplitzCovariance, build_covariance, clarke_autocorrelation, eigen_spectrum, sample_exact
from .errors import FitError, UnstableModelError
from .rng import derive
from .stats import ks_distance, max_gain

# roots with modulus >= 1 - DELTA_STAB count as unstable
DELTA_STAB = 1e-6
# candidate orders within this of the best KS distance tie-break to the smallest p
TIE_TOL = 1e-4
# normal equations must be consistent to this relative residual
_RESID_LIMIT = 1e-8
# lags matched per model order by the aperture-window fit
_WINDOW_FACTOR = 2

_REF_BRANCH = 0
_CANDIDATE_BRANCH = 1


@dataclass(frozen=True)
class ArpModel:
    """Fitted AR(p) coefficients, innovation variance, and the matched lags."""

    alpha: np.ndarray
    sigma_eps2: float
    p: int
    source_lags: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.complex128).reshape(-1).copy()
        lags = np.asarray(self.source_lags, dtype=np.complex128).reshape(-1).copy()
        if self.p < 1 or alpha.size != self.p:
            raise ValueError(f"alpha must have p >= 1 entries, got p={self.p}, len={alpha.size}")
        if lags.size != self.p + 1:
            raise ValueError(f"source_lags must have p+1 entries, got {lags.size}")
        if not self.sigma_eps2 >= 0:
            raise ValueError(f"sigma_eps2 must be >= 0, got {self.sigma_eps2}")
        alpha.setflags(write=False)
        lags.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "source_lags", lags)

    @property
    def r0(self) -> float:
        return float(self.source_lags[0].real)


@dataclass(frozen=True)
class StabilityReport:
    root_moduli: np.ndarray
    stable: bool
    margin: float


@dataclass(frozen=True)
class OrderSelectionResult:
    """Selected order with the KS distance recorded for every stable candidate."""

    p_star: int
    distances: dict[int, float]
    reference_sample_count: int
    unstable_orders: tuple[int, ...] = ()


def yule_walker_fit(lags) -> ArpModel:
    """Fit AR(p) coefficients from target lags r(0..p).

    Solves R a = r as a linear system where R is the p x p Hermitian
    Toeplitz matrix of lags 0..p-1 and r stacks lags 1..p.  Oversampled
    apertures make R numerically rank-deficient well before p reaches the
    orders of interest, so the solve is a minimum-norm least-squares one;
    the system is rejected only if it is actually inconsistent.  The
    innovation variance is the matching residual r(0) - a^H r.
    """
    lags = np.asarray(lags, dtype=np.complex128).reshape(-1)
    p = lags.size - 1
    if p < 1:
        raise ValueError("need at least lags r(0) and r(1)")
    r0 = lags[0]
    if abs(r0.imag) > 1e-12 * max(abs(r0.real), 1.0) or not r0.real > 0:
        raise ValueError(f"r(0) must be real and positive, got {r0}")
    # row l, column i holds r(l-i); negative lags are the conjugates
    big_r = toeplitz(lags[:p], np.conj(lags[:p]))
    rhs = lags[1:]
    alpha = np.linalg.lstsq(big_r, rhs, rcond=None)[0]
    scale = max(np.linalg.norm(rhs), r0.real)
    resid = np.linalg.norm(big_r @ alpha - rhs) / scale
    if not resid <= _RESID_LIMIT:
        raise FitError(
            f"normal equations inconsistent at order p={p} (relative residual {resid:.2e}); "
            "the lags do not extend to a PSD sequence"
        )
    sigma_eps2 = float((r0 - np.vdot(alpha, rhs)).real)
    return ArpModel(alpha=alpha, sigma_eps2=max(sigma_eps2, 0.0), p=p, source_lags=lags)


def unit_noise_gain(alpha: np.ndarray, nfft: int = 1 << 21) -> float:
    """Stationary per-sample variance of the AR filter driven by unit white noise.

    Evaluates (1/2pi) integral dw / |A(e^{jw})|^2 on a dense FFT grid; the
    grid resolves spectral peaks down to root moduli of roughly 1 - 1e-5.
    """
    transfer = np.fft.fft(np.concatenate([[1.0 + 0.0j], -np.asarray(alpha)]), n=nfft)
    return float(np.mean(1.0 / np.abs(transfer) ** 2))


def fit_clarke_model(model: ClarkeModel, p: int, window_factor: int = _WINDOW_FACTOR) -> ArpModel:
    """Order-p fit matched to the model's correlation over an aperture window.

    The recursion r(l) = sum_i a_i r(l-i) is imposed in least squares over
    lags l = 1..min(window_factor*p, N-1) rather than only the first p, which
    pins down the coefficient components the rank-deficient normal equations
    leave free and keeps the induced long-range correlation on target.  The
    innovation variance is then normalized so the stationary per-port
    variance equals r(0) exactly.
    """
    if not 1 <= p <= model.N - 1:
        raise ValueError(f"p must be in [1, N-1], got {p}")
    L = min(window_factor * p, model.N - 1)
    lags = np.array(
        [clarke_autocorrelation(lag, model) for lag in range(L + 1)], dtype=np.complex128
    )
    # rows l = 1..L of the recursion; negative lags enter conjugated
    two_sided = np.concatenate([np.conj(lags[p:0:-1]), lags])
    design = np.empty((L, p), dtype=np.complex128)
    for row in range(L):
        start = row + p  # index of r(l-1) in two_sided for l = row+1
        design[row] = two_sided[start : start - p : -1]
    alpha = np.linalg.lstsq(design, lags[1:], rcond=None)[0]
    sigma_eps2 = float(lags[0].real) / unit_noise_gain(alpha)
    return ArpModel(alpha=alpha, sigma_eps2=max(sigma_eps2, 0.0), p=p, source_lags=lags[: p + 1])


def check_stability(model: ArpModel) -> StabilityReport:
    """Moduli of the roots of 1 - sum_i alpha_i z^-i, and the stability verdict."""
    coeffs = np.concatenate([[1.0 + 0.0j], -model.alpha])
    moduli = np.sort(np.abs(np.roots(coeffs)))[::-1]
    if moduli.size < model.p:  # trailing zero coefficients drop roots at the origin
        moduli = np.concatenate([moduli, np.zeros(model.p - moduli.size)])
    worst = float(moduli[0]) if moduli.size else 0.0
    return StabilityReport(root_moduli=moduli, stable=worst < 1.0 - DELTA_STAB, margin=1.0 - worst)


def extend_autocorrelation(model: ArpModel, L: int) -> np.ndarray:
    """Autocorrelation r(0..L) of the fitted process.

    Lags 0..p are the matched source lags; beyond that the stationary
    process obeys r(l) = sum_i alpha_i r(l-i), which decays for stable
    models and diverges otherwise, hence the stability gate.
    """
    if L < model.p:
        raise ValueError(f"L must be >= p = {model.p}, got {L}")
    if not check_stability(model).stable:
        raise UnstableModelError("cannot extend the autocorrelation of an unstable model")
    r = np.zeros(L + 1, dtype=np.complex128)
    r[: model.p + 1] = model.source_lags
    alpha = model.alpha
    for lag in range(model.p + 1, L + 1):
        r[lag] = alpha @ r[lag - 1 : lag - model.p - 1 : -1]
    return r


def arp_induced_covariance(model: ArpModel, N: int) -> ToeplitzCovariance:
    """Toeplitz covariance of N consecutive samples of the fitted process."""
    return ToeplitzCovariance(first_row=extend_autocorrelation(model, N - 1), N=N)


def select_order(
    model: ClarkeModel,
    p_max: int,
    mc_samples: int,
    burn_in_factor: int = 5,
    seed=0,
    workers: int = 1,
) -> OrderSelectionResult:
    """Pick the AR order whose simulated selection-gain CDF is KS-closest to exact.

    One exact-model reference sample and one independent simulated sample
    per stable candidate order, all of size ``mc_samples``; unstable orders
    are excluded.  Ties within TIE_TOL of the best distance go to the
    smallest order.
    """
    from .generator import SimulationConfig, simulate_batch

    if not 1 <= p_max <= model.N:
        raise ValueError(f"p_max must be in [1, N], got {p_max}")
    if mc_samples < 1000:
        raise ValueError(f"mc_samples must be >= 1000, got {mc_samples}")

    spectrum = eigen_spectrum(build_covariance(model))
    reference = max_gain(sample_exact(spectrum, derive(seed, _REF_BRANCH), mc_samples))

    def evaluate(p: int) -> "tuple[int, float | None]":
        fitted = fit_clarke_model(model, p)
        if not check_stability(fitted).stable:
            return p, None
        config = SimulationConfig(N=model.N, B=burn_in_factor * model.N, seed=derive(seed, _CANDIDATE_BRANCH, p))
        gains = max_gain(simulate_batch(fitted, config, mc_samples))
        return p, ks_distance(reference, gains)

    orders = range(1, p_max + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate, orders))
    else:
        results = [evaluate(p) for p in orders]

    distances = {p: d for p, d in results if d is not None}
    unstable = tuple(p for p, d in results if d is None)
    if not distances:
        raise FitError(f"no stable candidate order in [1, {p_max}]")
    best = min(distances.values())
    p_star = min(p for p, d in distances.items() if d <= best + TIE_TOL)
    return OrderSelectionResult(
        p_star=p_star,
        distances=distances,
        reference_sample_count=mc_samples,
        unstable_orders=unstable,
    )
