"""Channel reconstruction from sparse noisy port observations.

Two routes to the same posterior: dense joint-Gaussian conditioning on the
full covariance (the oracle, cubic in the observation count), and a Kalman
forward pass plus backward smoothing on the AR(p) companion state space
(linear in the port count).  For a fitted model both produce identical
conditional means and variances, which is the central cross-check of this
module.  Also here: the posterior-error NMSE, the eigenvalue-tail lower
bound on how many observations a target error requires, and the port
selection strategies whose gap geometry drives interpolation quality.

Ports are 1-based throughout, matching the array indexing used by the
observation sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arfit import ArpModel, check_stability
from .correlation import EigenSpectrum, ToeplitzCovariance
from .errors import NumericalError, UnstableModelError
from .rng import make_rng

# requested noise variance of exactly 0 is floored at this multiple of r(0)
NOISE_FLOOR_FACTOR = 1e-10
# relative singular-value cutoff for the smoother-gain solve
_RTS_RCOND = 1e-12


@dataclass(frozen=True)
class ObservationSet:
    """Observed port indices (1-based, strictly increasing), values, and noise variance."""

    indices: np.ndarray
    values: np.ndarray
    noise_var: float = 0.0

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int).reshape(-1).copy()
        val = np.asarray(self.values, dtype=np.complex128).reshape(-1).copy()
        if idx.size < 1:
            raise ValueError("at least one observation is required")
        if idx[0] < 1 or np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing and >= 1")
        if val.size != idx.size:
            raise ValueError(f"{idx.size} indices but {val.size} values")
        if not self.noise_var >= 0:
            raise ValueError(f"noise_var must be >= 0, got {self.noise_var}")
        idx.setflags(write=False)
        val.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @property
    def M(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True)
class StateSpace:
    """Companion-form dynamics: A advances the lifted state, Q injects the
    innovation at the newest slot, H reads the newest sample."""

    A: np.ndarray
    Q: np.ndarray
    H: np.ndarray

    @property
    def p(self) -> int:
        return int(self.A.shape[0])


@dataclass(frozen=True)
class ReconstructionResult:
    """Per-port posterior means and variances plus the unobserved-set NMSE."""

    means: np.ndarray
    variances: np.ndarray
    nmse_unobserved: float
    method_tag: str


def _effective_noise_var(noise_var: float, r0: float) -> float:
    return noise_var if noise_var > 0 else NOISE_FLOOR_FACTOR * r0


def dense_mmse(cov: ToeplitzCovariance, obs: ObservationSet) -> ReconstructionResult:
    """Joint-Gaussian conditioning on the full covariance (the oracle route).

    ghat = Sigma[:, O] (Sigma[O, O] + sv2 I)^-1 y via a linear solve;
    variances are the diagonal of the conditional error covariance, and the
    NMSE is the posterior-to-prior trace ratio over unobserved ports (zero
    when every port is observed).
    """
    n = cov.N
    if obs.indices[-1] > n:
        raise ValueError(f"observation index {obs.indices[-1]} exceeds N = {n}")
    sigma = cov.matrix()
    idx = obs.indices - 1
    sv2 = _effective_noise_var(obs.noise_var, cov.r0)
    cross = sigma[:, idx]
    gram = sigma[np.ix_(idx, idx)] + sv2 * np.eye(obs.M)
    try:
        solved = np.linalg.solve(gram, np.column_stack([obs.values, cross.conj().T]))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"observation Gram matrix is singular (M={obs.M}); "
            "raise the noise floor to regularize"
        ) from exc
    if not np.all(np.isfinite(solved)):
        raise NumericalError(
            f"observation Gram solve produced non-finite values (M={obs.M}); "
            "raise the noise floor to regularize"
        )
    means = cross @ solved[:, 0]
    variances = np.maximum(
        np.diag(sigma).real - np.einsum("ij,ji->i", cross, solved[:, 1:]).real, 0.0
    )
    unobserved = np.setdiff1d(np.arange(n), idx, assume_unique=False)
    if unobserved.size == 0:
        nmse = 0.0
    else:
        nmse = float(np.sum(variances[unobserved]) / np.sum(np.diag(sigma).real[unobserved]))
    return ReconstructionResult(
        means=means, variances=variances, nmse_unobserved=nmse, method_tag="oracle"
    )


def build_state_space(model: ArpModel) -> StateSpace:
    """Companion matrix, rank-one process noise, and the first-slot readout row."""
    if not check_stability(model).stable:
        raise UnstableModelError("state-space form requires a stable model")
    p = model.p
    a = np.zeros((p, p), dtype=np.complex128)
    a[0, :] = model.alpha
    if p > 1:
        a[np.arange(1, p), np.arange(p - 1)] = 1.0
    q = np.zeros((p, p), dtype=np.complex128)
    q[0, 0] = model.sigma_eps2
    h = np.zeros(p, dtype=np.complex128)
    h[0] = 1.0
    return StateSpace(A=a, Q=q, H=h)


def stationary_covariance(ss: StateSpace, rtol: float = 1e-12, max_iter: int = 10_000) -> np.ndarray:
    """Fixed point of P = A P A^H + Q for a Schur-stable A.

    Solved directly through the vectorized form (I - conj(A) kron A) vec(P)
    = vec(Q); the companion matrices produced by near-singular fits are so
    non-normal that squaring-based iterations overflow long before they
    converge, so the direct solve is the dependable route at these state
    dimensions.  The residual is checked against both the noise scale and
    the round-off floor of the solution itself.
    """
    a = ss.A
    p = ss.p
    if np.max(np.abs(np.linalg.eigvals(a))) >= 1.0:
        raise ValueError("spectral radius must be < 1")
    # vec(A P A^H) = (conj(A) kron A) vec(P) with column-stacked vec
    lhs = np.eye(p * p, dtype=np.complex128) - np.kron(np.conj(a), a)
    try:
        vec = np.linalg.solve(lhs, ss.Q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"stationary covariance solve failed for p={p}: {exc}") from exc
    pinf = vec.reshape(p, p, order="F")
    pinf = (pinf + pinf.conj().T) / 2.0
    residual = np.linalg.norm(pinf - a @ pinf @ a.conj().T - ss.Q)
    tol = max(rtol * np.linalg.norm(pinf) * p, 1e-10 * np.linalg.norm(ss.Q))
    if not (np.all(np.isfinite(pinf)) and residual <= tol):
        raise NumericalError(
            f"stationary covariance residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )
    return pinf


def kalman_smooth(ss: StateSpace, P_inf: np.ndarray, obs: ObservationSet, N: int) -> ReconstructionResult:
    """Forward filter plus backward smoothing pass over ports 1..N.

    The filter starts from the zero-mean stationary prior (covariance
    ``P_inf``), predicts with the companion dynamics, and updates with the
    scalar measurement wherever a port is observed; unobserved ports carry
    the prediction through.  The backward pass folds later observations into
    every port's posterior.  Covariance updates keep Hermitian symmetry by
    construction.  The smoother gain solves against the predicted covariance
    in the minimum-norm least-squares sense: near-singular surrogates make
    that matrix numerically rank-deficient across long unobserved runs, and
    the null directions must carry zero gain rather than round-off noise.
    Costs O(N p^2) time.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if obs.indices[-1] > N:
        raise ValueError(f"observation index {obs.indices[-1]} exceeds N = {N}")
    p = ss.p
    a = ss.A
    q = ss.Q
    r0 = float(P_inf[0, 0].real)
    sv2 = _effective_noise_var(obs.noise_var, r0)
    y = np.zeros(N + 1, dtype=np.complex128)
    observed = np.zeros(N + 1, dtype=bool)
    y[obs.indices] = obs.values
    observed[obs.indices] = True

    means_f = np.empty((N, p), dtype=np.complex128)
    covs_f = np.empty((N, p, p), dtype=np.complex128)
    mean = np.zeros(p, dtype=np.complex128)
    cov = np.asarray(P_inf, dtype=np.complex128)
    for k in range(1, N + 1):
        if k > 1:
            mean = a @ mean
            cov = a @ cov @ a.conj().T + q
        if observed[k]:
            innovation_var = float(cov[0, 0].real) + sv2
            gain = cov[:, 0] / innovation_var
            mean = mean + gain * (y[k] - mean[0])
            cov = cov - np.outer(gain, cov[0, :])
            cov = (cov + cov.conj().T) / 2.0
        if not np.all(np.isfinite(cov)):
            raise NumericalError(f"filter covariance became non-finite at port {k}")
        means_f[k - 1] = mean
        covs_f[k - 1] = cov

    means_out = np.empty(N, dtype=np.complex128)
    vars_out = np.empty(N)
    mean_s = means_f[N - 1]
    cov_s = covs_f[N - 1]
    means_out[N - 1] = mean_s[0]
    vars_out[N - 1] = max(cov_s[0, 0].real, 0.0)
    for k in range(N - 1, 0, -1):
        mean_f = means_f[k - 1]
        cov_f = covs_f[k - 1]
        mean_pred = a @ mean_f
        cov_pred = a @ cov_f @ a.conj().T + q
        cov_pred = (cov_pred + cov_pred.conj().T) / 2.0
        gain = np.linalg.lstsq(cov_pred, a @ cov_f, rcond=_RTS_RCOND)[0].conj().T
        mean_s = mean_f + gain @ (mean_s - mean_pred)
        cov_s = cov_f + gain @ (cov_s - cov_pred) @ gain.conj().T
        cov_s = (cov_s + cov_s.conj().T) / 2.0
        if not np.all(np.isfinite(cov_s)):
            raise NumericalError(f"smoother covariance became non-finite at port {k}")
        means_out[k - 1] = mean_s[0]
        vars_out[k - 1] = max(cov_s[0, 0].real, 0.0)

    unobserved = np.setdiff1d(np.arange(1, N + 1), obs.indices)
    if unobserved.size == 0:
        nmse = 0.0
    else:
        nmse = float(np.sum(vars_out[unobserved - 1]) / (r0 * unobserved.size))
    return ReconstructionResult(
        means=means_out, variances=vars_out, nmse_unobserved=nmse, method_tag="kalman"
    )


def nmse(truth, estimate, subset) -> float:
    """Error energy over true energy on a 1-based port subset."""
    truth = np.asarray(truth).reshape(-1)
    estimate = np.asarray(estimate).reshape(-1)
    idx = np.asarray(subset, dtype=int).reshape(-1) - 1
    if idx.size == 0:
        raise ValueError("subset must be non-empty")
    if np.any(idx < 0) or np.any(idx >= truth.size):
        raise ValueError("subset indices out of range")
    denom = float(np.sum(np.abs(truth[idx]) ** 2))
    if denom == 0.0:
        raise ValueError("subset carries zero energy; NMSE undefined")
    return float(np.sum(np.abs(estimate[idx] - truth[idx]) ** 2) / denom)


def min_observations_bound(spectrum: EigenSpectrum, epsilon: float) -> int:
    """Smallest M whose truncated eigenvalue tail is at most epsilon of the trace.

    Any M physical observations cannot beat the best rank-M linear
    measurement, so this is a lower bound on the observations needed to
    reach NMSE epsilon.  epsilon = 0 degenerates to the numerical rank.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    lam = spectrum.eigenvalues
    total = float(np.sum(lam))
    if epsilon == 0.0:
        return int(np.sum(lam > 1e-12 * lam[0]))
    tails = total - np.concatenate([[0.0], np.cumsum(lam)])
    qualifying = np.nonzero(tails <= epsilon * total)[0]
    return int(qualifying[0])


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5).astype(int)


def _repair_duplicates(raw: np.ndarray, N: int, M: int) -> np.ndarray:
    """Deduplicate rounded grid indices, shifting clashes to the nearest free
    port (larger side first)."""
    taken: set[int] = set()
    for k in raw:
        k = int(min(max(k, 1), N))
        if k not in taken:
            taken.add(k)
            continue
        for d in range(1, N):
            if k + d <= N and k + d not in taken:
                taken.add(k + d)
                break
            if k - d >= 1 and k - d not in taken:
                taken.add(k - d)
                break
        else:
            raise ValueError(f"cannot place {M} distinct ports in 1..{N}")
    return np.array(sorted(taken), dtype=int)


def port_select(strategy: str, N: int, M: int, seed=0) -> np.ndarray:
    """Observation indices for one of the named strategies (1-based, sorted).

    random: M distinct uniform draws.  uniform_endpoints: equispaced with
    both array ends pinned, so no gap needs extrapolation.  uniform_interior:
    the same grid inset by half a spacing, which trades boundary gaps for a
    shorter span.
    """
    if not 1 <= M <= N:
        raise ValueError(f"M must be in [1, N], got M={M}, N={N}")
    if strategy == "random":
        return np.sort(make_rng(seed).choice(N, size=M, replace=False) + 1)
    if strategy == "uniform_endpoints":
        if M < 2:
            raise ValueError("uniform_endpoints requires M >= 2")
        raw = _round_half_up(1 + np.arange(M) * (N - 1) / (M - 1))
        return _repair_duplicates(raw, N, M)
    if strategy == "uniform_interior":
        if M == 1:
            return np.array([int(round((N + 1) / 2))])
        offset = math.ceil(N / (2 * M))
        raw = _round_half_up(offset + 1 + np.arange(M) * (N - 2 * offset) / (M - 1))
        return _repair_duplicates(raw, N, M)
    raise ValueError(f"unknown strategy {strategy!r}")


def max_gap(indices, N: int) -> int:
    """Largest missing block: interior port spacing or a boundary overhang.

    Interior gaps count as the index difference k_{i+1} - k_i; the two
    boundary terms k_1 - 1 and N - k_M count ports that would need
    extrapolation rather than interpolation.
    """
    idx = np.asarray(indices, dtype=int).reshape(-1)
    if idx.size == 0:
        raise ValueError("indices must be non-empty")
    interior = int(np.max(np.diff(idx))) if idx.size > 1 else 0
    return max(interior, int(idx[0] - 1), int(N - idx[-1]))


def empirical_min_observations(
    epsilon: float,
    trials: int,
    seed,
    estimator,
    truth_sampler,
    select,
    N: int,
    min_m: int = 1,
) -> int:
    """Smallest M whose Monte-Carlo mean NMSE reaches epsilon, by bisection.

    ``estimator(obs) -> ReconstructionResult``, ``truth_sampler(seed, count)
    -> (count, N) channels`` and ``select(M, trial_seed) -> indices`` are
    supplied by the caller.  M qualifies when the sample mean NMSE is within
    three standard errors of the target or below it.
    """

    def qualifies(m: int) -> bool:
        ratios = np.empty(trials)
        truths = truth_sampler((*_as_tuple(seed), m), trials)
        for trial in range(trials):
            indices = select(m, (*_as_tuple(seed), m, trial))
            truth = truths[trial]
            obs = ObservationSet(indices=indices, values=truth[indices - 1], noise_var=0.0)
            result = estimator(obs)
            unobserved = np.setdiff1d(np.arange(1, N + 1), indices)
            if unobserved.size == 0:
                ratios[trial] = 0.0
            else:
                ratios[trial] = nmse(truth, result.means, unobserved)
        mean = float(np.mean(ratios))
        sem = float(np.std(ratios, ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
        return mean <= epsilon + 3.0 * sem

    lo, hi = min_m, N
    if qualifies(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if qualifies(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _as_tuple(seed) -> tuple:
    return tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)
