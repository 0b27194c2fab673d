import numpy as np
import pytest

from faschan.arfit import ArpModel, fit_clarke_model, yule_walker_fit
from faschan.correlation import ClarkeModel
from faschan.errors import UnstableModelError
from faschan.generator import SimulationConfig, simulate, simulate_batch

from conftest import make_consistent_model


def lag_estimate(batch, lag):
    """Empirical r(lag) averaged over rows and positions."""
    if lag == 0:
        return np.mean(np.abs(batch) ** 2)
    return np.mean(batch[:, lag:] * np.conj(batch[:, :-lag]))


class TestSimulate:
    def test_memoryless_case_variance(self):
        white = ArpModel(
            alpha=np.array([0.0 + 0j]), sigma_eps2=0.7, p=1, source_lags=np.array([0.7, 0.0 + 0j])
        )
        sample = simulate(white, SimulationConfig(N=100_000, B=10, seed=1))
        assert np.mean(np.abs(sample) ** 2) == pytest.approx(0.7, rel=0.05)
        assert abs(np.mean(sample)) < 3 * np.sqrt(0.7 / sample.size)

    def test_deterministic(self):
        model = yule_walker_fit([1.0, 0.5])
        config = SimulationConfig(N=50, B=100, seed=9)
        np.testing.assert_array_equal(simulate(model, config), simulate(model, config))

    def test_burn_in_discards_prefix(self):
        # same stream: the B+N run's tail equals the (B, N) run's output
        model = yule_walker_fit([1.0, 0.5])
        full = simulate(model, SimulationConfig(N=150, B=0, seed=4))
        trimmed = simulate(model, SimulationConfig(N=50, B=100, seed=4))
        np.testing.assert_array_equal(full[100:], trimmed)

    def test_unstable_refused(self):
        bad = ArpModel(alpha=np.array([1.5 + 0j]), sigma_eps2=1.0, p=1, source_lags=np.array([1.0, 0.9 + 0j]))
        with pytest.raises(UnstableModelError):
            simulate(bad, SimulationConfig(N=10, B=0, seed=0))

    def test_burn_in_sufficiency(self):
        # two-run comparison oracle: doubling the burn-in leaves the law unchanged
        model = make_consistent_model(3, seed=(60, 0), max_mod=0.7)
        count = 20_000
        lag_errs = []
        for factor in (5, 10):
            batch = simulate_batch(model, SimulationConfig(N=30, B=factor * 30, seed=(61, factor)), count)
            errs = [abs(lag_estimate(batch, lag) - model.source_lags[lag]) for lag in range(model.p + 1)]
            lag_errs.append(max(errs))
        mc_scale = 3.0 / np.sqrt(count)
        assert abs(lag_errs[0] - lag_errs[1]) < mc_scale


class TestSimulateBatch:
    def test_single_row_equals_simulate_with_derived_seed(self):
        model = yule_walker_fit([1.0, 0.3 + 0.2j])
        config = SimulationConfig(N=40, B=20, seed=13)
        batch = simulate_batch(model, config, 1)
        solo = simulate(model, SimulationConfig(N=40, B=20, seed=(13, 0)))
        np.testing.assert_array_equal(batch[0], solo)

    def test_rows_reproducible_in_isolation(self):
        model = yule_walker_fit([1.0, 0.3])
        config = SimulationConfig(N=25, B=10, seed=6)
        batch = simulate_batch(model, config, 5)
        row3 = simulate(model, SimulationConfig(N=25, B=10, seed=(6, 3)))
        np.testing.assert_array_equal(batch[3], row3)

    def test_deterministic(self):
        model = yule_walker_fit([1.0, 0.4])
        config = SimulationConfig(N=20, B=10, seed=2)
        np.testing.assert_array_equal(
            simulate_batch(model, config, 7), simulate_batch(model, config, 7)
        )

    def test_lag_matching_within_three_percent(self):
        # positive real roots keep every matched lag order one, so the
        # relative comparison is well-posed
        model = make_consistent_model(2, roots=[0.85, 0.7])
        batch = simulate_batch(model, SimulationConfig(N=60, B=300, seed=77), 50_000)
        for lag in range(model.p + 1):
            est = lag_estimate(batch, lag)
            target = model.source_lags[lag]
            assert abs(est - target) / abs(target) < 0.03

    def test_zero_mean_after_burn_in(self):
        model = make_consistent_model(4, seed=(62, 0), max_mod=0.7)
        batch = simulate_batch(model, SimulationConfig(N=50, B=250, seed=8), 4000)
        row_means = batch.mean(axis=1)
        sem = np.std(row_means) / np.sqrt(row_means.size)
        assert abs(np.mean(row_means)) < 3 * sem

    def test_monte_carlo_rate(self):
        # lag-error should shrink about 2x when the batch grows 4x
        model = make_consistent_model(2, seed=(63, 0), max_mod=0.6)

        def worst_err(count, seed):
            batch = simulate_batch(model, SimulationConfig(N=40, B=200, seed=seed), count)
            return max(
                abs(lag_estimate(batch, lag) - model.source_lags[lag]) for lag in range(model.p + 1)
            )

        small = np.mean([worst_err(2_000, (64, k)) for k in range(3)])
        big = np.mean([worst_err(8_000, (65, k)) for k in range(3)])
        assert 1.0 <= small / big <= 4.0

    def test_count_validated(self):
        model = yule_walker_fit([1.0, 0.2])
        with pytest.raises(ValueError):
            simulate_batch(model, SimulationConfig(N=5, B=0, seed=0), 0)
