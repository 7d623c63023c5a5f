"""
Contract tests for the estimation core.

Covers weighted least squares, two-stage least squares with the first-stage
F statistic, the wild cluster bootstrap, the Gaussian helpers and the
probit maximum likelihood estimator.
"""

import math

import numpy as np
import pytest

from src.exceptions import (
    InferenceError,
    InvalidParameterError,
    SeparationError,
    SingularDesignError,
    UnderIdentifiedError,
)
from src.models.regression import EstimationSpec
from src.services.synthpanel import CATALOG_STREAM, MUNI_STREAM, SURVEY_STREAM
from src.services.econometrics import (
    _rademacher,
    gaussian_mills,
    normal_quantile,
    probit_mle,
    tsls,
    wild_cluster_bootstrap,
    wls,
)


@pytest.fixture
def iv_data():
    """Endogenous x driven by two instruments, clustered in 20 groups."""
    rng = np.random.default_rng(7)
    n = 2000
    z = rng.normal(size=(n, 2))
    u = rng.normal(size=n)
    x = z @ np.array([0.8, -0.5]) + 0.6 * u + rng.normal(scale=0.5, size=n)
    y = 1.0 + 2.0 * x + u
    clusters = np.repeat(np.arange(20), n // 20)
    return {'y': y, 'x': x, 'z': z, 'clusters': clusters}


def _iv_spec(data, **overrides):
    kwargs = dict(
        outcome=data['y'],
        regressors=data['x'].reshape(-1, 1),
        regressor_names=['x'],
        endogenous=[True],
        instruments=data['z'],
        instrument_names=['z1', 'z2'],
        cluster_ids=data['clusters'],
    )
    kwargs.update(overrides)
    return EstimationSpec(**kwargs)


class TestWLS:
    """Weighted least squares."""

    def test_exact_fit_recovers_coefficients(self):
        x = np.linspace(0.0, 1.0, 11)
        spec = EstimationSpec(outcome=3.0 - 2.0 * x, regressors=x, regressor_names=['x'])

        result = wls(spec)

        assert result.coef('const') == pytest.approx(3.0, abs=1e-12)
        assert result.coef('x') == pytest.approx(-2.0, abs=1e-12)
        assert result.estimator == 'wls'
        assert result.n_obs == 11

    def test_weights_scale_invariance(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=50)
        y = 1.0 + 0.5 * x + rng.normal(size=50)
        w = rng.uniform(0.5, 2.0, size=50)

        a = wls(EstimationSpec(outcome=y, regressors=x, regressor_names=['x'], weights=w))
        b = wls(EstimationSpec(outcome=y, regressors=x, regressor_names=['x'], weights=10 * w))

        assert a.coef('x') == pytest.approx(b.coef('x'), abs=1e-12)
        assert a.se_of('x') == pytest.approx(b.se_of('x'), rel=1e-10)

    def test_rank_deficient_design_names_column(self):
        x = np.arange(10, dtype=float)
        regressors = np.column_stack([x, 2 * x])

        with pytest.raises(SingularDesignError) as exc:
            wls(EstimationSpec(outcome=x, regressors=regressors, regressor_names=['a', 'b']))

        assert exc.value.column == 'b'

    def test_invalid_weights_rejected(self):
        with pytest.raises(InvalidParameterError):
            EstimationSpec(outcome=np.ones(3), regressors=np.arange(3.0),
                           regressor_names=['x'], weights=np.array([1.0, -1.0, 1.0]))

    def test_negated_flips_interval(self):
        x = np.linspace(0.0, 1.0, 20)
        y = x + np.sin(np.arange(20))
        result = wls(EstimationSpec(outcome=y, regressors=x, regressor_names=['x']))

        flipped = result.negated()

        assert flipped.coef('x') == pytest.approx(-result.coef('x'))
        assert flipped.ci('x') == pytest.approx((-result.ci('x')[1], -result.ci('x')[0]))
        assert flipped.se_of('x') == pytest.approx(result.se_of('x'))


class TestTSLS:
    """Two-stage least squares."""

    def test_recovers_structural_slope(self, iv_data):
        result = tsls(_iv_spec(iv_data))

        assert result.estimator == 'tsls'
        assert result.coef('x') == pytest.approx(2.0, abs=0.1)
        assert result.first_stage_F > 100
        assert result.weak_instrument is False

    def test_ols_is_biased_where_tsls_is_not(self, iv_data):
        ols = wls(_iv_spec(iv_data, endogenous=[False]))
        iv = tsls(_iv_spec(iv_data))

        assert abs(ols.coef('x') - 2.0) > abs(iv.coef('x') - 2.0)

    def test_under_identified(self, iv_data):
        spec = _iv_spec(iv_data, instruments=None, instrument_names=[])

        with pytest.raises(UnderIdentifiedError):
            tsls(spec)

    def test_weak_instrument_flagged(self):
        rng = np.random.default_rng(3)
        n = 400
        z = rng.normal(size=n)
        x = rng.normal(size=n)
        y = x + rng.normal(size=n)
        spec = EstimationSpec(outcome=y, regressors=x, regressor_names=['x'],
                              endogenous=[True], instruments=z, instrument_names=['z'])

        result = tsls(spec)

        assert result.first_stage_F < 10
        assert result.weak_instrument is True


class TestWildClusterBootstrap:
    """Wild cluster bootstrap inference."""

    def test_reproducible_under_seed(self, iv_data):
        spec = _iv_spec(iv_data)

        first = wild_cluster_bootstrap(spec, 'tsls', reps=60, seed=5)
        second = wild_cluster_bootstrap(spec, 'tsls', reps=60, seed=5)

        np.testing.assert_array_equal(first.draws, second.draws)
        assert first.failed == 0

    def test_independent_of_worker_count(self, iv_data):
        spec = _iv_spec(iv_data)

        serial = wild_cluster_bootstrap(spec, 'tsls', reps=120, seed=2, workers=1)
        threaded = wild_cluster_bootstrap(spec, 'tsls', reps=120, seed=2, workers=4)

        np.testing.assert_allclose(serial.draws, threaded.draws, rtol=0, atol=1e-12)

    def test_callable_estimator_matches_builtin(self, iv_data):
        spec = _iv_spec(iv_data, endogenous=[False], instruments=None, instrument_names=[])

        builtin = wild_cluster_bootstrap(spec, 'wls', reps=40, seed=9)
        custom = wild_cluster_bootstrap(
            spec, lambda s: np.linalg.lstsq(s.design(), s.outcome, rcond=None)[0],
            reps=40, seed=9,
        )

        np.testing.assert_allclose(builtin.draws, custom.draws, atol=1e-8)

    def test_weights_apart_from_simulator_streams(self):
        for stream in (CATALOG_STREAM, MUNI_STREAM, SURVEY_STREAM):
            rng = np.random.default_rng(np.random.SeedSequence(5, spawn_key=(stream,)))
            simulator = rng.integers(0, 2, size=200) * 2.0 - 1.0

            assert not np.array_equal(_rademacher(5, stream, 200), simulator)

    def test_single_cluster_rejected(self, iv_data):
        spec = _iv_spec(iv_data, cluster_ids=np.zeros(len(iv_data['y'])))

        with pytest.raises(InferenceError):
            wild_cluster_bootstrap(spec, 'tsls', reps=10)

    def test_bootstrap_replaces_analytic_se(self, iv_data):
        result = tsls(_iv_spec(iv_data), reps=50, seed=1)

        assert result.bootstrap_reps == 50
        low, high = result.ci('x')
        assert low < result.coef('x') < high


class TestGaussianHelpers:
    """Normal pdf, cdf, inverse Mills ratio and quantiles."""

    def test_mills_at_zero(self):
        values = gaussian_mills(0.0)

        assert values.cdf == pytest.approx(0.5)
        assert values.mills == pytest.approx(math.sqrt(2.0 / math.pi))
        assert values.mills_derivative == pytest.approx(-2.0 / math.pi)

    def test_mills_stable_in_far_tail(self):
        values = gaussian_mills(-40.0)

        assert math.isfinite(values.mills)
        assert values.mills == pytest.approx(40.0, rel=1e-2)

    def test_selection_index_values(self):
        values = gaussian_mills(0.377)

        assert values.cdf == pytest.approx(0.647, abs=1e-3)
        assert values.mills_derivative == pytest.approx(-0.547, abs=2e-3)

    def test_quantile_inverts_cdf(self):
        assert normal_quantile(0.647) == pytest.approx(0.377, abs=1e-3)
        with pytest.raises(InvalidParameterError):
            normal_quantile(1.0)

    def test_non_finite_index_rejected(self):
        with pytest.raises(InvalidParameterError):
            gaussian_mills(float('nan'))


class TestProbit:
    """Probit maximum likelihood."""

    def test_recovers_coefficients(self):
        rng = np.random.default_rng(11)
        n = 5000
        x = rng.normal(size=n)
        y = (0.3 + 0.8 * x + rng.normal(size=n) > 0).astype(float)
        X = np.column_stack([np.ones(n), x])

        result = probit_mle(y, X, names=['const', 'x'])

        assert result.coef('const') == pytest.approx(0.3, abs=0.08)
        assert result.coef('x') == pytest.approx(0.8, abs=0.08)
        assert result.trace[-1][2] < 1e-8

    def test_constant_only_matches_share(self):
        y = np.array([1.0] * 647 + [0.0] * 353)

        result = probit_mle(y, np.ones((1000, 1)))

        assert result.coefficients[0] == pytest.approx(normal_quantile(0.647), abs=1e-6)

    def test_tolerance_on_mean_score(self):
        y = np.array([1.0] * 647 + [0.0] * 353)
        expected = 0.294 * math.sqrt(2.0 / math.pi)

        plain = probit_mle(y, np.ones((1000, 1)))
        tiled = probit_mle(np.tile(y, 5), np.ones((5000, 1)))
        weighted = probit_mle(y, np.ones((1000, 1)), weights=np.full(1000, 40.0))

        for result in (plain, tiled, weighted):
            assert result.trace[0][2] == pytest.approx(expected)
            assert result.trace[-1][2] < 1e-10
        assert tiled.coefficients[0] == pytest.approx(plain.coefficients[0], abs=1e-9)

    def test_perfect_separation(self):
        x = np.linspace(-1.0, 1.0, 40)
        y = (x > 0).astype(float)

        with pytest.raises(SeparationError):
            probit_mle(y, np.column_stack([np.ones(40), x]))

    def test_non_binary_outcome_rejected(self):
        with pytest.raises(InvalidParameterError):
            probit_mle(np.array([0.0, 2.0]), np.ones((2, 1)))
