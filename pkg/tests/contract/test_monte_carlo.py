"""
Contract tests for the replication summary and the validation checks.
"""

import pandas as pd
import pytest

from src.services.monte_carlo import MonteCarloResult, summarize, validate
from src.services.synthpanel import ground_truth


def _summary(z_scores):
    return pd.DataFrame([{'quantity': name, 'truth': 0.0, 'mean': z, 'sd': 1.0, 'mc_se': 1.0,
                          'z': z} for name, z in z_scores.items()])


class TestSummarize:
    """Bias z-scores against the truth."""

    def test_mc_standard_error(self, small_config):
        truth = ground_truth(small_config)
        values = {'beta_R': truth.beta_R, 'displacement': truth.displacement,
                  'crowding_out': truth.crowding_out, 'relocation': truth.relocation,
                  'gamma_W': truth.gamma_W, 'gamma_R': truth.gamma_R_meanlog}
        estimates = pd.DataFrame([{name: v + 0.1 for name, v in values.items()},
                                  {name: v + 0.3 for name, v in values.items()}])

        summary = summarize(truth, estimates).set_index('quantity')

        assert summary.loc['beta_R', 'mean'] == pytest.approx(truth.beta_R + 0.2)
        assert summary.loc['beta_R', 'mc_se'] == pytest.approx(0.1)
        assert summary.loc['gamma_W', 'z'] == pytest.approx(2.0)


class TestValidate:
    """Pass/fail of the bias checks."""

    @pytest.fixture
    def report(self, small_config, mocker):
        estimates = pd.DataFrame({'additivity': [0.0], 'first_stage_F': [50.0],
                                  'c': [small_config.c_ratio]})
        result = MonteCarloResult(truth=ground_truth(small_config), estimates=estimates,
                                  summary=_summary({'inside': 1.9, 'outside': -2.1,
                                                    'undefined': float('nan')}))
        mocker.patch('src.services.monte_carlo.run_monte_carlo', return_value=result)
        mocker.patch('src.services.monte_carlo._csv_round_trip_check')
        return validate(small_config)

    def test_bias_within_two_standard_errors(self, report):
        checks = {c.name: c.passed for c in report.checks}

        assert checks['bias_inside']
        assert not checks['bias_outside']
        assert not checks['bias_undefined']
        assert not report.passed

    def test_deterministic_checks_recorded(self, report):
        checks = {c.name: c.passed for c in report.checks}

        assert checks['structural_round_trip']
        assert checks['employment_additivity']
        assert checks['shock_ratio_c']
