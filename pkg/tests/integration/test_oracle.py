"""
Integration tests checking estimators against the simulator's closed-form truth.

Run with: pytest tests/integration/test_oracle.py -v -m slow
"""

from dataclasses import replace

import pandas as pd
import pytest

from src.services.config_manager import default_sim_config
from src.services.monte_carlo import (
    estimate_replication,
    replication_config,
    study_window,
    summarize,
    validate,
    write_validation,
)
from src.services.synthpanel import ground_truth

pytestmark = pytest.mark.integration

DETERMINISTIC_CHECKS = ('structural_round_trip', 'employment_additivity', 'shock_ratio_c',
                        'csv_round_trip', 'first_stage_strength')


@pytest.fixture(scope='module')
def medium_config():
    return default_sim_config(seed=21, n_border=120, n_control=360, n_districts=24,
                              workers_per_muni=50)


class TestReplications:
    """Seeding and summaries of replications."""

    def test_replication_seeds_differ(self, medium_config):
        first, second = replication_config(medium_config, 0), replication_config(medium_config, 1)

        assert first.seed != second.seed
        assert replication_config(medium_config, 0) == replication_config(medium_config, 0)

    def test_window_capped_by_simulated_years(self, medium_config):
        window = study_window(replace(medium_config, years=(1986, 1992)))

        assert window.end_year == 1992
        assert window.shock_year == 1992

    @pytest.mark.slow
    def test_single_replication_summary(self, medium_config):
        row = estimate_replication(medium_config, 0)
        summary = summarize(ground_truth(medium_config), pd.DataFrame([row]))

        assert row['additivity'] == pytest.approx(0.0, abs=1e-10)
        assert row['c'] == pytest.approx(medium_config.c_ratio, abs=1e-9)
        assert (summary['mc_se'] > 0).all()


@pytest.mark.slow
class TestValidation:
    """Full oracle suite on a medium economy."""

    @pytest.fixture(scope='class')
    def finished(self):
        return []

    @pytest.fixture(scope='class')
    def report(self, medium_config, finished):
        return validate(medium_config, replications=2, workers=2,
                        on_replication=lambda: finished.append(1))

    def test_progress_once_per_replication(self, report, finished):
        assert len(finished) == 2

    def test_deterministic_checks_pass(self, report):
        checks = {c.name: c for c in report.checks}

        for name in DETERMINISTIC_CHECKS:
            assert checks[name].passed, checks[name].detail

    def test_every_quantity_checked(self, report):
        names = {c.name for c in report.checks}

        for quantity in ('beta_R', 'displacement', 'crowding_out', 'relocation', 'gamma_W',
                         'gamma_R'):
            assert f'bias_{quantity}' in names

    def test_employment_sign(self, report):
        summary = report.monte_carlo.summary.set_index('quantity')

        assert summary.loc['beta_R', 'mean'] < 0
        assert summary.loc['gamma_W', 'mean'] < 0

    def test_written_files(self, report, tmp_path):
        paths = write_validation(report, tmp_path)

        text = paths['validation.txt'].read_text()
        assert text.rstrip().endswith('PASS') or text.rstrip().endswith('FAIL')
        assert 'structural_round_trip' in paths['validation.csv'].read_text()
