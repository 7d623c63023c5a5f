"""
Integration tests for the simulate, estimate and report workflow.

Run with: pytest tests/integration/test_pipeline.py -v
"""

import pandas as pd
import pytest
import yaml

from src.models.run_config import RunCommand, RunConfig, Study
from src.services.pipeline import run_pipeline, study_window
from src.services.synthpanel import read_truth

pytestmark = pytest.mark.integration


@pytest.fixture(scope='module')
def workspace(tmp_path_factory):
    """Output directory holding a simulated panel."""
    root = tmp_path_factory.mktemp('pipeline')
    config_path = root / 'small.yaml'
    config_path.write_text(yaml.dump({'simulation': {
        'n_border': 40, 'n_control': 80, 'n_districts': 12, 'workers_per_muni': 40,
    }}))
    out = root / 'out'
    result = run_pipeline(RunConfig(command=RunCommand.SIMULATE, out_dir=out,
                                    config_path=config_path, seed=2))
    assert result.status == 0
    return out


def _estimate(out, studies, **kwargs):
    return run_pipeline(RunConfig(
        command=RunCommand.ESTIMATE,
        out_dir=out,
        spells_path=out / 'spells.csv',
        municipalities_path=out / 'municipalities.csv',
        tasks_path=out / 'tasks.csv',
        truth_path=out / 'truth.txt',
        reps=0,
        seed=2,
        studies=studies,
        **kwargs,
    ))


class TestSimulateStep:
    """Artifacts of the simulate command."""

    def test_artifacts(self, workspace):
        names = {p.name for p in workspace.iterdir()}

        assert {'spells.csv', 'municipalities.csv', 'tasks.csv', 'truth.txt',
                'simulation.yaml'} <= names

    def test_effective_config_is_rerunnable(self, workspace, tmp_path):
        again = run_pipeline(RunConfig(command=RunCommand.SIMULATE, out_dir=tmp_path,
                                       config_path=workspace / 'simulation.yaml', seed=2))

        assert again.status == 0
        assert (tmp_path / 'spells.csv').read_text() == (workspace / 'spells.csv').read_text()

    def test_estimation_flags_recorded(self, workspace):
        written = yaml.safe_load((workspace / 'simulation.yaml').read_text())

        assert written['estimation'] == {'base_year': 1990, 'end_year': 1993, 'reps': 500,
                                         'studies': ['all']}


class TestEstimateStep:
    """Studies on the simulated panel."""

    def test_decompositions(self, workspace):
        result = _estimate(workspace, [Study.EMPLOYMENT, Study.WAGES, Study.ROUTINE])

        assert result.status == 0, [str(f) for f in result.failures]
        for name in ('employment', 'wages', 'routine'):
            assert (workspace / f'{name}.txt').exists()
            assert (workspace / f'{name}.csv').exists()

    def test_truth_comparison(self, workspace):
        _estimate(workspace, [Study.EMPLOYMENT])
        truth = read_truth(workspace / 'truth.txt')

        comparison = pd.read_csv(workspace / 'truth_comparison.csv')
        total = comparison.loc[comparison['component'] == 'total', 'truth'].iat[0]

        assert total == pytest.approx(truth.beta_R)

    def test_structural_and_event_studies(self, workspace):
        result = _estimate(workspace, [Study.STRUCTURAL, Study.EVENT_STUDY])

        assert result.status == 0, [str(f) for f in result.failures]
        structural = pd.read_csv(workspace / 'structural.csv')
        c = structural.loc[structural['quantity'] == 'c', 'value'].iat[0]
        assert c == pytest.approx(0.789, abs=1e-9)
        assert (workspace / 'event_employment.csv').exists()

    def test_missing_input(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            _estimate(tmp_path, [Study.EMPLOYMENT])

    def test_report_summarizes_tables(self, workspace):
        _estimate(workspace, [Study.EMPLOYMENT])

        result = run_pipeline(RunConfig(command=RunCommand.REPORT, out_dir=workspace))

        assert result.status == 0
        summary = (workspace / 'summary.txt').read_text()
        assert '== employment ==' in summary

    def test_study_window(self):
        window = study_window(RunConfig(command=RunCommand.REPORT, base_year=1990,
                                        end_year=1991))

        assert (window.shock_year, window.early_year) == (1991, 1991)
