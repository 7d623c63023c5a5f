"""
Contract tests for the main CLI interface.

Validates command availability, help output, exit codes and the files each
command writes.

Run with: pytest tests/contract/test_cli_interface.py -v
"""

import pytest
import yaml
from click.testing import CliRunner

from src.cli.__main__ import cli
from src.exceptions import StudyError
from src.models.run_config import RunCommand, Study
from src.services.pipeline import PipelineResult


@pytest.fixture(scope='module')
def small_config_file(tmp_path_factory):
    """YAML config with a small simulated economy."""
    path = tmp_path_factory.mktemp('config') / 'small.yaml'
    path.write_text(yaml.dump({
        'version': '1.0',
        'simulation': {
            'n_border': 30,
            'n_control': 60,
            'n_districts': 10,
            'workers_per_muni': 30,
        },
        'estimation': {'reps': 0},
    }))
    return path


@pytest.fixture(scope='module')
def simulated_dir(tmp_path_factory, small_config_file):
    out = tmp_path_factory.mktemp('simulated')
    result = CliRunner().invoke(cli, ['simulate', '--config', str(small_config_file),
                                      '--seed', '5', '--out', str(out)])
    assert result.exit_code == 0, result.output
    return out


class TestCLIInterface:
    """Test cases for the main CLI interface contract."""

    @pytest.mark.parametrize('command', ['simulate', 'estimate', 'report', 'validate'])
    def test_command_help(self, command):
        result = CliRunner().invoke(cli, [command, '--help'])

        assert result.exit_code == 0
        assert '--out' in result.output

    def test_group_help_lists_commands(self):
        result = CliRunner().invoke(cli, ['--help'])

        assert result.exit_code == 0
        for command in ('simulate', 'estimate', 'report', 'validate'):
            assert command in result.output

    def test_version(self):
        result = CliRunner().invoke(cli, ['--version'])

        assert result.exit_code == 0
        assert 'shockdecomp' in result.output

    def test_simulate_writes_outputs(self, simulated_dir):
        for name in ('spells.csv', 'municipalities.csv', 'tasks.csv', 'truth.txt',
                     'simulation.yaml'):
            assert (simulated_dir / name).exists()

    def test_simulation_yaml_records_seed(self, simulated_dir):
        written = yaml.safe_load((simulated_dir / 'simulation.yaml').read_text())

        assert written['simulation']['seed'] == 5
        assert written['simulation']['n_border'] == 30

    def test_estimate_employment(self, simulated_dir, small_config_file):
        result = CliRunner().invoke(cli, [
            'estimate', '--config', str(small_config_file), '--out', str(simulated_dir),
            '--study', 'employment', '--study', 'wages',
        ])

        assert result.exit_code == 0, result.output
        assert (simulated_dir / 'employment.csv').exists()
        assert (simulated_dir / 'wages.txt').exists()
        assert (simulated_dir / 'truth_comparison.csv').exists()

    def test_report_after_estimate(self, simulated_dir, small_config_file):
        CliRunner().invoke(cli, ['estimate', '--config', str(small_config_file), '--out',
                                 str(simulated_dir), '--study', 'employment'])

        result = CliRunner().invoke(cli, ['report', '--out', str(simulated_dir)])

        assert result.exit_code == 0, result.output
        assert '== employment ==' in (simulated_dir / 'summary.txt').read_text()

    def test_estimate_missing_spells(self, tmp_path):
        result = CliRunner().invoke(cli, ['estimate', '--out', str(tmp_path), '--reps', '0'])

        assert result.exit_code == 1
        assert 'failed' in result.output

    def test_report_without_tables(self, tmp_path):
        result = CliRunner().invoke(cli, ['report', '--out', str(tmp_path)])

        assert result.exit_code == 1

    def test_unknown_study_rejected(self, tmp_path):
        result = CliRunner().invoke(cli, ['estimate', '--out', str(tmp_path),
                                          '--study', 'productivity'])

        assert result.exit_code == 2

    def test_missing_config_file(self, tmp_path):
        result = CliRunner().invoke(cli, ['simulate', '--config', str(tmp_path / 'absent.yaml'),
                                          '--out', str(tmp_path)])

        assert result.exit_code == 1

    def test_flags_reach_run_config(self, mocker, tmp_path):
        run = mocker.patch('src.cli.options.run_pipeline', return_value=PipelineResult())

        result = CliRunner().invoke(cli, ['validate', '--out', str(tmp_path), '--seed', '4',
                                          '--replications', '3', '--scale', '0.1',
                                          '--reps', '7'])

        assert result.exit_code == 0, result.output
        config = run.call_args.args[0]
        assert config.command is RunCommand.VALIDATE
        assert (config.seed, config.replications, config.scale) == (4, 3, 0.1)
        assert config.reps == 7
        assert config.out_dir == tmp_path
        assert callable(run.call_args.kwargs['on_replication'])

    def test_validate_without_bootstrap_by_default(self, mocker, tmp_path):
        run = mocker.patch('src.cli.options.run_pipeline', return_value=PipelineResult())

        result = CliRunner().invoke(cli, ['validate', '--out', str(tmp_path)])

        assert result.exit_code == 0, result.output
        assert run.call_args.args[0].reps == 0

    def test_simulate_accepts_estimation_flags(self, mocker, tmp_path):
        run = mocker.patch('src.cli.options.run_pipeline', return_value=PipelineResult())

        result = CliRunner().invoke(cli, ['simulate', '--out', str(tmp_path), '--study', 'wages',
                                          '--base-year', '1989', '--end-year', '1992',
                                          '--reps', '9'])

        assert result.exit_code == 0, result.output
        config = run.call_args.args[0]
        assert config.command is RunCommand.SIMULATE
        assert config.studies == [Study.WAGES]
        assert (config.base_year, config.end_year, config.reps) == (1989, 1992, 9)

    def test_failed_step_sets_exit_status(self, mocker, tmp_path):
        failed = PipelineResult()
        failed.fail(StudyError('wages', ValueError('no stayers')))
        mocker.patch('src.cli.options.run_pipeline', return_value=failed)

        result = CliRunner().invoke(cli, ['estimate', '--out', str(tmp_path), '--reps', '0'])

        assert result.exit_code == 1
        assert 'wages' in result.output
