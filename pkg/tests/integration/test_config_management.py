"""
Integration tests for YAML configuration management workflows.

Covers loading and saving config files, parsing the simulation and
estimation sections, environment defaults and the precedence of CLI flags
over config files over the environment.

Run with: pytest tests/integration/test_config_management.py -v
"""

from pathlib import Path

import pytest
import yaml

from src.exceptions import ConfigurationError
from src.models.run_config import RunCommand, Study
from src.services.config_manager import ConfigManager, default_sim_config
from src.services.settings import RuntimeSettings


@pytest.fixture
def manager():
    return ConfigManager()


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text(yaml.dump({
        'version': '1.0',
        'simulation': {
            'seed': 9,
            'n_border': 20,
            'n_control': 40,
            'years': [1986, 1995],
            'first_stage': {'noise_spread': 0.01},
            'demographics': {'education': [0.2, 0.6, 0.2]},
        },
        'estimation': {'reps': 25, 'base_year': 1989, 'studies': ['employment', 'wages']},
    }))
    return path


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    """No SHOCKDECOMP_* variables and no stray .env file."""
    for name in ('REPS', 'SEED', 'WORKERS', 'OUT'):
        # set first so teardown also removes values a .env file loads
        monkeypatch.setenv(f'SHOCKDECOMP_{name}', '')
        monkeypatch.delenv(f'SHOCKDECOMP_{name}')
    monkeypatch.chdir(tmp_path)
    return monkeypatch


class TestConfigFiles:
    """Loading, parsing and saving YAML configs."""

    def test_parse_simulation_section(self, manager, config_file):
        sim = manager.parse_simulation_config(manager.load_config(config_file))

        assert sim.seed == 9
        assert (sim.n_border, sim.n_control) == (20, 40)
        assert sim.years == (1986, 1995)
        assert sim.first_stage.noise_spread == 0.01
        assert sim.first_stage.const == 0.103
        assert sim.demographics.education == (0.2, 0.6, 0.2)

    def test_default_economy_when_absent(self, manager, config_file):
        sim = manager.parse_simulation_config(manager.load_config(config_file))

        assert sim.economy.types == default_sim_config().economy.types

    def test_parse_estimation_section(self, manager, config_file):
        section = manager.parse_estimation_config(manager.load_config(config_file))

        assert section['reps'] == 25
        assert section['studies'] == [Study.EMPLOYMENT, Study.WAGES]

    def test_saved_config_reads_back(self, manager, config_file, tmp_path):
        sim = manager.parse_simulation_config(manager.load_config(config_file))
        out = tmp_path / 'nested' / 'saved.yaml'

        manager.save_config(manager.build_config_dict(sim), out)
        again = manager.parse_simulation_config(manager.load_config(out))

        assert again.seed == sim.seed
        assert again.years == sim.years
        assert again.demographics == sim.demographics
        assert again.first_stage == sim.first_stage
        assert [t.eta for t in again.economy.types] == \
            pytest.approx([t.eta for t in sim.economy.types])

    def test_missing_file(self, manager, tmp_path):
        with pytest.raises(FileNotFoundError):
            manager.load_config(tmp_path / 'absent.yaml')

    def test_invalid_yaml(self, manager, tmp_path):
        path = tmp_path / 'broken.yaml'
        path.write_text('simulation: [unclosed\n')

        with pytest.raises(ConfigurationError):
            manager.load_config(path)

    def test_not_a_mapping(self, manager, tmp_path):
        path = tmp_path / 'list.yaml'
        path.write_text('- 1\n- 2\n')

        with pytest.raises(ConfigurationError):
            manager.load_config(path)

    @pytest.mark.parametrize('content', [
        {'container': {}},
        {'simulation': {'n_municipalities': 10}},
        {'simulation': {'flows': {'exit_speed': 0.1}}},
        {'estimation': {'bootstrap': 10}},
        {'estimation': {'studies': ['productivity']}},
        {'estimation': {'reps': 'many'}},
    ])
    def test_unknown_or_invalid_keys(self, manager, tmp_path, content):
        path = tmp_path / 'bad.yaml'
        path.write_text(yaml.dump(content))

        with pytest.raises(ConfigurationError):
            config = manager.load_config(path)
            manager.parse_simulation_config(config)
            manager.parse_estimation_config(config)

    def test_invalid_value_reported(self, manager, tmp_path):
        path = tmp_path / 'bad.yaml'
        path.write_text(yaml.dump({'simulation': {'first_stage': {'noise_spread': -1.0}}}))

        with pytest.raises(ConfigurationError) as exc:
            manager.parse_simulation_config(manager.load_config(path))

        assert 'first_stage' in str(exc.value)


class TestRuntimeSettings:
    """Environment defaults."""

    def test_defaults(self, clean_env):
        settings = RuntimeSettings.from_env()

        assert (settings.reps, settings.seed, settings.workers) == (500, 0, 1)
        assert settings.out_dir == Path('out')

    def test_environment_variables(self, clean_env):
        clean_env.setenv('SHOCKDECOMP_REPS', '40')
        clean_env.setenv('SHOCKDECOMP_OUT', 'results')

        settings = RuntimeSettings.from_env()

        assert settings.reps == 40
        assert settings.out_dir == Path('results')

    def test_env_file(self, clean_env, tmp_path):
        env_file = tmp_path / 'custom.env'
        env_file.write_text('SHOCKDECOMP_SEED=17\n')

        assert RuntimeSettings.from_env(str(env_file)).seed == 17

    def test_non_integer(self, clean_env):
        clean_env.setenv('SHOCKDECOMP_WORKERS', 'four')

        with pytest.raises(ConfigurationError):
            RuntimeSettings.from_env()


class TestRunConfigPrecedence:
    """Flag over config file over environment over default."""

    def test_flag_beats_file_beats_env(self, manager, config_file, tmp_path):
        env = RuntimeSettings(reps=7, seed=3, workers=2, out_dir=tmp_path / 'env-out')

        config = manager.build_run_config(RunCommand.SIMULATE, {
            'config_path': config_file, 'seed': 11, 'reps': None,
        }, env=env)

        assert config.seed == 11
        assert config.reps == 25
        assert config.workers == 2
        assert config.base_year == 1989
        assert config.out_dir == tmp_path / 'env-out'

    def test_studies_from_file_unless_flagged(self, manager, config_file):
        env = RuntimeSettings()

        from_file = manager.build_run_config(RunCommand.SIMULATE,
                                             {'config_path': config_file}, env=env)
        flagged = manager.build_run_config(RunCommand.SIMULATE, {
            'config_path': config_file, 'studies': [Study.STRUCTURAL],
        }, env=env)

        assert from_file.selected_studies == [Study.EMPLOYMENT, Study.WAGES]
        assert flagged.selected_studies == [Study.STRUCTURAL]

    def test_all_studies_by_default(self, manager):
        config = manager.build_run_config(RunCommand.SIMULATE, {}, env=RuntimeSettings())

        assert Study.ALL not in config.selected_studies
        assert len(config.selected_studies) == len(Study) - 1

    def test_estimate_defaults_inputs_to_out_dir(self, manager, tmp_path):
        (tmp_path / 'tasks.csv').write_text('')

        config = manager.build_run_config(RunCommand.ESTIMATE, {'out_dir': tmp_path},
                                          env=RuntimeSettings())

        assert config.spells_path == tmp_path / 'spells.csv'
        assert config.municipalities_path == tmp_path / 'municipalities.csv'
        assert config.tasks_path == tmp_path / 'tasks.csv'
        assert config.truth_path is None

    def test_invalid_window(self, manager):
        with pytest.raises(ConfigurationError):
            manager.build_run_config(RunCommand.SIMULATE,
                                     {'base_year': 1993, 'end_year': 1990},
                                     env=RuntimeSettings())
