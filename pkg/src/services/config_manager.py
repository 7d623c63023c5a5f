"""Configuration manager for YAML simulation and estimation files."""

import logging
from dataclasses import MISSING, fields, is_dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Type, TypeVar, Union

import yaml

from src.exceptions import ConfigurationError
from src.models.economy import EconomySpec
from src.models.run_config import RunCommand, RunConfig, Study
from src.models.simulation import (
    Demographics,
    FirstStageSpec,
    FlowSpec,
    HoursMix,
    SimConfig,
    TaskMix,
    WageSpec,
)
from src.services.canonical_model import calibrate_two_type_economy
from src.services.settings import RuntimeSettings

logger = logging.getLogger(__name__)

CONFIG_VERSION = '1.0'
DEFAULT_ETA_POP = 4.64
DEFAULT_ETA_EFF = 3.68
DEFAULT_PHI = -1.95

SIMULATED_INPUTS = {
    'spells_path': 'spells.csv',
    'municipalities_path': 'municipalities.csv',
    'tasks_path': 'tasks.csv',
    'truth_path': 'truth.txt',
}
ESTIMATION_KEYS = ('base_year', 'end_year', 'reps', 'seed', 'workers', 'studies')
SECTIONS: Dict[str, type] = {
    'first_stage': FirstStageSpec,
    'hours_mix': HoursMix,
    'demographics': Demographics,
    'task_mix': TaskMix,
    'flows': FlowSpec,
    'wages': WageSpec,
}

T = TypeVar('T')


def default_economy() -> EconomySpec:
    """Two-type economy with the headline supply and demand elasticities."""
    return calibrate_two_type_economy(DEFAULT_ETA_POP, DEFAULT_ETA_EFF, phi=DEFAULT_PHI)


def default_sim_config(**overrides: Any) -> SimConfig:
    """SimConfig on the default economy; keyword arguments replace top-level fields."""
    overrides.setdefault('economy', default_economy())
    return SimConfig(**overrides)


def _build(cls: Type[T], data: Dict[str, Any], section: str) -> T:
    """Instantiate a flat dataclass from a mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigurationError(f"Section '{section}' must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(f"Unknown keys in '{section}': {', '.join(unknown)}")
    kwargs: Dict[str, Any] = {}
    for key, value in data.items():
        default = known[key].default
        if default is MISSING and known[key].default_factory is not MISSING:  # type: ignore[misc]
            default = known[key].default_factory()  # type: ignore[misc]
        if isinstance(default, tuple) and isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid '{section}' section: {e}")


class ConfigManager:
    """Service for loading and saving YAML run configurations."""

    def load_config(self, filepath: Union[str, Path]) -> Dict[str, Any]:
        """Load configuration from YAML file.

        Args:
            filepath: Path to YAML config file

        Returns:
            Configuration dictionary

        Raises:
            FileNotFoundError: If file doesn't exist
            ConfigurationError: If the YAML is invalid or not a mapping
        """
        config_path = Path(filepath)

        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {filepath}")

        try:
            with open(config_path, 'r') as f:
                config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            logger.error(f"Invalid YAML in {filepath}: {e}")
            raise ConfigurationError(f"Invalid YAML in {filepath}: {e}")

        if config is None:
            config = {}
        if not isinstance(config, dict):
            raise ConfigurationError("Config must be a dictionary")

        version = str(config.get('version', CONFIG_VERSION))
        if version != CONFIG_VERSION:
            logger.warning(f"Unknown config version: {version}")

        unknown = sorted(set(config) - {'version', 'simulation', 'estimation'})
        if unknown:
            raise ConfigurationError(f"Unknown top-level sections: {', '.join(unknown)}")

        logger.info(f"Loaded config from {filepath}")
        return config

    def save_config(self, config: Dict[str, Any], filepath: Union[str, Path]):
        """Save configuration to YAML file.

        Args:
            config: Configuration dictionary
            filepath: Path to save YAML file
        """
        config_path = Path(filepath)
        config_path.parent.mkdir(parents=True, exist_ok=True)

        with open(config_path, 'w') as f:
            yaml.dump(config, f, default_flow_style=False, sort_keys=False)

        logger.info(f"Saved config to {filepath}")

    def parse_simulation_config(self, config: Dict[str, Any]) -> SimConfig:
        """Build a SimConfig from the 'simulation' section.

        Missing keys keep their defaults; an absent 'economy' uses the
        default two-type economy.

        Raises:
            ConfigurationError: If a key is unknown or a value is invalid
        """
        section = dict(config.get('simulation') or {})
        kwargs: Dict[str, Any] = {}

        economy = section.pop('economy', None)
        try:
            kwargs['economy'] = default_economy() if economy is None \
                else EconomySpec.from_dict(economy)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid 'simulation.economy' section: {e}")

        for name, cls in SECTIONS.items():
            if name in section:
                kwargs[name] = _build(cls, section.pop(name) or {}, f'simulation.{name}')

        top_level = {f.name for f in fields(SimConfig)} - set(SECTIONS) - {'economy'}
        unknown = sorted(set(section) - top_level)
        if unknown:
            raise ConfigurationError(f"Unknown keys in 'simulation': {', '.join(unknown)}")
        for key, value in section.items():
            kwargs[key] = tuple(value) if isinstance(value, list) else value

        try:
            return SimConfig(**kwargs)
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"Invalid 'simulation' section: {e}")

    def parse_estimation_config(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """Validated 'estimation' section with studies parsed into Study values."""
        section = dict(config.get('estimation') or {})
        unknown = sorted(set(section) - set(ESTIMATION_KEYS))
        if unknown:
            raise ConfigurationError(f"Unknown keys in 'estimation': {', '.join(unknown)}")
        if 'studies' in section:
            raw = section['studies']
            names = [raw] if isinstance(raw, str) else list(raw or [])
            try:
                section['studies'] = [Study(name) for name in names]
            except ValueError as e:
                raise ConfigurationError(f"Invalid study in 'estimation.studies': {e}")
        for key in ('base_year', 'end_year', 'reps', 'seed', 'workers'):
            if key in section and not isinstance(section[key], int):
                raise ConfigurationError(
                    f"estimation.{key} must be an integer, got {section[key]!r}"
                )
        return section

    def build_config_dict(self, sim: SimConfig,
                          estimation: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Config dictionary that parse_simulation_config reads back unchanged."""
        simulation = sim.to_dict()
        for key, value in list(simulation.items()):
            simulation[key] = _plain(value)
        config: Dict[str, Any] = {'version': CONFIG_VERSION, 'simulation': simulation}
        if estimation:
            config['estimation'] = {
                key: ([s.value for s in value] if key == 'studies' else value)
                for key, value in estimation.items()
            }
        return config

    def build_run_config(
        self,
        command: RunCommand,
        flags: Dict[str, Any],
        env: Optional[RuntimeSettings] = None,
    ) -> RunConfig:
        """Merge CLI flags, the config file and environment defaults.

        Precedence is flag, then config file, then environment, then the
        built-in default. Flags set to None count as absent.

        Raises:
            ConfigurationError: If the merged configuration is invalid
        """
        env = env or RuntimeSettings.from_env()
        file_values: Dict[str, Any] = {}
        config_path = flags.get('config_path')
        if config_path is not None:
            file_values = self.parse_estimation_config(self.load_config(config_path))

        def pick(key: str, fallback: Any) -> Any:
            if flags.get(key) is not None:
                return flags[key]
            if key in file_values:
                return file_values[key]
            return fallback

        studies: List[Study] = list(flags.get('studies') or []) or file_values.get(
            'studies', [Study.ALL]
        )
        out_dir = Path(flags.get('out_dir') or env.out_dir)
        kwargs = {
            key: flags.get(key)
            for key in ('spells_path', 'municipalities_path', 'tasks_path', 'truth_path',
                        'config_path')
        }
        if command is RunCommand.ESTIMATE:
            # simulate's outputs in the output directory are the default inputs
            for key, name in SIMULATED_INPUTS.items():
                candidate = out_dir / name
                required = key in ('spells_path', 'municipalities_path')
                if kwargs[key] is None and (required or candidate.exists()):
                    kwargs[key] = candidate
        try:
            return RunConfig(
                command=command,
                out_dir=out_dir,
                base_year=pick('base_year', 1990),
                end_year=pick('end_year', 1993),
                # validate runs without bootstrap unless reps is set
                reps=pick('reps', 0 if command is RunCommand.VALIDATE else env.reps),
                seed=pick('seed', env.seed),
                workers=pick('workers', env.workers),
                studies=studies,
                scale=flags.get('scale') or 1.0,
                replications=flags.get('replications') or 1,
                **kwargs,
            )
        except ValueError as e:
            raise ConfigurationError(str(e))


def _plain(value: Any) -> Any:
    """Tuples to lists, recursively, so yaml.safe_load reads the dump back."""
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    if isinstance(value, list):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if is_dataclass(value):
        raise ConfigurationError(f"Unexpected nested dataclass {type(value).__name__}")
    return value
