"""Runtime defaults from the environment and .env files."""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from src.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

ENV_PREFIX = 'SHOCKDECOMP_'
DEFAULT_REPS = 500
DEFAULT_SEED = 0
DEFAULT_WORKERS = 1
DEFAULT_OUT = 'out'


@dataclass
class RuntimeSettings:
    """Environment-level defaults; CLI flags and config files override them.

    Attributes:
        reps: Bootstrap replications
        seed: Seed for simulation and bootstrap
        workers: Worker threads
        out_dir: Output directory
    """

    reps: int = DEFAULT_REPS
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS
    out_dir: Path = Path(DEFAULT_OUT)

    @classmethod
    def from_env(cls, env_file: Optional[str] = None) -> 'RuntimeSettings':
        """Read SHOCKDECOMP_* variables, loading a .env file first when present.

        Variables already set in the process environment win over the file.

        Raises:
            ConfigurationError: If a numeric variable does not parse
        """
        path = Path(env_file or '.env')
        if path.exists():
            load_dotenv(path, override=False)
            logger.debug(f"Loaded environment defaults from {path}")
        return cls(
            reps=_int_var('REPS', DEFAULT_REPS),
            seed=_int_var('SEED', DEFAULT_SEED),
            workers=_int_var('WORKERS', DEFAULT_WORKERS),
            out_dir=Path(os.environ.get(f'{ENV_PREFIX}OUT', DEFAULT_OUT)),
        )


def _int_var(name: str, default: int) -> int:
    key = f'{ENV_PREFIX}{name}'
    raw = os.environ.get(key)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{key} must be an integer, got {raw!r}")
