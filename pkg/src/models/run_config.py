"""Batch run configuration."""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional


class RunCommand(Enum):
    """Pipeline command."""

    SIMULATE = "simulate"
    ESTIMATE = "estimate"
    REPORT = "report"
    VALIDATE = "validate"


class Study(Enum):
    """Selectable analyses."""

    EMPLOYMENT = "employment"
    WAGES = "wages"
    ROUTINE = "routine"
    SUBGROUPS = "subgroups"
    PSEUDO_PANEL = "pseudo-panel"
    STRUCTURAL = "structural"
    EVENT_STUDY = "event-study"
    ALL = "all"

    @classmethod
    def expand(cls, studies: List['Study']) -> List['Study']:
        """Resolve ALL and drop duplicates, keeping declaration order."""
        selected = set(studies)
        if cls.ALL in selected or not selected:
            selected = set(cls) - {cls.ALL}
        return [s for s in cls if s in selected and s is not cls.ALL]


@dataclass
class RunConfig:
    """Everything a pipeline run needs.

    Attributes:
        command: Pipeline command
        out_dir: Output directory
        spells_path: Spell CSV (estimate)
        municipalities_path: Municipality registry CSV (estimate)
        tasks_path: Optional task survey CSV (estimate)
        truth_path: Optional ground-truth file (estimate compares against it)
        config_path: YAML file with simulation and estimation sections
        base_year: Base period
        end_year: End period
        reps: Wild cluster bootstrap replications
        seed: Seed for simulation and bootstrap
        workers: Threads for generation and bootstrap
        studies: Requested studies
        scale: Municipality count multiplier for simulate/validate
        replications: Simulate-estimate replications run by validate
    """

    command: RunCommand
    out_dir: Path = Path('out')
    spells_path: Optional[Path] = None
    municipalities_path: Optional[Path] = None
    tasks_path: Optional[Path] = None
    truth_path: Optional[Path] = None
    config_path: Optional[Path] = None
    base_year: int = 1990
    end_year: int = 1993
    reps: int = 500
    seed: int = 0
    workers: int = 1
    studies: List[Study] = field(default_factory=lambda: [Study.ALL])
    scale: float = 1.0
    replications: int = 1

    def __post_init__(self):
        """Validate configuration after initialization."""
        self.out_dir = Path(self.out_dir)
        for name in ('spells_path', 'municipalities_path', 'tasks_path', 'truth_path',
                     'config_path'):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))
        self.validate()

    def validate(self):
        """Validate run parameters.

        Raises:
            ValueError: If a parameter is invalid or a required input is missing
        """
        if self.base_year >= self.end_year:
            raise ValueError(
                f"base_year ({self.base_year}) must precede end_year ({self.end_year})"
            )
        if self.reps < 0:
            raise ValueError(f"reps must be >= 0, got {self.reps}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if not (self.scale > 0):
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.command is RunCommand.ESTIMATE:
            if self.spells_path is None or self.municipalities_path is None:
                raise ValueError("estimate needs a spell file and a municipality file")
        if self.config_path is not None and not self.config_path.exists():
            raise FileNotFoundError(f"Config file not found: {self.config_path}")

    @property
    def selected_studies(self) -> List[Study]:
        return Study.expand(self.studies)
