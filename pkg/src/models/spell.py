"""Spell, transition and flow aggregate models."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Union


class TaskClass(Enum):
    """Occupation task class."""

    ROUTINE = "Routine"
    ABSTRACT = "Abstract"


class HoursBand(Enum):
    """Contractual weekly hours band."""

    FULL_TIME = "FullTime"
    PART_18_TO_30 = "Part18to30"
    PART_UNDER_18 = "PartUnder18"


class Education(Enum):
    """Highest vocational degree."""

    NONE = "None"
    APPRENTICESHIP = "Apprenticeship"
    UNIVERSITY = "University"


class Nationality(Enum):
    """Native worker or cross-border commuter."""

    NATIVE = "Native"
    COMMUTER = "Commuter"


class TransitionClass(Enum):
    """Labor market status change between base and end period."""

    STAYER = "Stayer"
    DISPLACED = "Displaced"
    RELOCATED = "Relocated"
    INFLOW_FROM_NONEMP = "InflowFromNonEmp"
    INFLOW_FROM_OTHER_REGION = "InflowFromOtherRegion"
    NONEMPLOYED_BOTH = "NonEmployedBoth"


NON_EMPLOYED = "NonEmployed"

# Full-time equivalent weights of the hours bands
FTE_WEIGHTS: Dict[HoursBand, float] = {
    HoursBand.FULL_TIME: 1.0,
    HoursBand.PART_18_TO_30: 0.67,
    HoursBand.PART_UNDER_18: 0.5,
}

SPELL_COLUMNS = [
    'worker_id', 'year', 'employed', 'muni_id', 'district_id', 'occupation_code',
    'task_class', 'log_daily_wage', 'censored', 'hours_band', 'age', 'female',
    'education', 'apprentice', 'nationality',
]

MIN_AGE = 16
MAX_AGE = 65


@dataclass
class SpellRecord:
    """One worker-year observation as of the annual reference date.

    Attributes:
        worker_id: Worker identifier
        year: Calendar year
        employed: Whether the worker holds a job spell
        muni_id: Workplace municipality (None when non-employed)
        district_id: District of the workplace municipality
        occupation_code: Occupation identifier
        task_class: Routine or abstract occupation class
        log_daily_wage: Log daily wage (None when non-employed)
        censored: Wage was top-coded at the censoring limit
        hours_band: Contractual hours band
        age: Age in years
        female: Gender flag
        education: Highest degree
        apprentice: Currently in apprenticeship training
        nationality: Native or commuter
    """

    worker_id: int
    year: int
    employed: bool
    muni_id: Optional[int] = None
    district_id: Optional[int] = None
    occupation_code: Optional[str] = None
    task_class: Optional[TaskClass] = None
    log_daily_wage: Optional[float] = None
    censored: bool = False
    hours_band: Optional[HoursBand] = None
    age: int = 30
    female: bool = False
    education: Optional[Education] = None
    apprentice: bool = False
    nationality: Nationality = Nationality.NATIVE

    def __post_init__(self):
        """Validate record after initialization."""
        self.validate()

    def validate(self):
        """Validate record invariants.

        Raises:
            ValueError: If the record violates the employed/wage/muni coupling
        """
        if self.employed:
            if self.muni_id is None:
                raise ValueError(f"Employed spell of worker {self.worker_id} needs a muni_id")
            if self.log_daily_wage is None:
                raise ValueError(f"Employed spell of worker {self.worker_id} needs a wage")
        else:
            if self.muni_id is not None or self.log_daily_wage is not None:
                raise ValueError(
                    f"Non-employed spell of worker {self.worker_id} must not carry muni or wage"
                )

    @property
    def fte(self) -> float:
        """Full-time equivalent weight of the spell (0 when non-employed)."""
        if not self.employed or self.hours_band is None:
            return 0.0
        return FTE_WEIGHTS[self.hours_band]

    @property
    def is_full_time(self) -> bool:
        return self.employed and self.hours_band == HoursBand.FULL_TIME

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a flat dict keyed by the CSV column names."""
        def _value(v):
            return v.value if isinstance(v, Enum) else v
        return {name: _value(getattr(self, name)) for name in SPELL_COLUMNS}


Location = Union[int, str]


@dataclass
class TransitionRecord:
    """A worker's classified move between base and end period.

    Attributes:
        worker_id: Worker identifier
        base_year: Base period
        end_year: End period
        region: Study municipality the classification refers to
        origin: Base municipality or NON_EMPLOYED
        destination: End municipality or NON_EMPLOYED
        classification: Transition class relative to region
        task0: Task class at base (None when non-employed)
        task1: Task class at end (None when non-employed)
        wage0: Base log wage, full-time spells only
        wage1: End log wage, full-time spells only
        fte0: Base FTE weight
        fte1: End FTE weight
    """

    worker_id: int
    base_year: int
    end_year: int
    region: Optional[int]
    origin: Location
    destination: Location
    classification: TransitionClass
    task0: Optional[TaskClass] = None
    task1: Optional[TaskClass] = None
    wage0: Optional[float] = None
    wage1: Optional[float] = None
    fte0: float = 0.0
    fte1: float = 0.0


@dataclass
class FlowAggregate:
    """FTE-weighted native employment flows of one municipality.

    Attributes:
        muni_id: Municipality
        E0: Base-period employment
        E1: End-period employment
        e_stay: Stayers (base FTE)
        e_exit: Outflows to non-employment
        e_relocate: Outflows to other regions
        e_inflow: Inflows, equal to E1 - e_stay; absorbs stayers' hours changes
        inflow_nonemp: Inflows from non-employment
        inflow_other: Inflows from other regions
        stayer_hours_change: FTE change of stayers folded into e_inflow
        task: Per task class split (E0, E1, exit, relocate, inflow, stay_same,
            switch_out, switch_in) keyed by task class value
    """

    muni_id: int
    E0: float
    E1: float
    e_stay: float
    e_exit: float
    e_relocate: float
    e_inflow: float
    inflow_nonemp: float = 0.0
    inflow_other: float = 0.0
    stayer_hours_change: float = 0.0
    task: Dict[str, Dict[str, float]] = field(default_factory=dict)

    @property
    def growth(self) -> float:
        return (self.E1 - self.E0) / self.E0

    def identity_residual(self) -> float:
        """Growth minus its signed outflow/inflow decomposition."""
        return self.growth - (-self.e_exit / self.E0 + self.e_inflow / self.E0
                              - self.e_relocate / self.E0)
