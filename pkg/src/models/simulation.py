"""Simulation configuration, municipality registry and ground truth models."""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from src.models.economy import EconomySpec


def _check_probability(name: str, value: float):
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must be in [0, 1], got {value}")


def _check_non_negative(name: str, value: float):
    if not (value >= 0.0) or math.isinf(value):
        raise ValueError(f"{name} must be finite and >= 0, got {value}")


def _check_distribution(name: str, values: Tuple[float, ...]):
    for v in values:
        _check_probability(name, v)
    if abs(sum(values) - 1.0) > 1e-9:
        raise ValueError(f"{name} probabilities must sum to 1, got {sum(values)}")


@dataclass
class MunicipalitySpec:
    """A study municipality.

    Attributes:
        muni_id: Unique identifier
        district_id: District (cluster) identifier
        is_border: Treatment-region flag
        distance_km: Airline distance to the nearest border crossing
            (border municipalities only)
        n_workers0: Baseline native worker count
    """

    muni_id: int
    district_id: int
    is_border: bool
    distance_km: Optional[float]
    n_workers0: int

    def __post_init__(self):
        """Validate municipality after initialization."""
        self.validate()

    def validate(self):
        if self.n_workers0 < 1:
            raise ValueError(f"n_workers0 must be positive, got {self.n_workers0}")
        if self.is_border:
            if self.distance_km is None or not (self.distance_km >= 0):
                raise ValueError(
                    f"Border municipality {self.muni_id} needs distance_km >= 0, "
                    f"got {self.distance_km}"
                )
        elif self.distance_km is not None:
            raise ValueError(f"Control municipality {self.muni_id} must not carry a distance")

    @property
    def distance_scaled(self) -> float:
        """Distance in units of 100 km (0 for control municipalities)."""
        return (self.distance_km or 0.0) / 100.0


@dataclass
class FirstStageSpec:
    """Quadratic shock schedule in distance/100 with uniform noise.

    Attributes:
        const: Border intercept
        b1: Linear distance coefficient
        b2: Squared distance coefficient
        control_const: Expected shock of control municipalities
        noise_spread: Half-width of the uniform disturbance
        max_distance_km: Border municipalities are spread over [0, max]
        inflow_1991_share: Share of the 1992 commuter count present in 1991
    """

    const: float = 0.103
    b1: float = -0.308
    b2: float = 0.247
    control_const: float = 0.001
    noise_spread: float = 0.03
    max_distance_km: float = 80.0
    inflow_1991_share: float = 0.5

    def __post_init__(self):
        _check_non_negative('noise_spread', self.noise_spread)
        _check_non_negative('control_const', self.control_const)
        _check_non_negative('max_distance_km', self.max_distance_km)
        _check_probability('inflow_1991_share', self.inflow_1991_share)

    def mean_shock(self, distance_km: Optional[float], is_border: bool) -> float:
        """Expected shock before noise and clamping."""
        if not is_border:
            return self.control_const
        d = (distance_km or 0.0) / 100.0
        return self.const + self.b1 * d + self.b2 * d * d

    @classmethod
    def zero(cls) -> 'FirstStageSpec':
        """Schedule without any shock."""
        return cls(const=0.0, b1=0.0, b2=0.0, control_const=0.0, noise_spread=0.0)


@dataclass
class HoursMix:
    """Probabilities of the three hours bands."""

    full_time: float = 0.82
    part_18_to_30: float = 0.11
    part_under_18: float = 0.07

    def __post_init__(self):
        _check_distribution('hours_mix', (self.full_time, self.part_18_to_30, self.part_under_18))

    def probabilities(self) -> Tuple[float, float, float]:
        return (self.full_time, self.part_18_to_30, self.part_under_18)


@dataclass
class Demographics:
    """Age, gender, education and apprenticeship distributions.

    Attributes:
        incumbent_age: Inclusive (min, max) base-year age of incumbents
        entrant_age: Inclusive (min, max) base-year age of the entrant pool
        female_share: Probability a worker is female
        education: Probabilities of None / Apprenticeship / University
        apprentice_share: Expected apprentices per baseline worker
        apprentice_response: Apprenticeship employment response per unit shock
        age_profile: Coefficients (linear, squared) of age in log wages
    """

    incumbent_age: Tuple[int, int] = (20, 58)
    entrant_age: Tuple[int, int] = (20, 58)
    female_share: float = 0.42
    education: Tuple[float, float, float] = (0.15, 0.70, 0.15)
    apprentice_share: float = 0.06
    apprentice_response: float = 1.3
    age_profile: Tuple[float, float] = (0.04, -0.0005)

    def __post_init__(self):
        self.incumbent_age = tuple(int(a) for a in self.incumbent_age)  # type: ignore[assignment]
        self.entrant_age = tuple(int(a) for a in self.entrant_age)  # type: ignore[assignment]
        self.education = tuple(float(p) for p in self.education)  # type: ignore[assignment]
        self.age_profile = tuple(float(p) for p in self.age_profile)  # type: ignore[assignment]
        for label, (lo, hi) in (('incumbent_age', self.incumbent_age),
                                ('entrant_age', self.entrant_age)):
            if not (16 <= lo <= hi <= 60):
                raise ValueError(f"{label} must satisfy 16 <= min <= max <= 60, got {(lo, hi)}")
        _check_probability('female_share', self.female_share)
        _check_distribution('education', self.education)
        _check_non_negative('apprentice_share', self.apprentice_share)

    def older_share(self, threshold: int = 50) -> float:
        """Share of incumbents at or above threshold under the uniform age draw."""
        lo, hi = self.incumbent_age
        if hi < threshold:
            return 0.0
        return (hi - max(lo, threshold) + 1) / (hi - lo + 1)


@dataclass
class TaskMix:
    """Occupation catalogue and task-class dynamics.

    Attributes:
        routine_share: Probability a worker holds a routine occupation
        n_routine_occupations: Size of the routine part of the catalogue
        n_abstract_occupations: Size of the abstract part of the catalogue
        routine_tilt: Mean-preserving scaling of flow slopes towards routine workers
        upgrade_rate: Yearly routine-to-abstract switching rate of stayers
        upgrade_response: Upgrading response per unit shock
        downgrade_rate: Yearly abstract-to-routine switching rate of stayers
        survey_individuals: Surveyed individuals per occupation in tasks.csv
        survey_tasks: Tasks reported per surveyed individual
    """

    routine_share: float = 0.709
    n_routine_occupations: int = 28
    n_abstract_occupations: int = 12
    routine_tilt: float = 0.0
    upgrade_rate: float = 0.0
    upgrade_response: float = 0.0
    downgrade_rate: float = 0.0
    survey_individuals: int = 25
    survey_tasks: int = 12

    def __post_init__(self):
        _check_probability('routine_share', self.routine_share)
        _check_probability('upgrade_rate', self.upgrade_rate)
        _check_probability('downgrade_rate', self.downgrade_rate)
        if self.n_routine_occupations < 1 or self.n_abstract_occupations < 1:
            raise ValueError("Catalogue needs at least one routine and one abstract occupation")
        if self.survey_individuals < 1 or self.survey_tasks < 1:
            raise ValueError("Task survey needs at least one individual and one task")
        if not (-1.0 < self.routine_tilt < 1.0 / max(1.0 - self.routine_share, 1e-9)):
            raise ValueError(f"routine_tilt out of range, got {self.routine_tilt}")

    def task_multipliers(self) -> Tuple[float, float]:
        """(routine, abstract) slope multipliers averaging to one."""
        share = self.routine_share
        return 1.0 + self.routine_tilt * (1.0 - share), 1.0 - self.routine_tilt * share


@dataclass
class FlowSpec:
    """Baseline transition rates and raw response slopes.

    Attributes:
        exit_rate: Yearly exit rate of incumbents to non-employment
        relocate_rate: Yearly relocation rate of incumbents
        inflow_rate: Yearly entrants per baseline worker
        backward_rate: Yearly rate of incumbents absent before the base year
        pool_ratio: Entrant pool size per baseline worker
        nonemployed_pool_share: Share of the pool non-employed at base
        prior_spell_share: Share of the non-employed pool with a spell in the last four years
        find_elsewhere_rate: Yearly rate at which non-employed find work outside
        displacement: Raw displacement slope
        crowding_out: Raw crowding-out slope
        relocation: Raw relocation slope
        older_tilt: Mean-preserving displacement scaling towards workers aged 50+
    """

    exit_rate: float = 0.05
    relocate_rate: float = 0.03
    inflow_rate: float = 0.10
    backward_rate: float = 0.05
    pool_ratio: float = 1.5
    nonemployed_pool_share: float = 0.5
    prior_spell_share: float = 0.6
    find_elsewhere_rate: float = 0.05
    displacement: float = 0.739
    crowding_out: float = 4.085
    relocation: float = 0.218
    older_tilt: float = 0.0

    def __post_init__(self):
        for name in ('exit_rate', 'relocate_rate', 'backward_rate', 'nonemployed_pool_share',
                     'prior_spell_share', 'find_elsewhere_rate'):
            _check_probability(name, getattr(self, name))
        _check_non_negative('inflow_rate', self.inflow_rate)
        if not (self.pool_ratio > 0):
            raise ValueError(f"pool_ratio must be positive, got {self.pool_ratio}")
        if self.displacement + self.crowding_out - self.relocation <= 0:
            raise ValueError("Raw flow slopes must have a positive signed sum")
        if not (-1.0 < self.older_tilt < 3.0):
            raise ValueError(f"older_tilt out of range, got {self.older_tilt}")


@dataclass
class WageSpec:
    """Log daily wage process.

    Attributes:
        base_wage: Base-year log wage intercept
        year_trend: Common log wage growth per year
        sigma_region: Std of municipality wage effects
        sigma_theta: Std of individual fixed effects around the type level
        sigma_e: Std of the i.i.d. time-varying wage component
        censor_limit: Log wage right-censoring point
        nonemployed_penalty: Extra wage response per unit shock for
            re-employed workers non-employed at base
        type_education_link: Probability education is determined by type
        apprentice_discount: Log wage gap of apprentices below the base intercept
    """

    base_wage: float = 3.5
    year_trend: float = 0.02
    sigma_region: float = 0.05
    sigma_theta: float = 0.25
    sigma_e: float = 0.123
    censor_limit: float = 5.35
    nonemployed_penalty: float = 0.0
    type_education_link: float = 0.0
    apprentice_discount: float = 1.0

    def __post_init__(self):
        for name in ('sigma_region', 'sigma_theta', 'sigma_e'):
            _check_non_negative(name, getattr(self, name))
        _check_probability('type_education_link', self.type_education_link)

    @property
    def sigma_de_target(self) -> float:
        """Std of wage growth of stayers implied by sigma_e."""
        return math.sqrt(2.0) * self.sigma_e


@dataclass
class SimConfig:
    """Complete simulator configuration.

    Attributes:
        seed: RNG seed
        years: Inclusive (first, last) year span
        base_year: Base period of the shock
        shock_year: Year in which the shock is fully in place
        economy: Structural economy driving responses
        c_ratio: Efficiency-to-headcount shock ratio of commuters
        n_border: Number of border municipalities
        n_control: Number of control municipalities
        n_districts: Number of districts (clusters)
        workers_per_muni: Mean baseline native workers per municipality
        first_stage: Distance schedule of the shock
        hours_mix: Hours band probabilities
        demographics: Demographic distributions
        task_mix: Occupation catalogue and switching
        flows: Transition rates and slopes
        wages: Wage process
    """

    economy: EconomySpec
    seed: int = 0
    years: Tuple[int, int] = (1986, 1995)
    base_year: int = 1990
    shock_year: int = 1992
    c_ratio: float = 0.789
    n_border: int = 290
    n_control: int = 1210
    n_districts: int = 40
    workers_per_muni: int = 65
    first_stage: FirstStageSpec = field(default_factory=FirstStageSpec)
    hours_mix: HoursMix = field(default_factory=HoursMix)
    demographics: Demographics = field(default_factory=Demographics)
    task_mix: TaskMix = field(default_factory=TaskMix)
    flows: FlowSpec = field(default_factory=FlowSpec)
    wages: WageSpec = field(default_factory=WageSpec)

    def __post_init__(self):
        """Validate configuration after initialization."""
        self.years = (int(self.years[0]), int(self.years[1]))
        self.validate()

    def validate(self):
        """Validate cross-field constraints.

        Raises:
            ValueError: If any constraint is violated
        """
        first, last = self.years
        if not (first + 4 <= self.base_year < self.shock_year <= last):
            raise ValueError(
                f"Need years[0] + 4 <= base_year < shock_year <= years[1], got "
                f"years={self.years}, base={self.base_year}, shock={self.shock_year}"
            )
        if not (self.c_ratio > 0):
            raise ValueError(f"c_ratio must be positive, got {self.c_ratio}")
        if self.n_border < 1 or self.n_control < 1:
            raise ValueError("Need at least one border and one control municipality")
        if self.n_districts < 2:
            raise ValueError(f"Need at least two districts, got {self.n_districts}")
        if self.n_districts > self.n_border + self.n_control:
            raise ValueError("More districts than municipalities")
        if self.workers_per_muni < 2:
            raise ValueError(f"workers_per_muni must be at least 2, got {self.workers_per_muni}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    @property
    def year_list(self) -> List[int]:
        return list(range(self.years[0], self.years[1] + 1))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['economy'] = self.economy.to_dict()
        return data


@dataclass
class GroundTruth:
    """Closed-form targets of a simulator configuration.

    Attributes:
        beta_R: Regional employment effect per unit shock
        gamma_W: Pure wage effect per unit shock
        gamma_R: Regional wage effect per unit shock (level composition)
        gamma_R_meanlog: Regional mean-log wage effect of the simulated composition
        eta_eff: Efficiency-weighted supply elasticity
        eta_pop: Population-weighted supply elasticity
        phi: Inverse labor demand elasticity
        c: Shock ratio
        displacement: Population-weighted displacement slope (per unit shock)
        crowding_out: Population-weighted crowding-out slope (per unit shock)
        relocation: Population-weighted relocation slope (per unit shock)
        type_components: Per-type (name, displacement, crowding_out, relocation)
            elasticities with respect to the local wage
        first_stage: (const, b1, b2) of the shock schedule
    """

    beta_R: float
    gamma_W: float
    gamma_R: float
    gamma_R_meanlog: float
    eta_eff: float
    eta_pop: float
    phi: float
    c: float
    displacement: float
    crowding_out: float
    relocation: float
    type_components: List[Tuple[str, float, float, float]] = field(default_factory=list)
    first_stage: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    SCALARS = (
        'beta_R', 'gamma_W', 'gamma_R', 'gamma_R_meanlog', 'eta_eff', 'eta_pop', 'phi', 'c',
        'displacement', 'crowding_out', 'relocation',
    )

    def to_text(self) -> str:
        """Render as key = value lines."""
        lines = [f"{key} = {getattr(self, key)!r}" for key in self.SCALARS]
        const, b1, b2 = self.first_stage
        lines.append(f"first_stage_const = {const!r}")
        lines.append(f"first_stage_b1 = {b1!r}")
        lines.append(f"first_stage_b2 = {b2!r}")
        for name, disp, crowd, reloc in self.type_components:
            lines.append(f"type.{name}.displacement = {disp!r}")
            lines.append(f"type.{name}.crowding_out = {crowd!r}")
            lines.append(f"type.{name}.relocation = {reloc!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> 'GroundTruth':
        """Parse key = value lines written by to_text."""
        values: Dict[str, str] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise ValueError(f"Malformed truth line: {raw!r}")
            key, value = line.split('=', 1)
            values[key.strip()] = value.strip()
        missing = [k for k in cls.SCALARS if k not in values]
        if missing:
            raise ValueError(f"Truth file misses keys: {', '.join(missing)}")
        components: Dict[str, Dict[str, float]] = {}
        for key, value in values.items():
            if key.startswith('type.'):
                _, name, part = key.split('.', 2)
                components.setdefault(name, {})[part] = float(value)
        type_components = [
            (name, parts['displacement'], parts['crowding_out'], parts['relocation'])
            for name, parts in components.items()
        ]
        first_stage = (
            float(values.get('first_stage_const', 0.0)),
            float(values.get('first_stage_b1', 0.0)),
            float(values.get('first_stage_b2', 0.0)),
        )
        return cls(
            **{k: float(values[k]) for k in cls.SCALARS},
            type_components=type_components,
            first_stage=first_stage,
        )
