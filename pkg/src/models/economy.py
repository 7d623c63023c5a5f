"""Economy model: worker types, technology and immigration shocks."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Union

from src.exceptions import EmptyEconomyError, InvalidParameterError


class CapitalSupply(Enum):
    """Sentinel for a perfectly inelastic capital supply."""

    INFINITE = "infinite"


INFINITE_LAMBDA = CapitalSupply.INFINITE

LambdaValue = Union[float, CapitalSupply]


def parse_lambda(value: Any) -> LambdaValue:
    """Parse a lambda value from config text, accepting 'infinite'/'inf'."""
    if isinstance(value, CapitalSupply):
        return value
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinite", "infinity"):
        return INFINITE_LAMBDA
    number = float(value)
    if math.isinf(number):
        return INFINITE_LAMBDA
    return number


@dataclass
class WorkerTypeSpec:
    """A native worker type of the canonical model.

    Attributes:
        theta: Productive efficiency multiplying the base price of labor
        eta: Labor supply elasticity of the type
        count: Headcount mass (FTE-weighted allowed)
        name: Optional label used in reports and truth files
    """

    theta: float
    eta: float
    count: float
    name: str = ""

    def __post_init__(self):
        """Validate type after initialization."""
        self.validate()

    def validate(self):
        """Validate type parameters.

        Raises:
            InvalidParameterError: If any parameter is out of range
        """
        if not (math.isfinite(self.theta) and self.theta > 0):
            raise InvalidParameterError(f"theta must be positive, got {self.theta}")
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise InvalidParameterError(f"eta must be non-negative, got {self.eta}")
        if not (math.isfinite(self.count) and self.count >= 0):
            raise InvalidParameterError(f"count must be non-negative, got {self.count}")

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'theta': self.theta, 'eta': self.eta, 'count': self.count}


@dataclass
class EconomySpec:
    """Technology and labor supply side of the canonical model.

    Attributes:
        alpha: Capital cost share, in (0, 1)
        lambda_capital: Inverse capital supply elasticity (>= 0 or INFINITE_LAMBDA)
        tfp: Total factor productivity; shifts wage levels only
        types: Native worker types
        phi_override: Calibrated inverse labor demand elasticity replacing the
            Cobb-Douglas value when set
    """

    alpha: float
    lambda_capital: LambdaValue
    types: List[WorkerTypeSpec]
    tfp: float = 1.0
    phi_override: Optional[float] = None

    def __post_init__(self):
        """Validate economy after initialization."""
        self.validate()

    def validate(self):
        """Validate economy parameters.

        Raises:
            InvalidParameterError: If alpha, lambda, tfp or phi are out of range
            EmptyEconomyError: If no type has a positive count
        """
        if not (0 < self.alpha < 1):
            raise InvalidParameterError(f"alpha must be in (0, 1), got {self.alpha}")
        if not isinstance(self.lambda_capital, CapitalSupply):
            if not (self.lambda_capital >= 0) or math.isinf(self.lambda_capital):
                raise InvalidParameterError(
                    f"lambda_capital must be finite and >= 0 (or INFINITE_LAMBDA), "
                    f"got {self.lambda_capital}"
                )
        if not (self.tfp > 0):
            raise InvalidParameterError(f"tfp must be positive, got {self.tfp}")
        if self.phi_override is not None and not (self.phi_override <= 0):
            raise InvalidParameterError(f"phi_override must be <= 0, got {self.phi_override}")
        if not self.types:
            raise EmptyEconomyError("Economy needs at least one worker type")
        if not any(t.count > 0 for t in self.types):
            raise EmptyEconomyError("At least one worker type must have a positive count")

    @property
    def population_shares(self) -> List[float]:
        """Headcount share of every type."""
        total = sum(t.count for t in self.types)
        return [t.count / total for t in self.types]

    def to_dict(self) -> Dict[str, Any]:
        lam = self.lambda_capital
        return {
            'alpha': self.alpha,
            'lambda_capital': 'infinite' if isinstance(lam, CapitalSupply) else lam,
            'tfp': self.tfp,
            'phi_override': self.phi_override,
            'types': [t.to_dict() for t in self.types],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EconomySpec':
        types = [
            WorkerTypeSpec(
                theta=float(t['theta']),
                eta=float(t['eta']),
                count=float(t['count']),
                name=str(t.get('name', '')),
            )
            for t in data.get('types', [])
        ]
        phi = data.get('phi_override')
        return cls(
            alpha=float(data.get('alpha', 0.3)),
            lambda_capital=parse_lambda(data.get('lambda_capital', 1.0)),
            types=types,
            tfp=float(data.get('tfp', 1.0)),
            phi_override=None if phi is None else float(phi),
        )


@dataclass
class ShockSpec:
    """An immigration shock.

    Attributes:
        di_head: Shock in headcount share (dI^P)
        c_ratio: Efficiency-unit shock divided by headcount shock
    """

    di_head: float
    c_ratio: float

    def __post_init__(self):
        """Validate shock after initialization."""
        self.validate()

    def validate(self):
        if not (self.di_head >= 0):
            raise InvalidParameterError(f"di_head must be >= 0, got {self.di_head}")
        if not (self.c_ratio > 0):
            raise InvalidParameterError(f"c_ratio must be positive, got {self.c_ratio}")


@dataclass
class ModelResponses:
    """Closed-form responses per unit headcount shock.

    Attributes:
        phi: Inverse labor demand elasticity
        eta_eff: Efficiency-weighted supply elasticity
        eta_pop: Population-weighted supply elasticity
        pure_wage: d log w / dI^P
        employment: d log E / dI^P
        regional_wage: d log mean regional wage / dI^P
    """

    phi: float
    eta_eff: float
    eta_pop: float
    pure_wage: float
    employment: float
    regional_wage: float

    @property
    def labor_demand_elasticity(self) -> float:
        """Labor demand elasticity 1/phi (-inf when demand is perfectly elastic)."""
        if self.phi == 0:
            return -math.inf
        return 1.0 / self.phi

    def scaled(self, di_head: float) -> Dict[str, float]:
        """Level changes for a shock of size di_head."""
        return {
            'pure_wage': self.pure_wage * di_head,
            'employment': self.employment * di_head,
            'regional_wage': self.regional_wage * di_head,
        }


@dataclass
class TypeFlowDerivatives:
    """Transition propensities of one worker type around the baseline.

    Derivatives are taken with respect to the local wage ratio w_r1/w_r0.

    Attributes:
        baseline_employment: Pr(employed in r at base), must be > 0
        d_employed: d Pr(employed anywhere at end | employed in r at base)
        d_enter: d Pr(employed in r at end | not employed in r at base)
        d_relocate: d Pr(employed in another region at end | employed in r at base)
        name: Type label
    """

    baseline_employment: float
    d_employed: float
    d_enter: float
    d_relocate: float
    name: str = ""

    def __post_init__(self):
        for label in ('baseline_employment', 'd_employed', 'd_enter', 'd_relocate'):
            value = getattr(self, label)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{label} must be finite, got {value}")
        if not (0 <= self.baseline_employment <= 1):
            raise InvalidParameterError(
                f"baseline_employment must be a probability, got {self.baseline_employment}"
            )


@dataclass
class ElasticityComponents:
    """Displacement, crowding-out and relocation elasticities of a type."""

    displacement: float
    crowding_out: float
    relocation: float
    name: str = ""

    @property
    def eta(self) -> float:
        """Signed sum displacement + crowding_out - relocation."""
        return self.displacement + self.crowding_out - self.relocation

    def as_tuple(self):
        return (self.displacement, self.crowding_out, self.relocation)

