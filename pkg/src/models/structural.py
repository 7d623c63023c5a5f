"""Reduced-form inputs, structural parameters and selection bounds."""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from src.models.regression import ProbitResult


@dataclass
class ReducedForm:
    """Regional employment, regional wage and pure wage effects with the shock ratio."""

    beta_R: float
    gamma_R: float
    gamma_W: float
    c: float

    def __post_init__(self):
        for name in ('beta_R', 'gamma_R', 'gamma_W', 'c'):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")


@dataclass
class StructuralParameters:
    """Supply elasticities and inverse labor demand elasticity."""

    eta_pop: float
    eta_eff: float
    phi: float

    @property
    def labor_demand_elasticity(self) -> float:
        return -math.inf if self.phi == 0 else 1.0 / self.phi

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.eta_pop, self.eta_eff, self.phi)


@dataclass
class SelectionBoundInputs:
    """Inputs of the selection-bias bounds on the pure wage effect.

    Attributes:
        sigma_de: Std of the time-varying wage growth component
        probit_a: Intercept of the latent stay propensity
        probit_b: Shock slope of the latent stay propensity
        mean_shock: Mean shock over incumbents
        rho_grid: Correlations between stay and wage-growth shocks
    """

    sigma_de: float
    probit_a: float
    probit_b: float
    mean_shock: float
    rho_grid: Tuple[float, ...] = (-1.0, 1.0)

    def __post_init__(self):
        """Validate inputs after initialization."""
        self.rho_grid = tuple(float(r) for r in self.rho_grid)
        self.validate()

    def validate(self):
        for name in ('sigma_de', 'probit_a', 'probit_b', 'mean_shock'):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.sigma_de < 0:
            raise ValueError(f"sigma_de must be >= 0, got {self.sigma_de}")
        if not self.rho_grid:
            raise ValueError("rho_grid must not be empty")
        for rho in self.rho_grid:
            if not (-1.0 <= rho <= 1.0):
                raise ValueError(f"rho must be in [-1, 1], got {rho}")


@dataclass
class SelectionBounds:
    """Bias bounds and the marginal effect of the shock on staying.

    Attributes:
        pi: Latent stay index at the mean shock
        mills: Inverse Mills ratio at pi
        mills_derivative: Derivative of the inverse Mills ratio at pi
        bias: rho -> bias
        bias_low: Smallest bias over the grid
        bias_high: Largest bias over the grid
        marginal_stay_effect: pdf(pi) * b
    """

    pi: float
    mills: float
    mills_derivative: float
    bias: Dict[float, float]
    bias_low: float
    bias_high: float
    marginal_stay_effect: float


@dataclass
class StructuralReport:
    """Structural recovery and selection bounds of one panel.

    Attributes:
        reduced_form: Estimated (beta_R, gamma_R, gamma_W, c)
        parameters: Recovered parameters (None when recovery is degenerate)
        naive: Recovery that reads gamma_R as the price response
        inputs: Selection bound inputs from the probit index route
        bounds: Bounds with pi from the probit index
        share_bounds: Bounds with pi from the inverse normal of the stay share
        stay_share: Share of incumbents staying in their municipality
        probit: Stay probit estimates
        notes: Diagnostics, including degenerate recoveries
    """

    reduced_form: ReducedForm
    parameters: Optional[StructuralParameters]
    naive: Optional[StructuralParameters]
    inputs: SelectionBoundInputs
    bounds: SelectionBounds
    share_bounds: SelectionBounds
    stay_share: float
    probit: Optional[ProbitResult] = None
    notes: List[str] = field(default_factory=list)

    def rows(self) -> List[Dict[str, Any]]:
        """(quantity, value) rows in a fixed order."""
        rf = self.reduced_form
        items: List[Tuple[str, float]] = [
            ('beta_R', rf.beta_R), ('gamma_R', rf.gamma_R), ('gamma_W', rf.gamma_W), ('c', rf.c),
        ]
        if self.parameters is not None:
            items += [
                ('eta_pop', self.parameters.eta_pop),
                ('eta_eff', self.parameters.eta_eff),
                ('phi', self.parameters.phi),
                ('labor_demand_elasticity', self.parameters.labor_demand_elasticity),
            ]
        if self.naive is not None:
            items += [('naive_eta_pop', self.naive.eta_pop), ('naive_phi', self.naive.phi)]
        items += [
            ('sigma_de', self.inputs.sigma_de),
            ('probit_a', self.inputs.probit_a),
            ('probit_b', self.inputs.probit_b),
            ('mean_shock', self.inputs.mean_shock),
            ('pi', self.bounds.pi),
            ('mills_derivative', self.bounds.mills_derivative),
            ('bias_low', self.bounds.bias_low),
            ('bias_high', self.bounds.bias_high),
            ('marginal_stay_effect', self.bounds.marginal_stay_effect),
            ('stay_share', self.stay_share),
            ('pi_from_share', self.share_bounds.pi),
            ('share_bias_low', self.share_bounds.bias_low),
            ('share_bias_high', self.share_bounds.bias_high),
        ]
        return [{'quantity': name, 'value': value} for name, value in items]
