"""Closed-form canonical model of a local labor supply shock.

Wages of type k are w_k = w * theta_k; types are perfect substitutes in a
Cobb-Douglas technology with upward sloping capital supply. All responses
are derivatives per unit headcount shock.
"""

import logging
import math
from typing import Iterable, List, Sequence, Tuple

from src.exceptions import (
    EmptyEconomyError,
    InvalidParameterError,
    SingularEquilibriumError,
    UndefinedElasticityError,
)
from src.models.economy import (
    CapitalSupply,
    EconomySpec,
    ElasticityComponents,
    LambdaValue,
    ModelResponses,
    ShockSpec,
    TypeFlowDerivatives,
    WorkerTypeSpec,
)

logger = logging.getLogger(__name__)

SINGULAR_TOLERANCE = 1e-14


def inverse_demand_elasticity(alpha: float, lambda_capital: LambdaValue) -> float:
    """Inverse labor demand elasticity phi = -alpha*lambda / (1 - alpha + lambda).

    Args:
        alpha: Capital cost share in (0, 1)
        lambda_capital: Inverse capital supply elasticity, or INFINITE_LAMBDA

    Returns:
        phi in [-alpha, 0]

    Raises:
        InvalidParameterError: If alpha or lambda are out of range
    """
    if not (0 < alpha < 1):
        raise InvalidParameterError(f"alpha must be in (0, 1), got {alpha}")
    if isinstance(lambda_capital, CapitalSupply):
        return -alpha
    if not (lambda_capital >= 0) or math.isinf(lambda_capital):
        raise InvalidParameterError(f"lambda_capital must be finite and >= 0, got {lambda_capital}")
    if lambda_capital == 0:
        return 0.0
    return -alpha * lambda_capital / (1.0 - alpha + lambda_capital)


def economy_phi(economy: EconomySpec) -> float:
    """phi of an economy, honouring a calibrated override."""
    if economy.phi_override is not None:
        return float(economy.phi_override)
    return inverse_demand_elasticity(economy.alpha, economy.lambda_capital)


def weighted_elasticities(types: Sequence[WorkerTypeSpec]) -> Tuple[float, float]:
    """Efficiency- and population-weighted aggregate supply elasticities.

    Args:
        types: Worker types

    Returns:
        Tuple (eta_eff, eta_pop)

    Raises:
        EmptyEconomyError: If all counts are zero
    """
    # Sort so the float sums do not depend on the order types were listed in.
    ordered = sorted(types, key=lambda t: (t.theta, t.eta, t.count))
    population = math.fsum(t.count for t in ordered)
    if population <= 0:
        raise EmptyEconomyError("All worker type counts are zero")
    efficiency = math.fsum(t.theta * t.count for t in ordered)
    eta_eff = math.fsum(t.theta * t.count * t.eta for t in ordered) / efficiency
    eta_pop = math.fsum(t.count * t.eta for t in ordered) / population
    return eta_eff, eta_pop


def responses_from_parameters(
    phi: float, eta_eff: float, eta_pop: float, c_ratio: float
) -> ModelResponses:
    """Pure wage, employment and regional wage responses per unit dI^P.

    Raises:
        SingularEquilibriumError: If 1 - phi * eta_eff is zero
    """
    denominator = 1.0 - phi * eta_eff
    if abs(denominator) < SINGULAR_TOLERANCE:
        raise SingularEquilibriumError(
            f"1 - phi*eta_eff vanishes (phi={phi}, eta_eff={eta_eff})"
        )
    pure_wage = phi * c_ratio / denominator
    return ModelResponses(
        phi=phi,
        eta_eff=eta_eff,
        eta_pop=eta_pop,
        pure_wage=pure_wage,
        employment=eta_pop * pure_wage,
        regional_wage=pure_wage * (1.0 + eta_eff - eta_pop),
    )


def forward_responses(economy: EconomySpec, shock: ShockSpec) -> ModelResponses:
    """Model responses of an economy to a shock with ratio shock.c_ratio.

    Args:
        economy: Structural economy
        shock: Shock description; only c_ratio enters the per-unit responses

    Returns:
        ModelResponses per unit headcount shock
    """
    phi = economy_phi(economy)
    eta_eff, eta_pop = weighted_elasticities(economy.types)
    responses = responses_from_parameters(phi, eta_eff, eta_pop, shock.c_ratio)
    logger.debug(
        f"Forward responses: phi={phi:.4f} eta_eff={eta_eff:.4f} eta_pop={eta_pop:.4f} "
        f"pure={responses.pure_wage:.4f}"
    )
    return responses


def elasticity_components(flows: TypeFlowDerivatives) -> ElasticityComponents:
    """Split a type's supply elasticity into its three adjustment margins.

    Args:
        flows: Baseline employment probability and flow derivatives

    Returns:
        ElasticityComponents whose signed sum is the type's eta

    Raises:
        UndefinedElasticityError: If the baseline employment probability is zero
    """
    p0 = flows.baseline_employment
    if p0 <= 0:
        raise UndefinedElasticityError(
            f"Type '{flows.name}' has zero baseline employment probability"
        )
    crowding = flows.d_enter * (1.0 - p0) / p0
    return ElasticityComponents(
        displacement=flows.d_employed,
        crowding_out=crowding,
        relocation=flows.d_relocate,
        name=flows.name,
    )


def flows_from_components(
    components: ElasticityComponents, baseline_employment: float
) -> TypeFlowDerivatives:
    """Inverse of elasticity_components for a given baseline probability."""
    if baseline_employment <= 0 or baseline_employment >= 1:
        raise InvalidParameterError(
            f"baseline_employment must be in (0, 1), got {baseline_employment}"
        )
    p0 = baseline_employment
    return TypeFlowDerivatives(
        baseline_employment=p0,
        d_employed=components.displacement,
        d_enter=components.crowding_out * p0 / (1.0 - p0),
        d_relocate=components.relocation,
        name=components.name,
    )


def normalize_components(
    eta: float, displacement: float, crowding_out: float, relocation: float, name: str = ""
) -> ElasticityComponents:
    """Scale raw component slopes so their signed sum equals eta."""
    raw = displacement + crowding_out - relocation
    if raw <= 0:
        raise InvalidParameterError(f"Raw component slopes must sum to a positive value, got {raw}")
    scale = eta / raw
    return ElasticityComponents(
        displacement=displacement * scale,
        crowding_out=crowding_out * scale,
        relocation=relocation * scale,
        name=name,
    )


def calibrate_two_type_economy(
    eta_pop: float,
    eta_eff: float,
    theta_ratio: float = 2.0,
    phi: float = -1.95,
    alpha: float = 0.3,
    total_count: float = 100.0,
) -> EconomySpec:
    """Two-type economy hitting target population and efficiency elasticities.

    The high-efficiency share equals the share at which the arithmetic mean
    of theta matches the logarithmic mean of (1, theta_ratio), so the
    regional mean-log wage wedge coincides with the level wedge to first
    order. eta_eff < eta_pop gives the negative theta-eta correlation.

    Raises:
        InvalidParameterError: If the targets require a negative elasticity
    """
    if theta_ratio <= 1:
        raise InvalidParameterError(f"theta_ratio must exceed 1, got {theta_ratio}")
    high_share = ((theta_ratio - 1.0) / math.log(theta_ratio) - 1.0) / (theta_ratio - 1.0)
    low_share = 1.0 - high_share
    mean_theta = low_share + high_share * theta_ratio
    # eta_eff * mean_theta = low*eta_low + high*ratio*eta_high
    # eta_pop = low*eta_low + high*eta_high
    eta_high = (eta_eff * mean_theta - eta_pop) / (high_share * (theta_ratio - 1.0))
    eta_low = (eta_pop - high_share * eta_high) / low_share
    if eta_high < 0 or eta_low < 0:
        raise InvalidParameterError(
            f"Targets eta_pop={eta_pop}, eta_eff={eta_eff} need a negative type elasticity"
        )
    types = [
        WorkerTypeSpec(theta=1.0, eta=eta_low, count=total_count * low_share, name="low"),
        WorkerTypeSpec(theta=theta_ratio, eta=eta_high, count=total_count * high_share,
                       name="high"),
    ]
    return EconomySpec(alpha=alpha, lambda_capital=1.0, types=types, phi_override=phi)


def meanlog_wedge(types: Iterable[WorkerTypeSpec]) -> float:
    """Population covariance of eta and log(theta): the mean-log composition wedge."""
    type_list: List[WorkerTypeSpec] = sorted(types, key=lambda t: (t.theta, t.eta, t.count))
    population = math.fsum(t.count for t in type_list)
    if population <= 0:
        raise EmptyEconomyError("All worker type counts are zero")
    mean_log = math.fsum(t.count * math.log(t.theta) for t in type_list) / population
    return math.fsum(
        t.count * t.eta * (math.log(t.theta) - mean_log) for t in type_list
    ) / population
