"""
Contract tests for the closed-form canonical model.
"""

import pytest

from src.exceptions import (
    EmptyEconomyError,
    InvalidParameterError,
    SingularEquilibriumError,
    UndefinedElasticityError,
)
from src.models.economy import (
    INFINITE_LAMBDA,
    EconomySpec,
    ShockSpec,
    TypeFlowDerivatives,
    WorkerTypeSpec,
    parse_lambda,
)
from src.services.canonical_model import (
    calibrate_two_type_economy,
    elasticity_components,
    flows_from_components,
    forward_responses,
    inverse_demand_elasticity,
    meanlog_wedge,
    normalize_components,
    responses_from_parameters,
    weighted_elasticities,
)


@pytest.fixture
def headline_economy():
    return calibrate_two_type_economy(4.64, 3.68, phi=-1.95)


class TestDemandSide:
    """Inverse labor demand elasticity."""

    def test_cobb_douglas_value(self):
        assert inverse_demand_elasticity(0.3, 1.0) == pytest.approx(-0.3 / 1.7)

    def test_perfectly_elastic_capital(self):
        assert inverse_demand_elasticity(0.3, 0.0) == 0.0

    def test_perfectly_inelastic_capital(self):
        assert inverse_demand_elasticity(0.3, INFINITE_LAMBDA) == pytest.approx(-0.3)
        assert parse_lambda('infinite') is INFINITE_LAMBDA
        assert parse_lambda(float('inf')) is INFINITE_LAMBDA

    @pytest.mark.parametrize('alpha,lam', [(0.0, 1.0), (1.0, 1.0), (0.3, -0.1)])
    def test_out_of_range(self, alpha, lam):
        with pytest.raises(InvalidParameterError):
            inverse_demand_elasticity(alpha, lam)


class TestForwardResponses:
    """Pure wage, employment and regional wage responses."""

    def test_headline_calibration(self, headline_economy):
        responses = forward_responses(headline_economy, ShockSpec(di_head=0.01, c_ratio=0.789))

        assert responses.eta_pop == pytest.approx(4.64, abs=1e-9)
        assert responses.eta_eff == pytest.approx(3.68, abs=1e-9)
        assert responses.pure_wage == pytest.approx(-0.188, abs=2e-3)
        assert responses.employment == pytest.approx(-0.873, abs=2e-3)
        assert responses.regional_wage == pytest.approx(-0.0075, abs=1e-3)

    def test_employment_is_eta_pop_times_pure_wage(self):
        responses = responses_from_parameters(-0.5, 2.0, 3.0, 0.8)

        assert responses.employment == pytest.approx(3.0 * responses.pure_wage)
        assert responses.regional_wage == pytest.approx(responses.pure_wage * 0.0)

    def test_homogeneous_types_equal_wedges(self):
        economy = EconomySpec(alpha=0.3, lambda_capital=1.0, types=[
            WorkerTypeSpec(theta=1.0, eta=2.0, count=10.0),
            WorkerTypeSpec(theta=3.0, eta=2.0, count=5.0),
        ])

        responses = forward_responses(economy, ShockSpec(di_head=0.02, c_ratio=1.0))

        assert responses.regional_wage == pytest.approx(responses.pure_wage)

    def test_tfp_leaves_responses_unchanged(self, headline_economy):
        shock = ShockSpec(di_head=0.01, c_ratio=0.789)
        shifted = EconomySpec.from_dict({**headline_economy.to_dict(), 'tfp': 3.5})

        assert forward_responses(shifted, shock) == forward_responses(headline_economy, shock)

    def test_type_order_does_not_matter(self, headline_economy):
        reversed_types = EconomySpec(alpha=0.3, lambda_capital=1.0,
                                     types=list(reversed(headline_economy.types)),
                                     phi_override=-1.95)

        assert weighted_elasticities(reversed_types.types) == \
            weighted_elasticities(headline_economy.types)

    def test_inelastic_supply_means_no_employment_response(self):
        economy = EconomySpec(alpha=0.3, lambda_capital=1.0,
                              types=[WorkerTypeSpec(theta=1.0, eta=0.0, count=1.0)])

        responses = forward_responses(economy, ShockSpec(di_head=0.01, c_ratio=1.0))

        assert responses.employment == 0.0
        assert responses.pure_wage == pytest.approx(-0.3 / 1.7)

    def test_singular_equilibrium(self):
        with pytest.raises(SingularEquilibriumError):
            responses_from_parameters(0.5, 2.0, 2.0, 1.0)

    def test_empty_economy(self):
        with pytest.raises(EmptyEconomyError):
            EconomySpec(alpha=0.3, lambda_capital=1.0,
                        types=[WorkerTypeSpec(theta=1.0, eta=1.0, count=0.0)])

    def test_scaled_levels(self, headline_economy):
        responses = forward_responses(headline_economy, ShockSpec(di_head=0.01, c_ratio=0.789))

        levels = responses.scaled(0.01)

        assert levels['employment'] == pytest.approx(responses.employment * 0.01)


class TestElasticityComponents:
    """Displacement, crowding-out and relocation margins."""

    def test_signed_sum_is_eta(self):
        flows = TypeFlowDerivatives(baseline_employment=0.5, d_employed=0.2, d_enter=0.3,
                                    d_relocate=0.1, name='low')

        components = elasticity_components(flows)

        assert components.crowding_out == pytest.approx(0.3)
        assert components.eta == pytest.approx(0.4)

    def test_inverse_mapping(self):
        flows = TypeFlowDerivatives(baseline_employment=0.25, d_employed=1.0, d_enter=0.4,
                                    d_relocate=0.2)

        back = flows_from_components(elasticity_components(flows), 0.25)

        assert back.d_enter == pytest.approx(0.4)
        assert back.d_relocate == pytest.approx(0.2)

    def test_zero_baseline_employment(self):
        flows = TypeFlowDerivatives(baseline_employment=0.0, d_employed=0.0, d_enter=0.1,
                                    d_relocate=0.0)

        with pytest.raises(UndefinedElasticityError):
            elasticity_components(flows)

    def test_normalize_to_eta(self):
        components = normalize_components(4.64, 0.7, 4.0, 0.2)

        assert components.eta == pytest.approx(4.64)
        assert components.displacement / components.crowding_out == pytest.approx(0.7 / 4.0)


class TestCalibration:
    """Two-type calibration and the mean-log wedge."""

    def test_hits_targets(self, headline_economy):
        eta_eff, eta_pop = weighted_elasticities(headline_economy.types)

        assert eta_eff == pytest.approx(3.68)
        assert eta_pop == pytest.approx(4.64)
        assert sum(headline_economy.population_shares) == pytest.approx(1.0)

    def test_negative_theta_eta_correlation(self, headline_economy):
        low, high = headline_economy.types

        assert high.theta > low.theta
        assert high.eta < low.eta
        assert meanlog_wedge(headline_economy.types) < 0

    def test_equal_etas_have_no_wedge(self):
        types = [WorkerTypeSpec(theta=1.0, eta=2.0, count=1.0),
                 WorkerTypeSpec(theta=2.0, eta=2.0, count=1.0)]

        assert meanlog_wedge(types) == pytest.approx(0.0, abs=1e-15)

    def test_unreachable_targets(self):
        with pytest.raises(InvalidParameterError):
            calibrate_two_type_economy(1.0, 5.0)
