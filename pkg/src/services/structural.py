"""Structural parameter recovery, the shock ratio c and selection-bias bounds."""

import logging
from typing import Optional, Tuple

import numpy as np

from src.exceptions import DegenerateRecoveryError, EmptySampleError, UndefinedRatioError
from src.models.regression import ProbitResult
from src.models.spell import TransitionClass
from src.models.structural import (
    ReducedForm,
    SelectionBoundInputs,
    SelectionBounds,
    StructuralParameters,
    StructuralReport,
)
from src.models.study import StudyWindow
from src.services.econometrics import gaussian_mills, normal_quantile, probit_mle
from src.services.paneldata import SpellPanel, wage_bill
from src.services.studies import (
    BASE_ROLES,
    InferenceSettings,
    decompose_employment,
    pure_wage_effect,
    regional_wage_effect,
    shock_frame,
)

logger = logging.getLogger(__name__)


def recover_structural(rf: ReducedForm) -> StructuralParameters:
    """Invert the reduced form into (eta_pop, eta_eff, phi).

    eta_pop = beta_R / gamma_W, eta_eff = gamma_R / gamma_W - 1 + eta_pop and
    phi = gamma_W / (c + (eta_eff / eta_pop) * beta_R).

    Raises:
        DegenerateRecoveryError: If gamma_W, eta_pop or the phi denominator is zero
    """
    if rf.gamma_W == 0:
        raise DegenerateRecoveryError('gamma_W')
    eta_pop = rf.beta_R / rf.gamma_W
    if eta_pop == 0:
        raise DegenerateRecoveryError('eta_pop')
    eta_eff = rf.gamma_R / rf.gamma_W - 1.0 + eta_pop
    denominator = rf.c + (eta_eff / eta_pop) * rf.beta_R
    if denominator == 0:
        raise DegenerateRecoveryError('phi_denominator')
    return StructuralParameters(eta_pop=eta_pop, eta_eff=eta_eff, phi=rf.gamma_W / denominator)


def naive_recovery(rf: ReducedForm) -> StructuralParameters:
    """Recovery that reads the regional wage effect as the price response.

    Without composition adjustment eta_eff equals eta_pop, so
    eta_pop = beta_R / gamma_R and phi = gamma_R / (c * (1 + beta_R)).
    """
    if rf.gamma_R == 0:
        raise DegenerateRecoveryError('gamma_R')
    eta_pop = rf.beta_R / rf.gamma_R
    denominator = rf.c * (1.0 + rf.beta_R)
    if denominator == 0:
        raise DegenerateRecoveryError('phi_denominator')
    return StructuralParameters(eta_pop=eta_pop, eta_eff=eta_pop, phi=rf.gamma_R / denominator)


def ratio_from_aggregates(commuter_count: float, total_count: float,
                          commuter_bill: float, total_bill: float) -> float:
    """Wage-bill share of the commuter inflow divided by its headcount share.

    Raises:
        UndefinedRatioError: If the headcount shock is zero
    """
    if total_count <= 0 or total_bill <= 0:
        raise UndefinedRatioError("Base employment and wage bill must be positive")
    headcount_shock = commuter_count / total_count
    if headcount_shock == 0:
        raise UndefinedRatioError("Headcount shock is zero; c is undefined")
    return (commuter_bill / total_bill) / headcount_shock


def shock_ratio_c(panel: SpellPanel, window: Optional[StudyWindow] = None) -> float:
    """Efficiency-to-headcount shock ratio over the treated (border) region.

    Uses the commuter inflow between the base and shock years relative to
    the base-year FTE employment and wage bill of all employed spells.
    Wages should be the observed ones, before censored wages are imputed.

    Raises:
        UndefinedRatioError: If no commuters arrive in the treated region
    """
    window = window or StudyWindow()
    registry = panel.municipalities
    treated = set(int(m) for m in registry.index[registry['is_border'].astype(bool)])
    if not treated:
        raise UndefinedRatioError("No border municipality in the registry")
    base = wage_bill(panel.spells, treated, window.base_year)
    shock = wage_bill(panel.spells, treated, window.shock_year)
    c = ratio_from_aggregates(
        commuter_count=shock['commuter_count'] - base['commuter_count'],
        total_count=base['total_fte'],
        commuter_bill=shock['commuter_bill'] - base['commuter_bill'],
        total_bill=base['total_bill'],
    )
    logger.info(f"Shock ratio c = {c:.4f} over {len(treated)} border municipalities")
    return c


def selection_bounds(inputs: SelectionBoundInputs, pi: Optional[float] = None) -> SelectionBounds:
    """Bias bounds rho * sigma_de * lambda'(pi) * b over the rho grid.

    Args:
        inputs: sigma_de, probit (a, b), mean shock and rho grid
        pi: Latent stay index; defaults to a + b * mean_shock
    """
    if pi is None:
        pi = inputs.probit_a + inputs.probit_b * inputs.mean_shock
    mills = gaussian_mills(pi)
    bias = {
        rho: rho * inputs.sigma_de * mills.mills_derivative * inputs.probit_b
        for rho in inputs.rho_grid
    }
    return SelectionBounds(
        pi=pi,
        mills=mills.mills,
        mills_derivative=mills.mills_derivative,
        bias=bias,
        bias_low=min(bias.values()),
        bias_high=max(bias.values()),
        marginal_stay_effect=mills.pdf * inputs.probit_b,
    )


def pi_from_stay_share(share: float) -> float:
    """Latent stay index implied by the share of incumbents who stay."""
    return normal_quantile(share)


def estimate_selection_inputs(
    panel: SpellPanel,
    window: Optional[StudyWindow] = None,
    inference: Optional[InferenceSettings] = None,
) -> Tuple[SelectionBoundInputs, ProbitResult, float]:
    """sigma_de, stay probit and mean shock from the panel.

    sigma_de is the residual standard deviation of the stayers' wage growth
    regression. The probit of staying on the shock is estimated on workers
    employed in a study municipality at base.

    Returns:
        (inputs, probit, stay_share)
    """
    window = window or StudyWindow()
    inference = inference or InferenceSettings()
    pure = pure_wage_effect(panel, window, inference)
    design = shock_frame(panel, window)
    t = panel.transitions(window.base_year, window.end_year)
    incumbents = t.loc[t['classification'].isin(BASE_ROLES)
                       & t['region'].isin(design.frame.index)]
    if incumbents.empty:
        raise EmptySampleError("No incumbents for the stay probit")
    stayed = (incumbents['classification'] == TransitionClass.STAYER.value).to_numpy(dtype=float)
    shock = design.frame.loc[incumbents['region'].to_numpy(), 'shock'].to_numpy()
    probit = probit_mle(stayed, np.column_stack([np.ones(len(shock)), shock]),
                        names=['const', 'shock'])
    inputs = SelectionBoundInputs(
        sigma_de=pure.residual_std,
        probit_a=probit.coef('const'),
        probit_b=probit.coef('shock'),
        mean_shock=float(shock.mean()),
    )
    stay_share = float(stayed.mean())
    logger.info(f"Selection inputs: sigma_de {inputs.sigma_de:.4f}, a {inputs.probit_a:.4f}, "
                f"b {inputs.probit_b:.4f}, stay share {stay_share:.4f}")
    return inputs, probit, stay_share


def structural_study(
    panel: SpellPanel,
    window: Optional[StudyWindow] = None,
    inference: Optional[InferenceSettings] = None,
    c: Optional[float] = None,
) -> StructuralReport:
    """Reduced form, recovered parameters and both selection-bound routes.

    Args:
        panel: Spell panel
        window: Study window
        inference: Bootstrap settings (point estimates are all that is used)
        c: Shock ratio; measured on this panel when omitted
    """
    window = window or StudyWindow()
    inference = inference or InferenceSettings()
    point = InferenceSettings(reps=0, seed=inference.seed, workers=inference.workers)
    beta_R = decompose_employment(panel, window, point).total.value
    gamma_R = regional_wage_effect(panel, window, point).coef('shock')
    gamma_W = pure_wage_effect(panel, window, point).coef('shock')
    if c is None:
        c = shock_ratio_c(panel, window)
    rf = ReducedForm(beta_R=beta_R, gamma_R=gamma_R, gamma_W=gamma_W, c=c)

    notes = []
    parameters: Optional[StructuralParameters] = None
    naive: Optional[StructuralParameters] = None
    try:
        parameters = recover_structural(rf)
    except DegenerateRecoveryError as e:
        logger.warning(str(e))
        notes.append(str(e))
    try:
        naive = naive_recovery(rf)
    except DegenerateRecoveryError as e:
        notes.append(f"naive: {e}")

    inputs, probit, stay_share = estimate_selection_inputs(panel, window, point)
    bounds = selection_bounds(inputs)
    if 0.0 < stay_share < 1.0:
        share_bounds = selection_bounds(inputs, pi=pi_from_stay_share(stay_share))
    else:
        notes.append(f"stay share {stay_share} leaves the inverse normal undefined")
        share_bounds = bounds
    return StructuralReport(
        reduced_form=rf,
        parameters=parameters,
        naive=naive,
        inputs=inputs,
        bounds=bounds,
        share_bounds=share_bounds,
        stay_share=stay_share,
        probit=probit,
        notes=notes,
    )
