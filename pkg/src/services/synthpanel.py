"""Microsimulator of a border-commuter labor supply shock.

Every study municipality hosts incumbents employed there in the base year, a
pool of potential entrants, apprentices and (after the base year) commuters.
Natives appear in every simulated year, as non-employed rows while out of work.
Transition propensities respond linearly to the local wage change
gamma_W * I_rt with type-specific slopes whose signed sum is the type's
supply elasticity, so municipality aggregates follow the canonical model in
expectation.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.models.economy import ShockSpec
from src.models.simulation import GroundTruth, MunicipalitySpec, SimConfig
from src.models.spell import SPELL_COLUMNS, Education, HoursBand, Nationality, TaskClass
from src.services.canonical_model import (
    forward_responses,
    meanlog_wedge,
    normalize_components,
    weighted_elasticities,
)
from src.services.paneldata import (
    coerce_spell_frame,
    registry_frame,
    wage_bill,
    write_municipalities,
    write_spells,
)
from src.services.task_classifier import write_task_survey

logger = logging.getLogger(__name__)

# SeedSequence spawn keys of the independent streams
CATALOG_STREAM = 0
MUNI_STREAM = 1
SURVEY_STREAM = 2

OUTSIDE_MUNI_OFFSET = 900000
OLDER_AGE = 50
ROUTINE_TASK_PROB = 0.75
ABSTRACT_TASK_PROB = 0.25

HOURS_LABELS = np.array([h.value for h in HoursBand], dtype=object)
HOURS_FTE = np.array([1.0, 0.67, 0.5])
EDUCATION_LABELS = np.array([e.value for e in Education], dtype=object)

# status codes in the worker x year matrices
ABSENT, LOCAL, OUTSIDE = 0, 1, 2


def municipality_rng(seed: int, muni_id: int) -> np.random.Generator:
    """Independent stream of one municipality."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(MUNI_STREAM, muni_id)))


def occupation_codes(config: SimConfig) -> Tuple[List[str], List[str]]:
    """(routine, abstract) occupation catalogue."""
    mix = config.task_mix
    routine = [f"R{i:03d}" for i in range(1, mix.n_routine_occupations + 1)]
    abstract = [f"A{i:03d}" for i in range(1, mix.n_abstract_occupations + 1)]
    return routine, abstract


def scaled_config(config: SimConfig, scale: float) -> SimConfig:
    """Config with the municipality counts multiplied by scale."""
    if not (scale > 0):
        raise ValueError(f"scale must be positive, got {scale}")
    n_border = max(1, int(round(config.n_border * scale)))
    n_control = max(1, int(round(config.n_control * scale)))
    n_districts = max(2, min(config.n_districts, n_border + n_control))
    return replace(config, n_border=n_border, n_control=n_control, n_districts=n_districts)


def build_registry(config: SimConfig) -> List[MunicipalitySpec]:
    """Draw the municipality registry.

    Border municipalities (ids 1..n_border) occupy the first districts in
    proportion to their count, control municipalities the rest.
    """
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(CATALOG_STREAM,)))
    total = config.n_border + config.n_control
    border_districts = max(1, int(round(config.n_districts * config.n_border / total)))
    border_districts = min(border_districts, config.n_districts - 1)
    control_districts = config.n_districts - border_districts

    border_d = rng.permutation(config.n_border) % border_districts + 1
    control_d = rng.permutation(config.n_control) % control_districts + border_districts + 1
    distances = rng.uniform(0.0, config.first_stage.max_distance_km, size=config.n_border)
    workers = np.maximum(2, rng.poisson(config.workers_per_muni, size=total))

    registry = []
    for i in range(total):
        border = i < config.n_border
        registry.append(MunicipalitySpec(
            muni_id=i + 1,
            district_id=int(border_d[i] if border else control_d[i - config.n_border]),
            is_border=border,
            distance_km=float(distances[i]) if border else None,
            n_workers0=int(workers[i]),
        ))
    return registry


def draw_shock(muni: MunicipalitySpec, config: SimConfig, rng: np.random.Generator) -> float:
    """Headcount shock of a municipality.

    Uniform noise of half-width noise_spread around the schedule, clamped at
    zero. One uniform is always consumed.
    """
    u = rng.random()
    mean = max(config.first_stage.mean_shock(muni.distance_km, muni.is_border), 0.0)
    return max(mean + (2.0 * u - 1.0) * config.first_stage.noise_spread, 0.0)


def _stochastic_round(value: float, rng: np.random.Generator) -> int:
    floor = math.floor(value)
    return int(floor + (rng.random() < value - floor))


@dataclass
class _Plan:
    """Quantities shared by every municipality of one simulation."""

    gamma_W: float
    shares: np.ndarray
    log_theta: np.ndarray
    displacement: np.ndarray
    crowding_out: np.ndarray
    relocation: np.ndarray
    education_by_type: np.ndarray
    task_multipliers: Tuple[float, float]
    older_multipliers: Tuple[float, float]
    n_routine: int
    n_abstract: int


def _build_plan(config: SimConfig) -> _Plan:
    economy = config.economy
    flows = config.flows
    responses = forward_responses(economy, ShockSpec(di_head=1.0, c_ratio=config.c_ratio))
    components = [
        normalize_components(t.eta, flows.displacement, flows.crowding_out, flows.relocation,
                             name=t.name)
        for t in economy.types
    ]
    thetas = np.array([t.theta for t in economy.types])
    order = np.argsort(thetas, kind='stable')
    education = np.full(len(thetas), 1, dtype=np.int64)
    education[order[0]] = 0
    if len(thetas) > 1:
        education[order[-1]] = 2
    older = config.demographics.older_share(OLDER_AGE)
    return _Plan(
        gamma_W=responses.pure_wage,
        shares=np.array(economy.population_shares),
        log_theta=np.log(thetas),
        displacement=np.array([c.displacement for c in components]),
        crowding_out=np.array([c.crowding_out for c in components]),
        relocation=np.array([c.relocation for c in components]),
        education_by_type=education,
        task_multipliers=config.task_mix.task_multipliers(),
        older_multipliers=(1.0 + flows.older_tilt * (1.0 - older), 1.0 - flows.older_tilt * older),
        n_routine=config.task_mix.n_routine_occupations,
        n_abstract=config.task_mix.n_abstract_occupations,
    )


def _draw_workers(rng: np.random.Generator, n: int, config: SimConfig, plan: _Plan,
                  age_range: Tuple[int, int]) -> Dict[str, np.ndarray]:
    """Time-invariant attributes and slopes of n workers."""
    demo = config.demographics
    k = rng.choice(len(plan.shares), size=n, p=plan.shares)
    theta_fe = plan.log_theta[k] + rng.normal(0.0, config.wages.sigma_theta, size=n)
    age0 = rng.integers(age_range[0], age_range[1] + 1, size=n)
    female = rng.random(n) < demo.female_share
    linked = rng.random(n) < config.wages.type_education_link
    drawn = rng.choice(3, size=n, p=demo.education)
    education = np.where(linked, plan.education_by_type[k], drawn)
    hours = rng.choice(3, size=n, p=config.hours_mix.probabilities())
    routine = rng.random(n) < config.task_mix.routine_share
    occ = np.where(routine, rng.integers(0, plan.n_routine, size=n),
                   plan.n_routine + rng.integers(0, plan.n_abstract, size=n))
    alt_occ = np.where(routine, plan.n_routine + rng.integers(0, plan.n_abstract, size=n),
                       rng.integers(0, plan.n_routine, size=n))
    task_mult = np.where(routine, plan.task_multipliers[0], plan.task_multipliers[1])
    age_mult = np.where(age0 >= OLDER_AGE, plan.older_multipliers[0], plan.older_multipliers[1])
    return {
        'type': k,
        'theta_fe': theta_fe,
        'age0': age0,
        'female': female,
        'education': education,
        'hours': hours,
        'routine': routine,
        'occ': occ,
        'alt_occ': alt_occ,
        'D': plan.displacement[k] * task_mult * age_mult,
        'C': plan.crowding_out[k] * task_mult,
        'R': plan.relocation[k] * task_mult,
    }


def _cumulative(rate: float, steps: np.ndarray) -> np.ndarray:
    return 1.0 - (1.0 - rate) ** np.maximum(steps, 0)


@dataclass
class _MuniOutput:
    columns: Dict[str, np.ndarray]
    n_ids: int
    shock: float
    pool_ids: np.ndarray


def _native_rows(status: np.ndarray, workers: Dict[str, np.ndarray], ids: np.ndarray,
                 years: np.ndarray, base: int, muni: MunicipalitySpec, f_r: float,
                 shock_wage: np.ndarray, extra_wage: np.ndarray, occ: np.ndarray,
                 e: np.ndarray, config: SimConfig) -> Dict[str, np.ndarray]:
    """Flatten worker x year status into one row per worker and year.

    Absent cells become non-employed rows; their muni, occupation and wage
    are blanked when the frame is assembled.
    """
    n, t = status.shape
    wages = config.wages
    a1, a2 = config.demographics.age_profile
    age = workers['age0'][:, None] + (years - base)[None, :]
    local = status == LOCAL
    log_fte = np.log(HOURS_FTE[workers['hours']])[:, None]
    latent = (wages.base_wage + wages.year_trend * (years - base)[None, :]
              + np.where(local, f_r, 0.0) + workers['theta_fe'][:, None] + e
              + a1 * age + a2 * age * age + log_fte
              + np.where(local, shock_wage[None, :] + extra_wage, 0.0))
    muni_ids = np.where(local, muni.muni_id, OUTSIDE_MUNI_OFFSET + muni.district_id)
    return {
        'worker': np.repeat(ids, t),
        'year': np.tile(years, n),
        'employed': (status != ABSENT).ravel(),
        'muni_id': muni_ids.ravel(),
        'occ': occ.ravel(),
        'latent': latent.ravel(),
        'hours': np.repeat(workers['hours'], t),
        'age': age.ravel(),
        'female': np.repeat(workers['female'], t),
        'education': np.repeat(workers['education'], t),
        'apprentice': np.zeros(n * t, dtype=bool),
        'commuter': np.zeros(n * t, dtype=bool),
    }


def _switch_occupations(workers: Dict[str, np.ndarray], u_switch: np.ndarray,
                        tau: np.ndarray, shock: np.ndarray, config: SimConfig) -> np.ndarray:
    mix = config.task_mix
    post = tau > 0
    up = (mix.upgrade_rate * tau + mix.upgrade_response * shock)[None, :]
    down = (mix.downgrade_rate * tau)[None, :]
    threshold = np.where(workers['routine'][:, None], up, down)
    switched = post[None, :] & (u_switch[:, None] < threshold)
    return np.where(switched, workers['alt_occ'][:, None], workers['occ'][:, None])


def _simulate_municipality(muni: MunicipalitySpec, config: SimConfig, plan: _Plan) -> _MuniOutput:
    rng = municipality_rng(config.seed, muni.muni_id)
    flows, demo, wages = config.flows, config.demographics, config.wages
    years = np.array(config.year_list)
    base = config.base_year
    tau = years - base
    n0 = muni.n_workers0

    delta = draw_shock(muni, config, rng)
    f_r = rng.normal(0.0, wages.sigma_region)
    incumbents = _draw_workers(rng, n0, config, plan, demo.incumbent_age)
    n_pool = int(round(flows.pool_ratio * n0))
    pool = _draw_workers(rng, n_pool, config, plan, demo.entrant_age)

    # base-year apprentices enter the commuter denominator
    apprentices_base = rng.poisson(demo.apprentice_share * n0)
    total_base = float(HOURS_FTE[incumbents['hours']].sum()) + apprentices_base
    count_end = _stochastic_round(delta * total_base, rng)
    count_early = int(rng.binomial(count_end, config.first_stage.inflow_1991_share))
    counts = np.where(years >= config.shock_year, count_end,
                      np.where(years > base, count_early, 0))
    shock = counts / total_base
    x = plan.gamma_W * shock

    # incumbents
    u_flow = rng.random(n0)
    u_back = rng.random(n0)
    u_switch = rng.random(n0)
    e_inc = rng.normal(0.0, wages.sigma_e, size=(n0, len(years)))
    p_exit = np.clip(_cumulative(flows.exit_rate, tau)[None, :]
                     - incumbents['D'][:, None] * x[None, :], 0.0, 1.0)
    p_rel = np.clip(_cumulative(flows.relocate_rate, tau)[None, :]
                    + incumbents['R'][:, None] * x[None, :], 0.0, 1.0 - p_exit)
    u = u_flow[:, None]
    status_post = np.where(u < p_exit, ABSENT, np.where(u < p_exit + p_rel, OUTSIDE, LOCAL))
    absent_pre = u_back[:, None] < _cumulative(flows.backward_rate, -tau)[None, :]
    status_inc = np.where(tau[None, :] > 0, status_post,
                          np.where(absent_pre, ABSENT, LOCAL))
    occ_inc = _switch_occupations(incumbents, u_switch, tau, shock, config)
    inc_rows = _native_rows(
        status_inc, incumbents, np.arange(n0), years, base, muni, f_r,
        plan.gamma_W * shock, np.zeros((n0, len(years))), occ_inc, e_inc, config,
    )

    # entrant pool
    nonemp = rng.random(n_pool) < flows.nonemployed_pool_share
    prior = nonemp & (rng.random(n_pool) < flows.prior_spell_share)
    prior_end = base - rng.integers(1, 5, size=n_pool)
    prior_start = rng.integers(years[0], prior_end + 1)
    u_enter = rng.random(n_pool)
    u_find = rng.random(n_pool)
    u_switch_pool = rng.random(n_pool)
    e_pool = rng.normal(0.0, wages.sigma_e, size=(n_pool, len(years)))
    p_enter = np.clip((flows.inflow_rate * tau[None, :] + pool['C'][:, None] * x[None, :])
                      / flows.pool_ratio, 0.0, 1.0)
    found = u_find[:, None] < _cumulative(flows.find_elsewhere_rate, tau)[None, :]
    enter = u_enter[:, None] < p_enter
    after = np.where(enter, LOCAL,
                     np.where(nonemp[:, None] & ~found, ABSENT, OUTSIDE))
    in_prior = (prior[:, None] & (years[None, :] >= prior_start[:, None])
                & (years[None, :] <= prior_end[:, None]))
    before = np.where(nonemp[:, None], np.where(in_prior, LOCAL, ABSENT), OUTSIDE)
    status_pool = np.where(tau[None, :] > 0, after, before)
    penalty = np.where(nonemp[:, None], wages.nonemployed_penalty * shock[None, :], 0.0)
    occ_pool = _switch_occupations(pool, u_switch_pool, tau, shock, config)
    pool_rows = _native_rows(
        status_pool, pool, n0 + np.arange(n_pool), years, base, muni, f_r,
        plan.gamma_W * shock, penalty, occ_pool, e_pool, config,
    )

    # apprentices, fresh ids each year
    next_id = n0 + n_pool
    app_counts = np.array([
        apprentices_base if year == base
        else rng.poisson(demo.apprentice_share * n0 * (1.0 + demo.apprentice_response * s))
        for year, s in zip(years, shock)
    ])
    n_app = int(app_counts.sum())
    app_years = np.repeat(years, app_counts)
    app_rows = {
        'worker': next_id + np.arange(n_app),
        'year': app_years,
        'employed': np.ones(n_app, dtype=bool),
        'muni_id': np.full(n_app, muni.muni_id),
        'occ': rng.integers(0, plan.n_routine + plan.n_abstract, size=n_app),
        'latent': (wages.base_wage - wages.apprentice_discount
                   + wages.year_trend * (app_years - base) + f_r
                   + rng.normal(0.0, wages.sigma_e, size=n_app)),
        'hours': np.zeros(n_app, dtype=np.int64),
        'age': rng.integers(16, 20, size=n_app),
        'female': rng.random(n_app) < demo.female_share,
        'education': np.zeros(n_app, dtype=np.int64),
        'apprentice': np.ones(n_app, dtype=bool),
        'commuter': np.zeros(n_app, dtype=bool),
    }
    next_id += n_app

    # commuters, wages filled once the treated wage bill is known
    present = counts[None, :] > np.arange(count_end)[:, None]
    n_rows = int(present.sum())
    com_age0 = rng.integers(20, 51, size=count_end)
    com_occ = rng.integers(0, plan.n_routine, size=count_end)
    com_rows = {
        'worker': np.repeat(next_id + np.arange(count_end), len(years))[present.ravel()],
        'year': np.tile(years, count_end)[present.ravel()],
        'employed': np.ones(n_rows, dtype=bool),
        'muni_id': np.full(n_rows, muni.muni_id),
        'occ': np.repeat(com_occ, len(years))[present.ravel()],
        'latent': np.full(n_rows, np.nan),
        'hours': np.zeros(n_rows, dtype=np.int64),
        'age': (com_age0[:, None] + tau[None, :]).ravel()[present.ravel()],
        'female': np.zeros(n_rows, dtype=bool),
        'education': np.ones(n_rows, dtype=np.int64),
        'apprentice': np.zeros(n_rows, dtype=bool),
        'commuter': np.ones(n_rows, dtype=bool),
    }
    next_id += count_end

    columns = {
        key: np.concatenate([inc_rows[key], pool_rows[key], app_rows[key], com_rows[key]])
        for key in inc_rows
    }
    columns['district'] = np.full(len(columns['worker']), muni.district_id)
    logger.debug(f"Municipality {muni.muni_id}: shock {delta:.4f}, {len(columns['worker'])} rows")
    return _MuniOutput(columns=columns, n_ids=next_id, shock=delta,
                       pool_ids=n0 + np.flatnonzero(prior))


@dataclass
class SimulationResult:
    """Simulated panel with its registry, task survey and ground truth.

    Attributes:
        spells: Canonical spell frame
        municipalities: Registry indexed by muni_id
        tasks: Task survey rows
        truth: Closed-form targets
        nonemployed_pool: worker_id -> municipality of every worker
            non-employed at base with a recent spell in a study municipality
        latent_wages: Uncensored log wages aligned with spells rows, NaN for
            non-employed rows
        shocks: Drawn expected shock per municipality
    """

    spells: pd.DataFrame
    municipalities: pd.DataFrame
    tasks: pd.DataFrame
    truth: GroundTruth
    nonemployed_pool: Dict[int, int] = field(default_factory=dict)
    latent_wages: Optional[np.ndarray] = None
    shocks: Dict[int, float] = field(default_factory=dict)


def ground_truth(config: SimConfig) -> GroundTruth:
    """Closed-form targets of a configuration.

    A configuration whose shock schedule is identically zero has no
    responses to recover, so every effect coefficient is zero.
    """
    economy = config.economy
    responses = forward_responses(economy, ShockSpec(di_head=1.0, c_ratio=config.c_ratio))
    eta_eff, eta_pop = weighted_elasticities(economy.types)
    flows = config.flows
    components = [
        normalize_components(t.eta, flows.displacement, flows.crowding_out, flows.relocation,
                             name=t.name or f"type{i}")
        for i, t in enumerate(economy.types)
    ]
    shares = economy.population_shares
    d_bar = math.fsum(s * c.displacement for s, c in zip(shares, components))
    c_bar = math.fsum(s * c.crowding_out for s, c in zip(shares, components))
    r_bar = math.fsum(s * c.relocation for s, c in zip(shares, components))
    gamma_W = responses.pure_wage
    fs = config.first_stage
    no_shock = fs.const == 0 and fs.b1 == 0 and fs.b2 == 0 and fs.control_const == 0
    scale = 0.0 if no_shock else 1.0
    return GroundTruth(
        beta_R=scale * responses.employment,
        gamma_W=scale * gamma_W,
        gamma_R=scale * responses.regional_wage,
        gamma_R_meanlog=scale * gamma_W * (1.0 + meanlog_wedge(economy.types)),
        eta_eff=eta_eff,
        eta_pop=eta_pop,
        phi=responses.phi,
        c=config.c_ratio,
        displacement=-scale * d_bar * gamma_W,
        crowding_out=scale * c_bar * gamma_W,
        relocation=scale * r_bar * gamma_W,
        type_components=[(c.name, c.displacement, c.crowding_out, c.relocation)
                         for c in components],
        first_stage=(fs.const, fs.b1, fs.b2),
    )


def simulate_task_survey(config: SimConfig) -> pd.DataFrame:
    """Task survey with routine-leaning answers for routine occupations."""
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(SURVEY_STREAM,)))
    routine, abstract = occupation_codes(config)
    mix = config.task_mix
    codes = routine + abstract
    probs = [ROUTINE_TASK_PROB] * len(routine) + [ABSTRACT_TASK_PROB] * len(abstract)
    code_col = np.repeat(codes, mix.survey_individuals)
    n_routine = rng.binomial(mix.survey_tasks, np.repeat(probs, mix.survey_individuals))
    return pd.DataFrame({
        'individual_id': np.arange(1, len(code_col) + 1),
        'occupation_code': code_col,
        'n_routine_tasks': n_routine,
        'n_abstract_tasks': mix.survey_tasks - n_routine,
    })


def simulate_panel(config: SimConfig, workers: int = 1) -> SimulationResult:
    """Simulate the spell panel of a configuration.

    Municipalities are generated independently from their own seeded
    streams, so the result does not depend on the number of threads.

    Args:
        config: Validated simulator configuration
        workers: Threads used for municipality generation

    Returns:
        SimulationResult
    """
    plan = _build_plan(config)
    registry = build_registry(config)
    logger.info(f"Simulating {len(registry)} municipalities (seed {config.seed})")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(lambda m: _simulate_municipality(m, config, plan), registry))
    else:
        outputs = [_simulate_municipality(m, config, plan) for m in registry]

    offsets = np.cumsum([0] + [o.n_ids for o in outputs[:-1]])
    cols = {
        key: np.concatenate([o.columns[key] for o in outputs])
        for key in outputs[0].columns
    }
    cols['worker'] = np.concatenate(
        [o.columns['worker'] + off for o, off in zip(outputs, offsets)]
    ) + 1

    wages = config.wages
    employed = cols['employed']
    latent = np.where(employed, cols['latent'], np.nan)
    censored = employed & (latent > wages.censor_limit)
    observed = np.where(censored, wages.censor_limit, latent)

    routine_codes, abstract_codes = occupation_codes(config)
    catalogue = np.array(routine_codes + abstract_codes, dtype=object)
    task_labels = np.where(cols['occ'] < len(routine_codes), TaskClass.ROUTINE.value,
                           TaskClass.ABSTRACT.value)
    frame = pd.DataFrame({
        'worker_id': cols['worker'],
        'year': cols['year'],
        'employed': employed,
        'muni_id': np.where(employed, cols['muni_id'], np.nan),
        'district_id': np.where(employed, cols['district'], np.nan),
        'occupation_code': np.where(employed, catalogue[cols['occ']], None),
        'task_class': np.where(employed, task_labels, None),
        'log_daily_wage': observed,
        'censored': censored,
        'hours_band': np.where(employed, HOURS_LABELS[cols['hours']], None),
        'age': cols['age'],
        'female': cols['female'],
        'education': EDUCATION_LABELS[cols['education']],
        'apprentice': cols['apprentice'],
        'nationality': np.where(cols['commuter'], Nationality.COMMUTER.value,
                                Nationality.NATIVE.value),
    }, columns=SPELL_COLUMNS)

    # commuters earn c times the average treated daily wage of the base year
    border = {m.muni_id for m in registry if m.is_border}
    bill = wage_bill(frame, border, config.base_year)
    commuter_wage = math.log(config.c_ratio * bill['total_bill'] / bill['total_fte'])
    frame.loc[cols['commuter'], 'log_daily_wage'] = commuter_wage
    latent = np.where(cols['commuter'], commuter_wage, latent)

    spells = coerce_spell_frame(frame)
    pool_map: Dict[int, int] = {}
    for muni, out, off in zip(registry, outputs, offsets):
        for local in out.pool_ids:
            pool_map[int(local + off + 1)] = muni.muni_id

    logger.info(f"Simulated {len(spells)} rows, {int(employed.sum())} employed, "
                f"{int(censored.sum())} censored")
    return SimulationResult(
        spells=spells,
        municipalities=registry_frame(registry),
        tasks=simulate_task_survey(config),
        truth=ground_truth(config),
        nonemployed_pool=pool_map,
        latent_wages=latent,
        shocks={m.muni_id: o.shock for m, o in zip(registry, outputs)},
    )


def write_outputs(result: SimulationResult, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write spells.csv, municipalities.csv, tasks.csv and truth.txt."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    truth_path = out_dir / 'truth.txt'
    truth_path.write_text(result.truth.to_text())
    return {
        'spells': write_spells(result.spells, out_dir / 'spells.csv'),
        'municipalities': write_municipalities(result.municipalities,
                                               out_dir / 'municipalities.csv'),
        'tasks': write_task_survey(result.tasks, out_dir / 'tasks.csv'),
        'truth': truth_path,
    }


def read_truth(path: Union[str, Path]) -> GroundTruth:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Truth file not found: {path}")
    return GroundTruth.from_text(path.read_text())
