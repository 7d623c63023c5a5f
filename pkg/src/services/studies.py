"""Regional effect regressions, decompositions, event studies and subgroup analyses.

Every municipality-level regression instruments the shock with the border
dummy and its interactions with distance/100 and (distance/100)^2, clusters
by district and, within one study, shares sample, weights and bootstrap
seed across components so signed components add up to the total exactly.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.exceptions import EmptySampleError, InferenceError, InvalidParameterError
from src.models.regression import EstimationSpec, RegressionResult
from src.models.spell import HoursBand, Nationality, TaskClass, TransitionClass
from src.models.study import (
    SIGN_MINUS,
    SIGN_PLUS,
    DecompositionReport,
    EventStudyResult,
    ReportComponent,
    StudyWindow,
    SubgroupResult,
)
from src.services.econometrics import tsls
from src.services.imputation import build_nonemployed_sample
from src.services.paneldata import (
    SpellPanel,
    aggregate_flows,
    build_transitions,
    core_spells,
    employment_by_year,
    fte_series,
)

logger = logging.getLogger(__name__)

INSTRUMENTS = ['border', 'border_d', 'border_d2']
EVENT_OUTCOMES = (
    'employment', 'routine', 'abstract', 'abstract_share', 'apprentice',
    'displacement', 'regional_wage', 'pure_wage',
)
OLDER_WORKER_AGE = 50
AGE_COHORT_BOUNDS = (30, 51)

BASE_ROLES = [TransitionClass.STAYER.value, TransitionClass.DISPLACED.value,
              TransitionClass.RELOCATED.value]
END_ROLES = [TransitionClass.STAYER.value, TransitionClass.INFLOW_FROM_NONEMP.value,
             TransitionClass.INFLOW_FROM_OTHER_REGION.value]


class Subgroup(Enum):
    """Worker subgroups with their own displacement and wage effects."""

    NONEMPLOYED = "NonEmployed"
    AGE_50_PLUS = "Age50Plus"
    ROUTINE = "Routine"
    ABSTRACT = "Abstract"


@dataclass
class InferenceSettings:
    """Bootstrap settings shared by every regression of a study."""

    reps: int = 0
    seed: int = 0
    workers: int = 1

    def run(self, spec: EstimationSpec) -> RegressionResult:
        return tsls(spec, reps=self.reps, seed=self.seed, workers=self.workers)


@dataclass
class ShockDesign:
    """Municipality-level shock, instruments, clusters and base employment.

    Attributes:
        frame: Indexed by muni_id with shock, early_shock, border, border_d,
            border_d2, district and total_base columns
        excluded: Municipalities without base employment
    """

    frame: pd.DataFrame
    excluded: List[int] = field(default_factory=list)

    def rows(self, munis) -> pd.DataFrame:
        return self.frame.loc[munis]


def shock_frame(panel: SpellPanel, window: StudyWindow) -> ShockDesign:
    """Shock (commuters_t - commuters_base) / total_base per study municipality.

    total_base counts all employed spells in the base year, FTE-weighted.
    """
    registry = panel.municipalities
    spells = panel.spells
    employed = spells.loc[spells['employed'] & spells['muni_id'].isin(panel.study_munis)]
    muni = employed['muni_id'].astype(np.int64)
    at_base = (employed['year'] == window.base_year).to_numpy()
    total = fte_series(employed.loc[at_base]).groupby(muni[at_base]).sum() \
        .reindex(registry.index, fill_value=0.0)

    commuter = (employed['nationality'] == Nationality.COMMUTER.value).to_numpy()
    counts = employed.loc[commuter].groupby([muni[commuter], employed.loc[commuter, 'year']]) \
        .size().unstack(fill_value=0).reindex(registry.index, fill_value=0)

    def count(year: int) -> pd.Series:
        if year in counts.columns:
            return counts[year].astype(float)
        return pd.Series(0.0, index=registry.index)

    excluded = [int(m) for m in registry.index[total <= 0]]
    if excluded:
        logger.warning(f"Excluded {len(excluded)} municipalities with zero base employment")
    keep = total > 0
    border = registry['is_border'].astype(float)
    d = registry['distance_km'].fillna(0.0) / 100.0
    base_count = count(window.base_year)
    frame = pd.DataFrame({
        'shock': (count(window.shock_year) - base_count) / total.where(keep),
        'early_shock': (count(window.early_year) - base_count) / total.where(keep),
        'border': border,
        'border_d': border * d,
        'border_d2': border * d * d,
        'district': registry['district_id'].astype(np.int64),
        'total_base': total,
    }).loc[keep]
    frame.index.name = 'muni_id'
    return ShockDesign(frame=frame.sort_index(), excluded=excluded)


def _spec(rows: pd.DataFrame, outcome, weights=None, shock_column: str = 'shock',
          controls: Optional[Dict[str, np.ndarray]] = None) -> EstimationSpec:
    columns = [rows[shock_column].to_numpy(dtype=float)]
    names = ['shock']
    endogenous = [True]
    for name, values in (controls or {}).items():
        columns.append(np.asarray(values, dtype=float))
        names.append(name)
        endogenous.append(False)
    return EstimationSpec(
        outcome=np.asarray(outcome, dtype=float),
        regressors=np.column_stack(columns),
        regressor_names=names,
        endogenous=endogenous,
        instruments=rows[INSTRUMENTS].to_numpy(dtype=float),
        instrument_names=list(INSTRUMENTS),
        weights=None if weights is None else np.asarray(weights, dtype=float),
        cluster_ids=rows['district'].to_numpy(),
    )


def _check_clusters(rows: pd.DataFrame, what: str):
    if rows['district'].nunique() < 2:
        raise InferenceError(f"{what} spans fewer than two districts")


def _defaults(window: Optional[StudyWindow], inference: Optional[InferenceSettings]):
    return window or StudyWindow(), inference or InferenceSettings()


# --- Employment -----------------------------------------------------------------------


def decompose_employment(
    panel: SpellPanel,
    window: Optional[StudyWindow] = None,
    inference: Optional[InferenceSettings] = None,
) -> DecompositionReport:
    """Regional employment effect and its displacement, crowding-out and relocation parts.

    All four regressions share municipalities, base-employment weights and
    instruments, so -displacement + crowding_out - relocation equals the total.
    """
    window, inference = _defaults(window, inference)
    design = shock_frame(panel, window)
    flows = aggregate_flows(panel.transitions(window.base_year, window.end_year))
    sample = design.frame.index.intersection(flows.frame.index).sort_values()
    if sample.empty:
        raise EmptySampleError("No municipality has base employment and a defined shock")
    rows = design.rows(sample)
    _check_clusters(rows, "Employment sample")
    shares = flows.shares().loc[sample]
    weights = flows.frame.loc[sample, 'E0']

    def fit(column: str) -> RegressionResult:
        return inference.run(_spec(rows, shares[column], weights))

    report = DecompositionReport(
        study='employment',
        total=ReportComponent('total', '', fit('growth')),
        components=[
            ReportComponent('displacement', SIGN_MINUS, fit('exit')),
            ReportComponent('crowding_out', SIGN_PLUS, fit('inflow')),
            ReportComponent('relocation', SIGN_MINUS, fit('relocate')),
        ],
        extras=[
            ReportComponent('crowding_from_nonemployment', SIGN_PLUS, fit('inflow_nonemp'),
                            additive=False),
            ReportComponent('crowding_from_other_regions', SIGN_PLUS, fit('inflow_other'),
                            additive=False),
        ],
        exclusions={
            'zero_total_base': design.excluded,
            'zero_native_base_employment': sorted(
                int(m) for m in set(design.frame.index) - set(flows.frame.index)
            ),
        },
    )
    logger.info(f"Employment decomposition on {len(sample)} municipalities: "
                f"total {report.total.value:.4f}")
    return report


# --- Wages ----------------------------------------------------------------------------


def _full_time_stayers(panel: SpellPanel, window: StudyWindow, design: ShockDesign,
                       where: Optional[Callable[[pd.DataFrame], pd.Series]] = None,
                       end_year: Optional[int] = None) -> pd.DataFrame:
    end = window.end_year if end_year is None else end_year
    first, last = min(window.base_year, end), max(window.base_year, end)
    t = panel.transitions(first, last)
    stay = t.loc[(t['classification'] == TransitionClass.STAYER.value)
                 & t['wage0'].notna() & t['wage1'].notna()
                 & t['region'].isin(design.frame.index)]
    if where is not None:
        stay = stay.loc[where(stay)]
    return stay


def _pure_wage(panel: SpellPanel, window: StudyWindow, design: ShockDesign,
               inference: InferenceSettings, age_controls: bool = True,
               where: Optional[Callable[[pd.DataFrame], pd.Series]] = None,
               end_year: Optional[int] = None,
               shock_column: str = 'shock') -> Tuple[RegressionResult, pd.DataFrame, pd.DataFrame]:
    end = window.end_year if end_year is None else end_year
    stay = _full_time_stayers(panel, window, design, where, end)
    if stay.empty:
        raise EmptySampleError(f"No full-time stayers between {window.base_year} and {end}")
    rows = design.rows(stay['region'].to_numpy())
    _check_clusters(rows, "Stayer sample")
    if end > window.base_year:
        change = stay['wage1'] - stay['wage0']
        age_base = stay['age0']
    else:
        change = stay['wage0'] - stay['wage1']
        age_base = stay['age0'] + (window.base_year - end)
    controls = None
    if age_controls:
        controls = {'age0': age_base.to_numpy(), 'age0_sq': age_base.to_numpy() ** 2}
    result = inference.run(_spec(rows, change, None, shock_column, controls))
    return result, stay, rows


def pure_wage_effect(
    panel: SpellPanel,
    window: Optional[StudyWindow] = None,
    inference: Optional[InferenceSettings] = None,
    age_controls: bool = True,
) -> RegressionResult:
    """Individual wage growth of full-time stayers on the shock (unweighted).

    Raises:
        EmptySampleError: If there are no full-time stayers
    """
    window, inference = _defaults(window, inference)
    result, stay, _ = _pure_wage(panel, window, shock_frame(panel, window), inference,
                                 age_controls)
    logger.info(f"Pure wage effect on {len(stay)} stayers: {result.coef('shock'):.4f}")
    return result


def _wage_cells(panel: SpellPanel, window: StudyWindow, design: ShockDesign) -> pd.DataFrame:
    """Per-municipality full-time wage means of base population, end population,
    stayers, leavers and entrants."""
    t = panel.transitions(window.base_year, window.end_year)
    t = t.loc[t['region'].isin(design.frame.index)]
    stayer = (t['classification'] == TransitionClass.STAYER.value) \
        & t['wage0'].notna() & t['wage1'].notna()
    p0 = t['classification'].isin(BASE_ROLES) & t['wage0'].notna()
    p1 = t['classification'].isin(END_ROLES) & t['wage1'].notna()
    leaver = p0 & ~stayer
    entrant = p1 & ~stayer

    def stats(mask: pd.Series, column: str, prefix: str) -> pd.DataFrame:
        grouped = t.loc[mask, column].groupby(t.loc[mask, 'region'])
        return pd.DataFrame({f'n_{prefix}': grouped.size(), f'mean_{prefix}': grouped.mean()})

    cells = pd.concat([
        stats(p0, 'wage0', 'P0'), stats(p1, 'wage1', 'P1'),
        stats(stayer, 'wage0', 'S0'), stats(stayer, 'wage1', 'S1'),
        stats(leaver, 'wage0', 'L'), stats(entrant, 'wage1', 'N'),
    ], axis=1)
    for prefix in ('P0', 'P1', 'S0', 'S1', 'L', 'N'):
        cells[f'n_{prefix}'] = cells[f'n_{prefix}'].fillna(0).astype(np.int64)
    cells.index.name = 'muni_id'
    return cells.sort_index()


def regional_wage_effect(
    panel: SpellPanel,
    window: Optional[StudyWindow] = None,
    inference: Optional[InferenceSettings] = None,
) -> RegressionResult:
    """Change in municipality mean full-time log wage on the shock, weighted by |P0|."""
    window, inference = _defaults(window, inference)
    design = shock_frame(panel, window)
    cells = _wage_cells(panel, window, design)
    cells = cells.loc[(cells['n_P0'] > 0) & (cells['n_P1'] > 0)]
    if cells.empty:
        raise EmptySampleError("No municipality has full-time wages in both periods")
    rows = design.rows(cells.index)
    _check_clusters(rows, "Regional wage sample")
    return inference.run(_spec(rows, cells['mean_P1'] - cells['mean_P0'], cells['n_P0']))


def wage_identity_terms(cells: pd.DataFrame) -> pd.DataFrame:
    """Stayer, outflow and inflow terms of the regional mean wage change.

    mean(P1) - mean(P0) = stayers - outflow + inflow with
    outflow = (mean0(leavers) - mean0(stayers)) * Pr(leave) and
    inflow = (mean1(entrants) - mean1(stayers)) * Pr(enter).
    """
    leave = cells['n_L'] / cells['n_P0']
    enter = cells['n_N'] / cells['n_P1']
    outflow = ((cells['mean_L'] - cells['mean_S0']) * leave).where(cells['n_L'] > 0, 0.0)
    inflow = ((cells['mean_N'] - cells['mean_S1']) * enter).where(cells['n_N'] > 0, 0.0)
    terms = pd.DataFrame({
        'regional': cells['mean_P1'] - cells['mean_P0'],
        'stayers': cells['mean_S1'] - cells['mean_S0'],
        'outflow': outflow,
        'inflow': inflow,
    })
    terms['residual'] = terms['regional'] - (terms['stayers'] - terms['outflow']
                                             + terms['inflow'])
    return terms


def decompose_wages(
    panel: SpellPanel,
    window: Optional[StudyWindow] = None,
    inference: Optional[InferenceSettings] = None,
    age_controls: bool = True,
) -> DecompositionReport:
    """Regional wage effect split into stayers, outflow and inflow selection.

    The three region-level terms share sample and |P0| weights with the
    total. The individual pure wage effect, the composition effect
    (inflow - outflow) and the age selection term are reported alongside.
    """
    window, inference = _defaults(window, inference)
    design = shock_frame(panel, window)
    cells = _wage_cells(panel, window, design)
    usable = (cells['n_P0'] > 0) & (cells['n_P1'] > 0) & (cells['n_S0'] > 0)
    missing = sorted(int(m) for m in set(design.frame.index) - set(cells.index[usable]))
    cells = cells.loc[usable]
    if cells.empty:
        raise EmptySampleError("No municipality has full-time stayers")
    terms = wage_identity_terms(cells)
    rows = design.rows(cells.index)
    _check_clusters(rows, "Wage sample")
    weights = cells['n_P0']

    def fit(values: pd.Series) -> RegressionResult:
        return inference.run(_spec(rows, values, weights))

    pure, stay, stay_rows = _pure_wage(panel, window, design, inference, age_controls)
    extras = [
        ReportComponent('pure_wage', '', pure, additive=False),
        ReportComponent('composition', SIGN_PLUS, fit(terms['inflow'] - terms['outflow']),
                        additive=False),
    ]
    notes = [f"max per-municipality identity residual {terms['residual'].abs().max():.3e}"]
    if age_controls:
        age_profile = (pure.coef('age0') * stay['age0']
                       + pure.coef('age0_sq') * stay['age0'] ** 2).to_numpy()
        age_term = inference.run(_spec(stay_rows, age_profile))
        no_age = inference.run(_spec(stay_rows, stay['wage1'] - stay['wage0']))
        extras.append(ReportComponent('age_selection', '', age_term, additive=False))
        gap = no_age.coef('shock') - (pure.coef('shock') + age_term.coef('shock'))
        notes.append(f"stayer effect without age controls {no_age.coef('shock'):.6f}; "
                     f"gap to pure wage + age selection {gap:.3e}")

    report = DecompositionReport(
        study='wages',
        total=ReportComponent('total', '', fit(terms['regional'])),
        components=[
            ReportComponent('stayers', SIGN_PLUS, fit(terms['stayers'])),
            ReportComponent('outflow', SIGN_MINUS, fit(terms['outflow'])),
            ReportComponent('inflow', SIGN_PLUS, fit(terms['inflow'])),
        ],
        extras=extras,
        exclusions={'zero_total_base': design.excluded, 'missing_wages': missing},
        notes=notes,
    )
    logger.info(f"Wage decomposition on {len(cells)} municipalities: "
                f"regional {report.total.value:.4f}, pure {pure.coef('shock'):.4f}")
    return report


# --- Tasks ----------------------------------------------------------------------------


def _abstract_intensity_change(panel: SpellPanel, window: StudyWindow,
                               design: ShockDesign,
                               inference: InferenceSettings) -> Optional[RegressionResult]:
    if panel.occupations is None:
        return None
    intensity = panel.occupations['abstract_intensity']
    t = panel.transitions(window.base_year, window.end_year)
    stay = t.loc[(t['classification'] == TransitionClass.STAYER.value)
                 & t['region'].isin(design.frame.index)]
    change = stay['occupation1'].map(intensity) - stay['occupation0'].map(intensity)
    stay = stay.assign(change=change).dropna(subset=['change'])
    if stay.empty:
        return None
    grouped = stay.groupby('region')['change']
    means, counts = grouped.mean(), grouped.size()
    rows = design.rows(means.index)
    return inference.run(_spec(rows, means, counts))


def decompose_routine(
    panel: SpellPanel,
    window: Optional[StudyWindow] = None,
    inference: Optional[InferenceSettings] = None,
) -> DecompositionReport:
    """Routine employment change split into exits, inflows, relocations and switches.

    Municipalities without base routine employment are excluded and counted.
    """
    window, inference = _defaults(window, inference)
    design = shock_frame(panel, window)
    flows = aggregate_flows(panel.transitions(window.base_year, window.end_year))
    no_routine = flows.task_excluded.get('routine', [])
    sample = design.frame.index.intersection(flows.frame.index) \
        .difference(pd.Index(no_routine)).sort_values()
    if sample.empty:
        raise EmptySampleError("No municipality has base routine employment")
    rows = design.rows(sample)
    _check_clusters(rows, "Routine sample")
    shares = flows.task_shares('routine').loc[sample]
    weights = flows.frame.loc[sample, 'routine_E0']

    def fit(column: str) -> RegressionResult:
        return inference.run(_spec(rows, shares[column], weights))

    extras = []
    abstract_sample = design.frame.index.intersection(flows.frame.index) \
        .difference(pd.Index(flows.task_excluded.get('abstract', []))).sort_values()
    if not abstract_sample.empty:
        abstract = flows.task_shares('abstract').loc[abstract_sample]
        extras.append(ReportComponent(
            'abstract_total', '',
            inference.run(_spec(design.rows(abstract_sample), abstract['growth'],
                                flows.frame.loc[abstract_sample, 'abstract_E0'])),
            additive=False,
        ))
    intensity = _abstract_intensity_change(panel, window, design, inference)
    if intensity is not None:
        extras.append(ReportComponent('abstract_intensity_stayers', '', intensity,
                                      additive=False))

    report = DecompositionReport(
        study='routine',
        total=ReportComponent('routine_total', '', fit('growth')),
        components=[
            ReportComponent('displacement', SIGN_MINUS, fit('exit')),
            ReportComponent('inflow', SIGN_PLUS, fit('inflow')),
            ReportComponent('relocation', SIGN_MINUS, fit('relocate')),
            ReportComponent('upgrading', SIGN_MINUS, fit('switch_out')),
            ReportComponent('downgrading', SIGN_PLUS, fit('switch_in')),
        ],
        extras=extras,
        exclusions={'zero_total_base': design.excluded,
                    'zero_routine_base_employment': sorted(no_routine)},
    )
    logger.info(f"Routine decomposition on {len(sample)} municipalities")
    return report


# --- Event studies --------------------------------------------------------------------


def _relative_change(table: pd.DataFrame, year: int, base_year: int,
                     denominator: Optional[pd.DataFrame] = None) -> Tuple[pd.Series, pd.Series]:
    denom = (table if denominator is None else denominator)
    base = denom[base_year] if base_year in denom.columns else pd.Series(dtype=float)
    base = base.loc[base > 0]
    current = table[year].reindex(base.index, fill_value=0.0) if year in table.columns \
        else pd.Series(0.0, index=base.index)
    start = table[base_year].reindex(base.index, fill_value=0.0) if base_year in table.columns \
        else pd.Series(0.0, index=base.index)
    return (current - start) / base, base


def event_study(
    panel: SpellPanel,
    outcome: str,
    window: Optional[StudyWindow] = None,
    years: Optional[List[int]] = None,
    inference: Optional[InferenceSettings] = None,
) -> EventStudyResult:
    """One regression per year against the fixed base-to-shock-year shock.

    The early year uses the partial (early) inflow. Years missing from the
    panel, and years where the outcome is undefined, are skipped and listed.

    Args:
        panel: Spell panel
        outcome: One of EVENT_OUTCOMES
        window: Study window (base, shock and early years)
        years: Years to estimate (default: every panel year but the base)
        inference: Bootstrap settings

    Raises:
        InvalidParameterError: For an unknown outcome
    """
    if outcome not in EVENT_OUTCOMES:
        raise InvalidParameterError(
            f"Unknown event-study outcome '{outcome}' (choose from {', '.join(EVENT_OUTCOMES)})"
        )
    window, inference = _defaults(window, inference)
    design = shock_frame(panel, window)
    base = window.base_year
    available = set(panel.years)
    requested = years if years is not None else [y for y in panel.years if y != base]
    spells = panel.spells
    regions = set(int(m) for m in design.frame.index)

    core = employment_by_year(spells, regions)
    tables: Dict[str, pd.DataFrame] = {'employment': core}
    if outcome in ('routine', 'abstract', 'abstract_share'):
        for label, task in (('routine', TaskClass.ROUTINE), ('abstract', TaskClass.ABSTRACT)):
            tables[label] = employment_by_year(
                spells.loc[spells['task_class'] == task.value], regions
            )
    if outcome == 'apprentice':
        apprentices = spells.loc[spells['employed'] & spells['apprentice']
                                 & spells['muni_id'].isin(regions)]
        tables['apprentice'] = fte_series(apprentices).groupby(
            [apprentices['muni_id'].astype(np.int64), apprentices['year']]
        ).sum().unstack('year', fill_value=0.0)

    result = EventStudyResult(outcome=outcome)
    for year in requested:
        if year == base or year not in available or base not in available:
            result.skipped.append(year)
            continue
        shock_column = 'early_shock' if year == window.early_year else 'shock'
        try:
            fitted = _event_year(panel, window, design, inference, outcome, year,
                                 shock_column, tables)
        except EmptySampleError as e:
            logger.warning(f"Event study '{outcome}' skipped {year}: {e}")
            fitted = None
        if fitted is None:
            result.skipped.append(year)
        else:
            result.results[year] = fitted
    if result.skipped:
        logger.info(f"Event study '{outcome}' skipped years {result.skipped}")
    return result


def _event_year(panel: SpellPanel, window: StudyWindow, design: ShockDesign,
                inference: InferenceSettings, outcome: str, year: int, shock_column: str,
                tables: Dict[str, pd.DataFrame]) -> Optional[RegressionResult]:
    base = window.base_year
    index = design.frame.index

    def fit(values: pd.Series, weights: pd.Series) -> Optional[RegressionResult]:
        keep = values.index.intersection(index).sort_values()
        if keep.empty:
            return None
        rows = design.rows(keep)
        return inference.run(_spec(rows, values.loc[keep], weights.loc[keep], shock_column))

    if outcome in ('employment', 'routine', 'abstract'):
        change, weights = _relative_change(tables[outcome], year, base)
        return fit(change, weights)
    if outcome == 'apprentice':
        change, weights = _relative_change(tables['apprentice'], year, base,
                                           denominator=tables['employment'])
        return fit(change, weights)
    if outcome == 'abstract_share':
        total = tables['employment']
        if year not in total.columns or base not in total.columns:
            return None
        both = total.index[(total[base] > 0) & (total[year] > 0)]
        abstract = tables['abstract'].reindex(both, fill_value=0.0)

        def share(y: int) -> pd.Series:
            values = abstract[y] if y in abstract.columns else pd.Series(0.0, index=both)
            return values / total.loc[both, y]
        return fit(share(year) - share(base), total.loc[both, base])
    if outcome == 'displacement':
        if year < base:
            return None
        flows = aggregate_flows(panel.transitions(base, year), task_split=False)
        return fit(flows.shares()['exit'], flows.frame['E0'])
    if outcome == 'regional_wage':
        ft = core_spells(panel.spells)
        ft = ft.loc[(ft['hours_band'] == HoursBand.FULL_TIME.value)
                    & ft['muni_id'].isin(index)]
        grouped = ft.groupby([ft['muni_id'].astype(np.int64), ft['year']])['log_daily_wage']
        means = grouped.mean().unstack('year')
        counts = grouped.size().unstack('year', fill_value=0)
        if year not in means.columns or base not in means.columns:
            return None
        both = means.index[means[year].notna() & means[base].notna()]
        return fit(means.loc[both, year] - means.loc[both, base], counts.loc[both, base])
    # pure_wage
    result, _, _ = _pure_wage(panel, window, design, inference, True, end_year=year,
                              shock_column=shock_column)
    return result


# --- Pseudo panel ---------------------------------------------------------------------


def _cohort(age: pd.Series) -> np.ndarray:
    return np.digitize(age.to_numpy(), AGE_COHORT_BOUNDS)


def pseudo_panel(
    panel: SpellPanel,
    window: Optional[StudyWindow] = None,
    grouping: str = 'full',
    inference: Optional[InferenceSettings] = None,
) -> RegressionResult:
    """Group-by-municipality mean wage changes on the shock.

    Groups are education x base-age cohort x gender ('full') or one group
    ('single'). Cells empty in either period are dropped; weights are base
    cell sizes.

    Raises:
        EmptySampleError: If no cell is populated in both periods
    """
    if grouping not in ('full', 'single'):
        raise InvalidParameterError(f"grouping must be 'full' or 'single', got {grouping!r}")
    window, inference = _defaults(window, inference)
    design = shock_frame(panel, window)
    ft = core_spells(panel.spells)
    ft = ft.loc[(ft['hours_band'] == HoursBand.FULL_TIME.value)
                & ft['muni_id'].isin(design.frame.index)]

    def cells(year: int) -> pd.DataFrame:
        spells = ft.loc[ft['year'] == year]
        key = pd.DataFrame({'muni_id': spells['muni_id'].astype(np.int64).to_numpy()})
        if grouping == 'full':
            base_age = spells['age'] - (year - window.base_year)
            key['education'] = spells['education'].astype(object).fillna('Unknown').to_numpy()
            key['cohort'] = _cohort(base_age)
            key['female'] = spells['female'].to_numpy()
        key['wage'] = spells['log_daily_wage'].to_numpy()
        groups = [c for c in key.columns if c != 'wage']
        return key.groupby(groups)['wage'].agg(['mean', 'size'])

    start, end = cells(window.base_year), cells(window.end_year)
    merged = start.join(end, how='inner', lsuffix='0', rsuffix='1').sort_index()
    dropped = len(start.index.union(end.index)) - len(merged)
    if merged.empty:
        raise EmptySampleError("No group cell is populated in both periods")
    if dropped:
        logger.info(f"Pseudo panel dropped {dropped} cells empty in one period")
    munis = merged.index.get_level_values('muni_id')
    rows = design.rows(munis)
    _check_clusters(rows, "Pseudo panel sample")
    return inference.run(_spec(rows, merged['mean1'] - merged['mean0'], merged['size0']))


# --- Subgroups ------------------------------------------------------------------------


def _subgroup_filter(subgroup: Subgroup) -> Callable[[pd.DataFrame], pd.Series]:
    if subgroup is Subgroup.AGE_50_PLUS:
        return lambda t: t['age0'] >= OLDER_WORKER_AGE
    if subgroup is Subgroup.ROUTINE:
        return lambda t: t['task0'] == TaskClass.ROUTINE.value
    return lambda t: t['task0'] == TaskClass.ABSTRACT.value


def _nonemployed_study(panel: SpellPanel, window: StudyWindow, design: ShockDesign,
                       inference: InferenceSettings) -> SubgroupResult:
    sample = build_nonemployed_sample(panel.spells, window.base_year, panel.study_munis)
    sample = sample.loc[sample['origin'].isin(design.frame.index)]
    if sample.empty:
        raise EmptySampleError("No worker is non-employed at base with a recent local spell")
    end = core_spells(panel.spells, window.end_year).set_index('worker_id')
    found = sample.index.isin(end.index).astype(float)
    grouped = pd.Series(found, index=sample.index).groupby(sample['origin'])
    shares, counts = grouped.mean().sort_index(), grouped.size().sort_index()
    rows = design.rows(shares.index)
    _check_clusters(rows, "Non-employed sample")
    finding = inference.run(_spec(rows, shares, counts))

    rehired = sample.join(end[['muni_id', 'hours_band', 'log_daily_wage']], how='inner')
    rehired = rehired.loc[(rehired['muni_id'] == rehired['origin'])
                          & (rehired['hours_band'] == HoursBand.FULL_TIME.value)
                          & rehired['imputed_wage'].notna()]
    if rehired.empty:
        raise EmptySampleError("No non-employed worker is re-employed full-time at origin")
    wage_rows = design.rows(rehired['origin'].to_numpy())
    _check_clusters(wage_rows, "Re-employed sample")
    age = rehired['age0'].to_numpy()
    wage = inference.run(_spec(
        wage_rows, rehired['log_daily_wage'] - rehired['imputed_wage'], None,
        controls={'age0': age, 'age0_sq': age ** 2},
    ))
    return SubgroupResult(subgroup=Subgroup.NONEMPLOYED.value, displacement=finding.negated(),
                          pure_wage=wage, n_workers=len(sample))


def subgroup_study(
    panel: SpellPanel,
    subgroup: Subgroup,
    window: Optional[StudyWindow] = None,
    inference: Optional[InferenceSettings] = None,
) -> SubgroupResult:
    """Displacement and pure wage effect of one subgroup.

    For the non-employed, displacement is the negated job-finding coefficient
    and wage growth starts from the imputed baseline wage.

    Raises:
        EmptySampleError: If the subgroup is empty
    """
    window, inference = _defaults(window, inference)
    design = shock_frame(panel, window)
    if subgroup is Subgroup.NONEMPLOYED:
        return _nonemployed_study(panel, window, design, inference)

    where = _subgroup_filter(subgroup)
    t = panel.transitions(window.base_year, window.end_year)
    base = t.loc[t['classification'].isin(BASE_ROLES) & t['region'].isin(design.frame.index)]
    base = base.loc[where(base)]
    if base.empty:
        raise EmptySampleError(f"Subgroup {subgroup.value} has no base employment")
    exits = base['fte0'].where(base['classification'] == TransitionClass.DISPLACED.value, 0.0)
    e0 = base['fte0'].groupby(base['region']).sum()
    exit_share = (exits.groupby(base['region']).sum() / e0).loc[e0 > 0].sort_index()
    rows = design.rows(exit_share.index)
    _check_clusters(rows, f"{subgroup.value} sample")
    displacement = inference.run(_spec(rows, exit_share, e0.loc[exit_share.index]))
    wage, _, _ = _pure_wage(panel, window, design, inference, True, where=where)
    return SubgroupResult(subgroup=subgroup.value, displacement=displacement, pure_wage=wage,
                          n_workers=int(base['worker_id'].nunique()))


def subgroup_report(
    panel: SpellPanel,
    window: Optional[StudyWindow] = None,
    inference: Optional[InferenceSettings] = None,
    subgroups: Optional[List[Subgroup]] = None,
) -> DecompositionReport:
    """Displacement and pure wage rows for every subgroup."""
    window, inference = _defaults(window, inference)
    report = DecompositionReport(study='subgroups', total=None)
    for subgroup in subgroups or list(Subgroup):
        try:
            result = subgroup_study(panel, subgroup, window, inference)
        except EmptySampleError as e:
            report.notes.append(f"{subgroup.value}: {e}")
            logger.warning(f"Subgroup {subgroup.value} skipped: {e}")
            continue
        report.components.append(ReportComponent(
            f"{subgroup.value}.displacement", SIGN_MINUS, result.displacement, additive=False
        ))
        report.components.append(ReportComponent(
            f"{subgroup.value}.pure_wage", '', result.pure_wage, additive=False
        ))
    return report


def transitions_for(panel: SpellPanel, window: StudyWindow) -> pd.DataFrame:
    """Transitions of the study window restricted to the study municipalities."""
    return build_transitions(panel.spells, window.base_year, window.end_year,
                             regions=panel.study_munis)
