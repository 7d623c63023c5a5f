"""Top-coded wage imputation and baseline wages for the non-employed."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Set, Tuple

import numpy as np
import pandas as pd
from scipy import optimize, special, stats

from src.exceptions import EmptySampleError, ImputationError, NotInSampleError
from src.models.spell import HoursBand, Nationality
from src.services.paneldata import core_spells

logger = logging.getLogger(__name__)

MIN_CELL_UNCENSORED = 30
BASELINE_WINDOW = 4
CELL_KEYS = ['year', 'female', 'district_id']


def truncated_normal_mean(mu: float, sigma: float, limit: float) -> float:
    """E[w | w > limit] for w ~ N(mu, sigma^2)."""
    z = (limit - mu) / sigma
    # phi(z) / (1 - Phi(z)) evaluated in logs
    hazard = np.exp(stats.norm.logpdf(z) - special.log_ndtr(-z))
    return float(mu + sigma * hazard)


def fit_censored_normal(values: np.ndarray, censored: np.ndarray) -> Tuple[float, float]:
    """Maximum likelihood normal fit to right-censored observations.

    Censored observations carry the censoring limit as their value.

    Args:
        values: Observed (possibly top-coded) values
        censored: Censoring flags

    Returns:
        (mu, sigma)

    Raises:
        ImputationError: With fewer than two uncensored values or when the
            optimizer fails
    """
    values = np.asarray(values, dtype=float)
    censored = np.asarray(censored, dtype=bool)
    exact = values[~censored]
    limits = values[censored]
    if exact.size < 2:
        raise ImputationError(f"Need at least 2 uncensored values, got {exact.size}")

    def negative_loglik(params: np.ndarray) -> float:
        mu, log_sigma = params
        sigma = np.exp(log_sigma)
        ll = np.sum(stats.norm.logpdf((exact - mu) / sigma) - log_sigma)
        if limits.size:
            ll += np.sum(special.log_ndtr(-(limits - mu) / sigma))
        return -ll

    start = np.array([exact.mean(), np.log(max(exact.std(), 1e-3))])
    result = optimize.minimize(negative_loglik, start, method='BFGS')
    if not np.all(np.isfinite(result.x)):
        raise ImputationError(f"Censored normal fit failed: {result.message}")
    mu, log_sigma = result.x
    return float(mu), float(np.exp(log_sigma))


@dataclass
class ImputationReport:
    """Cells used by a censored-wage imputation.

    Attributes:
        imputed: Number of spells whose wage was replaced
        cells_fitted: Cells fitted on their own data
        fallback_cells: Cells (year, female, district) that used the pooled
            year fit because they had too few uncensored spells
    """

    imputed: int = 0
    cells_fitted: int = 0
    fallback_cells: List[Tuple[int, bool, int]] = field(default_factory=list)


@dataclass
class ImputationResult:
    frame: pd.DataFrame
    report: ImputationReport


def impute_censored(
    frame: pd.DataFrame,
    min_cell: int = MIN_CELL_UNCENSORED,
    stochastic: bool = False,
    seed: int = 0,
) -> ImputationResult:
    """Replace top-coded full-time wages with imputed values.

    Each year x gender x district cell of full-time spells gets its own
    censored-normal fit; cells with fewer than min_cell uncensored spells use
    the pooled fit of their year. The default replaces a censored wage with
    the conditional mean above the limit; stochastic mode draws from the
    truncated normal instead.

    Args:
        frame: Canonical spell frame
        min_cell: Minimum uncensored spells for a cell-level fit
        stochastic: Draw instead of using the conditional mean
        seed: Seed for stochastic draws

    Returns:
        ImputationResult with a copy of the frame; censored flags are kept
    """
    out = frame.copy()
    report = ImputationReport()
    full_time = out['employed'] & (out['hours_band'] == HoursBand.FULL_TIME.value)
    target = full_time & out['censored']
    if not target.any():
        return ImputationResult(frame=out, report=report)

    rng = np.random.default_rng(seed)
    pool = out.loc[full_time, CELL_KEYS + ['log_daily_wage', 'censored']]
    pooled_fits: Dict[int, Tuple[float, float]] = {}
    cells = out.loc[target, CELL_KEYS].drop_duplicates().itertuples(index=False)

    for year, female, district in cells:
        year_pool = pool.loc[pool['year'] == year]
        cell = year_pool.loc[(year_pool['female'] == female)
                             & (year_pool['district_id'] == district)]
        if int((~cell['censored']).sum()) >= min_cell:
            mu, sigma = fit_censored_normal(cell['log_daily_wage'], cell['censored'])
            report.cells_fitted += 1
        else:
            if year not in pooled_fits:
                pooled_fits[year] = fit_censored_normal(
                    year_pool['log_daily_wage'], year_pool['censored']
                )
            mu, sigma = pooled_fits[year]
            report.fallback_cells.append((int(year), bool(female), int(district)))

        rows = target & (out['year'] == year) & (out['female'] == female) \
            & (out['district_id'] == district)
        limits = out.loc[rows, 'log_daily_wage'].to_numpy()
        if stochastic:
            a = (limits - mu) / sigma
            draws = stats.truncnorm.rvs(a, np.inf, loc=mu, scale=sigma,
                                        size=limits.size, random_state=rng)
            out.loc[rows, 'log_daily_wage'] = np.maximum(draws, np.nextafter(limits, np.inf))
        else:
            out.loc[rows, 'log_daily_wage'] = [truncated_normal_mean(mu, sigma, lim)
                                               for lim in limits]
        report.imputed += int(rows.sum())

    if report.fallback_cells:
        logger.info(f"{len(report.fallback_cells)} wage cells used the pooled year fit")
    logger.debug(f"Imputed {report.imputed} censored wages in {report.cells_fitted} cells")
    return ImputationResult(frame=out, report=report)


def mean_wage_by_year(frame: pd.DataFrame, regions: Optional[Set[int]] = None) -> pd.Series:
    """Mean full-time native log wage per year."""
    spells = core_spells(frame)
    spells = spells.loc[spells['hours_band'] == HoursBand.FULL_TIME.value]
    if regions is not None:
        spells = spells.loc[spells['muni_id'].isin(regions)]
    return spells.groupby('year')['log_daily_wage'].mean()


def _last_qualifying_spell(history: pd.DataFrame, base_year: int, window: int,
                           regions: Optional[Set[int]]) -> Optional[pd.Series]:
    spells = history.loc[history['employed'] & ~history['apprentice']
                         & (history['year'] >= base_year - window)
                         & (history['year'] < base_year)]
    if regions is not None:
        spells = spells.loc[spells['muni_id'].isin(regions)]
    if spells.empty:
        return None
    return spells.sort_values('year').iloc[-1]


def impute_nonemployed_baseline(
    history: pd.DataFrame,
    mean_wages: Mapping[int, float],
    base_year: int,
    window: int = BASELINE_WINDOW,
    regions: Optional[Set[int]] = None,
) -> float:
    """Counterfactual base-year wage of a worker non-employed at base.

    Uses the last full-time wage w_t in the window [base - window, base - 1]
    shifted by the mean wage growth between t and the base year.

    Args:
        history: Spells of one worker
        mean_wages: Mean log wage per year
        base_year: Base period
        window: Years before base that qualify
        regions: Restrict qualifying spells to these municipalities

    Returns:
        Imputed log wage

    Raises:
        NotInSampleError: If the worker is employed at base or has no
            qualifying full-time spell
        EmptySampleError: If mean_wages lacks the base year or the spell year
    """
    employed_at_base = history.loc[(history['year'] == base_year) & history['employed']
                                   & ~history['apprentice']]
    if not employed_at_base.empty:
        raise NotInSampleError(f"Worker is employed in {base_year}")
    full_time = history.loc[history['hours_band'] == HoursBand.FULL_TIME.value]
    last = _last_qualifying_spell(full_time, base_year, window, regions)
    if last is None:
        raise NotInSampleError(
            f"No full-time spell between {base_year - window} and {base_year - 1}"
        )
    year = int(last['year'])
    missing = [y for y in (base_year, year) if y not in mean_wages]
    if missing:
        raise EmptySampleError(f"No mean wage for {missing[0]}")
    return float(last['log_daily_wage'] + (mean_wages[base_year] - mean_wages[year]))


def build_nonemployed_sample(
    frame: pd.DataFrame,
    base_year: int,
    regions: Set[int],
    window: int = BASELINE_WINDOW,
) -> pd.DataFrame:
    """Natives non-employed at base whose last recent job was in a study region.

    Args:
        frame: Canonical spell frame (wages already imputed if censored)
        base_year: Base period
        regions: Study municipalities
        window: Years before base that qualify

    Returns:
        DataFrame indexed by worker_id with origin, last_year, imputed_wage
        (NaN when no full-time spell qualifies), age0, female and education
    """
    natives = frame.loc[frame['nationality'] == Nationality.NATIVE.value]
    employed_base = set(core_spells(natives, base_year)['worker_id'])
    prior = core_spells(natives)
    prior = prior.loc[(prior['year'] >= base_year - window) & (prior['year'] < base_year)
                      & ~prior['worker_id'].isin(employed_base)]
    if prior.empty:
        return pd.DataFrame(columns=['origin', 'last_year', 'imputed_wage', 'age0', 'female',
                                     'education']).rename_axis('worker_id')
    last = prior.sort_values(['worker_id', 'year'], kind='mergesort') \
        .drop_duplicates('worker_id', keep='last').set_index('worker_id')
    last = last.loc[last['muni_id'].isin(regions)]

    means = mean_wage_by_year(frame)
    full_time = prior.loc[(prior['hours_band'] == HoursBand.FULL_TIME.value)
                          & prior['muni_id'].isin(regions)]
    last_ft = full_time.sort_values(['worker_id', 'year'], kind='mergesort') \
        .drop_duplicates('worker_id', keep='last').set_index('worker_id')
    last_ft = last_ft.reindex(last.index)
    shift = means.get(base_year, np.nan) - last_ft['year'].map(means)
    sample = pd.DataFrame({
        'origin': last['muni_id'].astype(np.int64),
        'last_year': last['year'].astype(np.int64),
        'imputed_wage': (last_ft['log_daily_wage'] + shift).astype(float),
        'age0': (last['age'] + (base_year - last['year'])).astype(float),
        'female': last['female'].astype(bool),
        'education': last['education'].astype(object),
    })
    logger.debug(f"Non-employed sample has {len(sample)} workers")
    return sample.sort_index()
