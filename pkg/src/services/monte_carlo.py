"""Replicated simulate-then-estimate runs checked against the closed-form truth."""

import logging
import math
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from tabulate import tabulate

from src.exceptions import DegenerateRecoveryError
from src.models.simulation import GroundTruth, SimConfig
from src.models.structural import ReducedForm
from src.models.study import StudyWindow
from src.services.imputation import impute_censored
from src.services.paneldata import SpellPanel
from src.services.report_renderer import read_report_csv, render_tables
from src.services.structural import recover_structural, shock_ratio_c
from src.services.studies import (
    InferenceSettings,
    decompose_employment,
    pure_wage_effect,
    regional_wage_effect,
)
from src.services.synthpanel import ground_truth, simulate_panel

logger = logging.getLogger(__name__)

REPLICATION_STREAM = 3
BIAS_TOLERANCE_SE = 2.0
ADDITIVITY_TOLERANCE = 1e-10
MIN_FIRST_STAGE_F = 10.0
ROUND_TRIP_TOLERANCE = 1e-10
C_TOLERANCE = 1e-9
CSV_TOLERANCE = 1e-12

# estimate name -> GroundTruth attribute
ORACLE_QUANTITIES: Dict[str, str] = {
    'beta_R': 'beta_R',
    'displacement': 'displacement',
    'crowding_out': 'crowding_out',
    'relocation': 'relocation',
    'gamma_W': 'gamma_W',
    'gamma_R': 'gamma_R_meanlog',
}


def replication_config(config: SimConfig, rep: int) -> SimConfig:
    """Configuration of one replication, seeded from (seed, rep)."""
    sequence = np.random.SeedSequence(config.seed, spawn_key=(REPLICATION_STREAM, rep))
    return replace(config, seed=int(sequence.generate_state(1)[0]))


def study_window(config: SimConfig) -> StudyWindow:
    """Base year to base year + 3, capped at the last simulated year."""
    end = min(config.base_year + 3, config.years[1])
    return StudyWindow(base_year=config.base_year, end_year=end,
                       shock_year=min(config.shock_year, end),
                       early_year=config.base_year + 1)


def estimate_replication(config: SimConfig, rep: int, reps: int = 0) -> Dict[str, float]:
    """Simulate one panel and estimate the oracle quantities on it.

    Returns:
        Estimates keyed by ORACLE_QUANTITIES plus '<name>_se', 'c',
        'additivity' and 'first_stage_F'
    """
    sim_config = replication_config(config, rep)
    result = simulate_panel(sim_config)
    window = study_window(sim_config)
    raw = SpellPanel(spells=result.spells, municipalities=result.municipalities)
    c = shock_ratio_c(raw, window)
    panel = raw.with_spells(impute_censored(result.spells, seed=sim_config.seed).frame)
    inference = InferenceSettings(reps=reps, seed=sim_config.seed)

    employment = decompose_employment(panel, window, inference)
    regressions = {item.name: item.result for item in employment.rows_components()}
    regressions['beta_R'] = regressions.pop('total')
    regressions['gamma_W'] = pure_wage_effect(panel, window, inference)
    regressions['gamma_R'] = regional_wage_effect(panel, window, inference)

    estimates: Dict[str, float] = {'rep': float(rep)}
    for name in ORACLE_QUANTITIES:
        estimates[name] = regressions[name].coef('shock')
        estimates[f'{name}_se'] = regressions[name].se_of('shock')
    estimates['c'] = c
    estimates['additivity'] = float(employment.additivity_residual or 0.0)
    estimates['first_stage_F'] = float(regressions['beta_R'].first_stage_F or 0.0)
    logger.debug(f"Replication {rep}: beta_R {estimates['beta_R']:.4f}, "
                 f"gamma_W {estimates['gamma_W']:.4f}")
    return estimates


@dataclass
class MonteCarloResult:
    """Per-replication estimates and their summary against the truth.

    Attributes:
        truth: Closed-form targets of the base configuration
        estimates: One row per replication
        summary: One row per quantity with truth, mean, sd, mc_se, z
    """

    truth: GroundTruth
    estimates: pd.DataFrame
    summary: pd.DataFrame


def summarize(truth: GroundTruth, estimates: pd.DataFrame) -> pd.DataFrame:
    """Mean, dispersion and bias z-score of every oracle quantity.

    With a single replication the regression standard error stands in for
    the Monte Carlo standard error.
    """
    rows = []
    n = len(estimates)
    for name, attribute in ORACLE_QUANTITIES.items():
        target = float(getattr(truth, attribute))
        values = estimates[name].to_numpy(dtype=float)
        mean = float(values.mean())
        sd = float(values.std(ddof=1)) if n > 1 else float('nan')
        mc_se = sd / math.sqrt(n) if n > 1 else float(estimates[f'{name}_se'].iloc[0])
        z = (mean - target) / mc_se if mc_se > 0 else float('nan')
        rows.append({'quantity': name, 'truth': target, 'mean': mean, 'sd': sd,
                     'mc_se': mc_se, 'z': z})
    return pd.DataFrame(rows, columns=['quantity', 'truth', 'mean', 'sd', 'mc_se', 'z'])


def run_monte_carlo(config: SimConfig, replications: int, reps: int = 0,
                    workers: int = 1,
                    on_replication: Optional[Callable[[], None]] = None) -> MonteCarloResult:
    """Run replications in parallel; each replication owns its seeded stream.

    on_replication is called once per finished replication, from the worker
    thread that ran it.
    """
    truth = ground_truth(config)
    logger.info(f"Running {replications} replications with {workers} workers")

    def run(rep: int) -> Dict[str, float]:
        row = estimate_replication(config, rep, reps)
        if on_replication is not None:
            on_replication()
        return row

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, range(replications)))
    else:
        rows = [run(r) for r in range(replications)]
    estimates = pd.DataFrame(rows)
    return MonteCarloResult(truth=truth, estimates=estimates,
                            summary=summarize(truth, estimates))


@dataclass
class ValidationCheck:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    """Outcome of the oracle suite."""

    checks: List[ValidationCheck] = field(default_factory=list)
    monte_carlo: Optional[MonteCarloResult] = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, passed: bool, detail: str):
        self.checks.append(ValidationCheck(name=name, passed=bool(passed), detail=detail))
        if not passed:
            logger.warning(f"Validation check {name} failed: {detail}")

    def rows(self) -> List[Dict[str, str]]:
        return [{'check': c.name, 'status': 'PASS' if c.passed else 'FAIL', 'detail': c.detail}
                for c in self.checks]


def _recovery_check(report: ValidationReport, truth: GroundTruth):
    rf = ReducedForm(beta_R=truth.beta_R, gamma_R=truth.gamma_R, gamma_W=truth.gamma_W,
                     c=truth.c)
    try:
        recovered = recover_structural(rf)
    except DegenerateRecoveryError as e:
        report.add('structural_round_trip', truth.gamma_W == 0, f"degenerate: {e}")
        return
    targets = (truth.eta_pop, truth.eta_eff, truth.phi)
    errors = [abs(got - want) / max(abs(want), 1.0)
              for got, want in zip(recovered.as_tuple(), targets)]
    report.add('structural_round_trip', max(errors) <= ROUND_TRIP_TOLERANCE,
               f"max relative error {max(errors):.2e}")


def _csv_round_trip_check(report: ValidationReport, config: SimConfig):
    sim_config = replication_config(config, 0)
    result = simulate_panel(sim_config)
    panel = SpellPanel(spells=result.spells, municipalities=result.municipalities)
    employment = decompose_employment(panel, study_window(sim_config))
    with tempfile.TemporaryDirectory() as tmp:
        render_tables([employment], tmp)
        frame = read_report_csv(Path(tmp) / 'employment.csv')
    expected = np.array([row['coefficient'] for row in employment.rows()])
    gap = float(np.max(np.abs(frame['coefficient'].to_numpy() - expected)))
    report.add('csv_round_trip', gap <= CSV_TOLERANCE, f"max coefficient gap {gap:.2e}")


def validate(config: SimConfig, replications: int = 1, reps: int = 0, workers: int = 1,
             on_replication: Optional[Callable[[], None]] = None) -> ValidationReport:
    """Simulate, estimate and compare every oracle quantity with the truth.

    Checks: structural round trip on the truth, bias within two standard
    errors per quantity, additivity of the employment decomposition, first
    stage strength, measured c against configured c and the CSV round trip.
    """
    report = ValidationReport()
    mc = run_monte_carlo(config, replications, reps, workers, on_replication)
    report.monte_carlo = mc
    _recovery_check(report, mc.truth)
    for row in mc.summary.itertuples(index=False):
        ok = math.isfinite(row.z) and abs(row.z) <= BIAS_TOLERANCE_SE
        report.add(f'bias_{row.quantity}', ok,
                   f"mean {row.mean:.4f} truth {row.truth:.4f} z {row.z:.2f}")
    additivity = float(mc.estimates['additivity'].abs().max())
    report.add('employment_additivity', additivity <= ADDITIVITY_TOLERANCE,
               f"max residual {additivity:.2e}")
    first_stage = float(mc.estimates['first_stage_F'].min())
    report.add('first_stage_strength', first_stage > MIN_FIRST_STAGE_F,
               f"min F {first_stage:.1f}")
    c_gap = float((mc.estimates['c'] - config.c_ratio).abs().max())
    report.add('shock_ratio_c', c_gap <= C_TOLERANCE * max(1.0, config.c_ratio),
               f"max |c - configured| {c_gap:.2e}")
    _csv_round_trip_check(report, config)
    return report


def write_validation(report: ValidationReport, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write validation.txt and validation.csv (no timestamps)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = report.rows()
    lines = [tabulate([[r['check'], r['status'], r['detail']] for r in rows],
                      headers=['check', 'status', 'detail'], tablefmt='simple')]
    if report.monte_carlo is not None:
        lines += ["", tabulate(report.monte_carlo.summary.values.tolist(),
                               headers=list(report.monte_carlo.summary.columns),
                               tablefmt='simple', floatfmt='.4f')]
    lines += ["", f"overall: {'PASS' if report.passed else 'FAIL'}"]
    text_path = out / 'validation.txt'
    with open(text_path, 'w', newline='\n') as f:
        f.write("\n".join(lines) + "\n")
    csv_path = out / 'validation.csv'
    pd.DataFrame(rows, columns=['check', 'status', 'detail']).to_csv(
        csv_path, index=False, lineterminator='\n'
    )
    return {'validation.txt': text_path, 'validation.csv': csv_path}
