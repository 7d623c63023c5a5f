"""Batch pipeline behind the simulate, estimate, report and validate commands."""

import logging
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import pandas as pd
from tabulate import tabulate

from src.exceptions import ShockDecompException, StudyError
from src.models.run_config import RunCommand, RunConfig, Study
from src.models.simulation import SimConfig
from src.models.study import DecompositionReport, ReportComponent, StudyWindow
from src.services.config_manager import ConfigManager, default_sim_config
from src.services.imputation import impute_censored
from src.services.monte_carlo import validate, write_validation
from src.services.paneldata import SpellPanel, load_panel
from src.services.report_renderer import Report, read_report_csv, render_tables
from src.services.structural import shock_ratio_c, structural_study
from src.services.studies import (
    EVENT_OUTCOMES,
    InferenceSettings,
    decompose_employment,
    decompose_routine,
    decompose_wages,
    event_study,
    pseudo_panel,
    regional_wage_effect,
    subgroup_report,
)
from src.services.synthpanel import read_truth, scaled_config, simulate_panel, write_outputs

logger = logging.getLogger(__name__)

Progress = Callable[[str], None]

# estimate CSV component -> truth attribute
TRUTH_COMPARISON = {
    ('employment', 'total'): 'beta_R',
    ('employment', 'displacement'): 'displacement',
    ('employment', 'crowding_out'): 'crowding_out',
    ('employment', 'relocation'): 'relocation',
    ('wages', 'total'): 'gamma_R_meanlog',
    ('wages', 'pure_wage'): 'gamma_W',
}


@dataclass
class PipelineResult:
    """Exit status, written artifacts and failed steps of a run."""

    status: int = 0
    artifacts: Dict[str, Path] = field(default_factory=dict)
    failures: List[StudyError] = field(default_factory=list)
    reports: List[Report] = field(default_factory=list)

    def fail(self, error: StudyError):
        self.failures.append(error)
        self.status = 1


def study_window(config: RunConfig) -> StudyWindow:
    """Window of a run: shock year two years after base unless the window is shorter."""
    shock_year = min(config.base_year + 2, config.end_year)
    return StudyWindow(base_year=config.base_year, end_year=config.end_year,
                       shock_year=shock_year, early_year=config.base_year + 1)


def simulation_config(config: RunConfig) -> SimConfig:
    """SimConfig from the config file (or defaults), reseeded and scaled for this run."""
    if config.config_path is not None:
        manager = ConfigManager()
        sim = manager.parse_simulation_config(manager.load_config(config.config_path))
    else:
        sim = default_sim_config()
    sim = replace(sim, seed=config.seed)
    if config.scale != 1.0:
        sim = scaled_config(sim, config.scale)
    return sim


def _pseudo_panel_report(panel: SpellPanel, window: StudyWindow,
                         inference: InferenceSettings) -> DecompositionReport:
    return DecompositionReport(
        study='pseudo-panel',
        total=None,
        components=[
            ReportComponent('groups', '', pseudo_panel(panel, window, 'full', inference),
                            additive=False),
            ReportComponent('single_group', '', pseudo_panel(panel, window, 'single', inference),
                            additive=False),
            ReportComponent('regional_wage', '', regional_wage_effect(panel, window, inference),
                            additive=False),
        ],
    )


def run_study(study: Study, panel: SpellPanel, window: StudyWindow,
              inference: InferenceSettings, c: Optional[float] = None) -> List[Report]:
    """Reports of one study.

    Raises:
        StudyError: Wrapping any library error, naming the study
    """
    try:
        if study is Study.EMPLOYMENT:
            return [decompose_employment(panel, window, inference)]
        if study is Study.WAGES:
            return [decompose_wages(panel, window, inference)]
        if study is Study.ROUTINE:
            return [decompose_routine(panel, window, inference)]
        if study is Study.SUBGROUPS:
            return [subgroup_report(panel, window, inference)]
        if study is Study.PSEUDO_PANEL:
            return [_pseudo_panel_report(panel, window, inference)]
        if study is Study.STRUCTURAL:
            return [structural_study(panel, window, inference, c=c)]
        if study is Study.EVENT_STUDY:
            return [event_study(panel, outcome, window, inference=inference)
                    for outcome in EVENT_OUTCOMES]
    except ShockDecompException as e:
        logger.error(f"Study '{study.value}' failed: {e}")
        raise StudyError(study.value, e)
    raise StudyError(study.value, ValueError("not a runnable study"))


def _truth_comparison(truth_path: Path, reports: List[Report], out_dir: Path) -> Path:
    truth = read_truth(truth_path)
    rows = []
    for report in reports:
        if not isinstance(report, DecompositionReport):
            continue
        for item in report.rows_components():
            attribute = TRUTH_COMPARISON.get((report.study, item.name))
            if attribute is not None:
                rows.append({'study': report.study, 'component': item.name,
                             'estimate': item.value, 'truth': getattr(truth, attribute)})
    path = out_dir / 'truth_comparison.csv'
    pd.DataFrame(rows, columns=['study', 'component', 'estimate', 'truth']).to_csv(
        path, index=False, lineterminator='\n'
    )
    return path


def _simulate(config: RunConfig, result: PipelineResult, progress: Progress):
    sim = simulation_config(config)
    progress(f"Simulating {sim.n_border + sim.n_control} municipalities")
    simulated = simulate_panel(sim, workers=config.workers)
    for path in write_outputs(simulated, config.out_dir).values():
        result.artifacts[path.name] = path
    manager = ConfigManager()
    config_path = config.out_dir / 'simulation.yaml'
    # the estimation flags of this run travel with the panel
    estimation = {'base_year': config.base_year, 'end_year': config.end_year,
                  'reps': config.reps, 'studies': config.studies}
    manager.save_config(manager.build_config_dict(sim, estimation), config_path)
    result.artifacts[config_path.name] = config_path


def _estimate(config: RunConfig, result: PipelineResult, progress: Progress):
    for path in (config.spells_path, config.municipalities_path, config.tasks_path,
                 config.truth_path):
        if path is not None and not path.exists():
            raise FileNotFoundError(f"Input file not found: {path}")
    raw = load_panel(config.spells_path, config.municipalities_path, config.tasks_path)
    window = study_window(config)
    inference = InferenceSettings(reps=config.reps, seed=config.seed, workers=config.workers)
    studies = config.selected_studies

    c: Optional[float] = None
    if Study.STRUCTURAL in studies:
        try:
            c = shock_ratio_c(raw, window)
        except ShockDecompException as e:
            result.fail(StudyError(Study.STRUCTURAL.value, e))
            studies = [s for s in studies if s is not Study.STRUCTURAL]

    imputed = impute_censored(raw.spells, seed=config.seed)
    panel = raw.with_spells(imputed.frame)
    progress(f"Imputed {imputed.report.imputed} censored wages")

    for study in studies:
        progress(f"Running study '{study.value}'")
        try:
            result.reports.extend(run_study(study, panel, window, inference, c=c))
        except StudyError as e:
            result.fail(e)

    if result.reports:
        result.artifacts.update(render_tables(result.reports, config.out_dir))
        if config.truth_path is not None:
            path = _truth_comparison(config.truth_path, result.reports, config.out_dir)
            result.artifacts[path.name] = path


def _report(config: RunConfig, result: PipelineResult, progress: Progress):
    """Collect every report CSV in the output directory into summary.txt."""
    csvs = sorted(p for p in config.out_dir.glob('*.csv')
                  if p.name not in ('spells.csv', 'municipalities.csv', 'tasks.csv',
                                    'validation.csv'))
    if not csvs:
        raise FileNotFoundError(f"No report CSVs found in {config.out_dir}")
    sections = []
    for path in csvs:
        frame = read_report_csv(path)
        sections.append(f"== {path.stem} ==\n"
                        + tabulate(frame.values.tolist(), headers=list(frame.columns),
                                   tablefmt='simple', floatfmt='.4f'))
    summary = config.out_dir / 'summary.txt'
    with open(summary, 'w', newline='\n') as f:
        f.write("\n\n".join(sections) + "\n")
    progress(f"Summarized {len(csvs)} tables")
    result.artifacts[summary.name] = summary


def _validate(config: RunConfig, result: PipelineResult, progress: Progress,
              on_replication: Optional[Callable[[], None]] = None):
    sim = simulation_config(config)
    progress(f"Validating over {config.replications} replications")
    report = validate(sim, replications=config.replications, reps=config.reps,
                      workers=config.workers, on_replication=on_replication)
    result.artifacts.update(write_validation(report, config.out_dir))
    for check in report.checks:
        if not check.passed:
            result.fail(StudyError(f"validate:{check.name}", ValueError(check.detail)))


def run_pipeline(config: RunConfig, progress: Optional[Progress] = None,
                 on_replication: Optional[Callable[[], None]] = None) -> PipelineResult:
    """Run one command end to end.

    progress receives status messages; on_replication is called after each
    validation replication.

    Returns:
        PipelineResult whose status is 0 iff every requested step succeeded

    Raises:
        FileNotFoundError: If an input file is missing
        ShockDecompException: If simulation or loading fails
    """
    progress = progress or (lambda message: logger.info(message))
    result = PipelineResult()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    handlers = {
        RunCommand.SIMULATE: _simulate,
        RunCommand.ESTIMATE: _estimate,
        RunCommand.REPORT: _report,
        RunCommand.VALIDATE: partial(_validate, on_replication=on_replication),
    }
    handlers[config.command](config, result, progress)
    logger.info(f"{config.command.value} finished with status {result.status}, "
                f"{len(result.artifacts)} artifacts")
    return result


def artifact_summary(result: PipelineResult) -> List[List[Union[str, int]]]:
    """(artifact, path) rows for display."""
    return [[name, str(path)] for name, path in sorted(result.artifacts.items())]
