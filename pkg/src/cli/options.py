"""Shared click options and the run helper used by every subcommand."""

import sys
from pathlib import Path
from typing import Any, Callable, Dict

import click

from src.models.run_config import RunCommand, Study
from src.services.config_manager import ConfigManager
from src.services.pipeline import artifact_summary, run_pipeline
from src.utils.output_manager import output

STUDY_CHOICES = [s.value for s in Study]


def config_option(f: Callable) -> Callable:
    return click.option('--config', 'config_path', type=click.Path(path_type=Path),
                        help='YAML file with simulation and estimation sections')(f)


def seed_option(f: Callable) -> Callable:
    return click.option('--seed', type=click.IntRange(min=0), default=None,
                        help='Seed for simulation and bootstrap')(f)


def out_option(f: Callable) -> Callable:
    return click.option('--out', 'out_dir', type=click.Path(path_type=Path), default=None,
                        help='Output directory (default: $SHOCKDECOMP_OUT or ./out)')(f)


def workers_option(f: Callable) -> Callable:
    return click.option('--workers', type=click.IntRange(min=1), default=None,
                        help='Worker threads')(f)


def scale_option(f: Callable) -> Callable:
    return click.option('--scale', type=click.FloatRange(min=0, min_open=True), default=None,
                        help='Fraction of the default municipality count')(f)


def reps_option(f: Callable) -> Callable:
    return click.option('--reps', type=click.IntRange(min=0), default=None,
                        help='Wild cluster bootstrap replications')(f)


def study_option(f: Callable) -> Callable:
    return click.option('--study', 'studies', type=click.Choice(STUDY_CHOICES), multiple=True,
                        help='Study to run (repeatable, default: all)')(f)


def window_options(f: Callable) -> Callable:
    f = click.option('--end-year', type=int, default=None,
                     help='End period (default: 1993)')(f)
    return click.option('--base-year', type=int, default=None,
                        help='Base period (default: 1990)')(f)


def execute(ctx: click.Context, command: RunCommand, flags: Dict[str, Any], title: str):
    """Resolve the run configuration, run the pipeline and report artifacts.

    Exits with status 1 when any step fails.
    """
    try:
        config = ConfigManager().build_run_config(command, flags)
        output.header(title, f"Output directory: {config.out_dir}")
        if command is RunCommand.VALIDATE:
            with output.progress_task("Replications", total=config.replications) as advance:
                result = run_pipeline(config, progress=output.info, on_replication=advance)
        else:
            result = run_pipeline(config, progress=output.info)

        if result.artifacts:
            output.table(artifact_summary(result), headers=['artifact', 'path'])
        for failure in result.failures:
            output.error(str(failure))
        if result.status != 0:
            sys.exit(result.status)
        output.success(f"{command.value} finished")

    except Exception as e:
        if ctx.obj.get('DEBUG'):
            raise
        output.error(f"{command.value} failed: {e}")
        sys.exit(1)
