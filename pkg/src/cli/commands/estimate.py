"""Estimate command for running studies on a spell panel."""

from pathlib import Path

import click

from src.cli.options import (
    config_option,
    execute,
    out_option,
    reps_option,
    seed_option,
    study_option,
    window_options,
    workers_option,
)
from src.models.run_config import RunCommand, Study


@click.command()
@click.option('--spells', 'spells_path', type=click.Path(path_type=Path),
              help='Spell CSV (default: <out>/spells.csv)')
@click.option('--municipalities', 'municipalities_path', type=click.Path(path_type=Path),
              help='Municipality registry CSV (default: <out>/municipalities.csv)')
@click.option('--tasks', 'tasks_path', type=click.Path(path_type=Path),
              help='Task survey CSV for occupation classes')
@click.option('--truth', 'truth_path', type=click.Path(path_type=Path),
              help='Ground-truth file to compare estimates against')
@config_option
@seed_option
@reps_option
@out_option
@study_option
@window_options
@workers_option
@click.pass_context
def estimate(ctx, spells_path, municipalities_path, tasks_path, truth_path, config_path, seed,
             reps, out_dir, studies, base_year, end_year, workers):
    """Run the selected studies and write text tables and CSVs."""
    execute(ctx, RunCommand.ESTIMATE, {
        'spells_path': spells_path,
        'municipalities_path': municipalities_path,
        'tasks_path': tasks_path,
        'truth_path': truth_path,
        'config_path': config_path,
        'seed': seed,
        'reps': reps,
        'out_dir': out_dir,
        'studies': [Study(s) for s in studies],
        'base_year': base_year,
        'end_year': end_year,
        'workers': workers,
    }, title="Estimating studies")
