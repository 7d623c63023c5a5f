"""Simulate command for generating synthetic spell panels."""

import click

from src.cli.options import (
    config_option,
    execute,
    out_option,
    reps_option,
    scale_option,
    seed_option,
    study_option,
    window_options,
    workers_option,
)
from src.models.run_config import RunCommand, Study


@click.command()
@config_option
@seed_option
@reps_option
@out_option
@study_option
@window_options
@workers_option
@scale_option
@click.pass_context
def simulate(ctx, config_path, seed, reps, out_dir, studies, base_year, end_year, workers,
             scale):
    """Simulate a spell panel with its ground truth.

    Writes spells.csv, municipalities.csv, tasks.csv, truth.txt and the
    effective simulation.yaml to the output directory. The estimation flags
    are recorded in its estimation section for a later `estimate --config`.
    """
    execute(ctx, RunCommand.SIMULATE, {
        'config_path': config_path,
        'seed': seed,
        'reps': reps,
        'out_dir': out_dir,
        'studies': [Study(s) for s in studies],
        'base_year': base_year,
        'end_year': end_year,
        'workers': workers,
        'scale': scale,
    }, title="Simulating spell panel")
