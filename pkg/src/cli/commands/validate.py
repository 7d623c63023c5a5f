"""Validate command for checking estimators against the simulator."""

import click

from src.cli.options import (
    config_option,
    execute,
    out_option,
    reps_option,
    scale_option,
    seed_option,
    workers_option,
)
from src.models.run_config import RunCommand


@click.command()
@config_option
@seed_option
@reps_option
@out_option
@workers_option
@scale_option
@click.option('--replications', type=click.IntRange(min=1), default=None,
              help='Simulate-estimate replications (default: 1)')
@click.pass_context
def validate(ctx, config_path, seed, reps, out_dir, workers, scale, replications):
    """Simulate, estimate and compare every estimator with the ground truth.

    Writes validation.txt and validation.csv; exits with status 1 if any
    check fails. Bootstrap is off unless --reps is given.
    """
    execute(ctx, RunCommand.VALIDATE, {
        'config_path': config_path,
        'seed': seed,
        'reps': reps,
        'out_dir': out_dir,
        'workers': workers,
        'scale': scale,
        'replications': replications,
    }, title="Validating estimators")
