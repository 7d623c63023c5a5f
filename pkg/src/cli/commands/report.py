"""Report command for summarizing written study tables."""

import click

from src.cli.options import execute, out_option
from src.models.run_config import RunCommand


@click.command()
@out_option
@click.pass_context
def report(ctx, out_dir):
    """Collect the study CSVs of an output directory into summary.txt."""
    execute(ctx, RunCommand.REPORT, {'out_dir': out_dir}, title="Summarizing reports")
