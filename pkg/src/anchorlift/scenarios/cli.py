# -*- coding: utf-8 -*-

"""CLI for the scenario runner.

Run with ``anchorlift run <file-or-name>`` and ``anchorlift list``.
"""

import logging
import sys
from typing import Optional

import click
from more_click import verbose_option

__all__ = [
    "run",
    "list_command",
]

logger = logging.getLogger(__name__)

#: Exit code for a scenario whose metrics miss their bounds
EXIT_TOLERANCE = 1
#: Exit code for a scenario that can not be read or run
EXIT_INPUT = 2


@click.command()
@click.argument("scenario")
@click.option("--step", type=float, help="The integrator step, overriding the scenario")
@click.option("--seed", type=int, help="The random seed, overriding the scenario")
@click.option(
    "--out-dir",
    type=click.Path(file_okay=False, dir_okay=True),
    help="The artifact directory, overriding the scenario and ANCHORLIFT_OUT_DIR",
)
@click.option("--no-timestamp", is_flag=True, help="Don't write the timestamp header line")
@click.option(
    "--tol-scale",
    type=float,
    default=1.0,
    show_default=True,
    help="Multiply all tolerances of the scenario",
)
@click.option("--progress", is_flag=True, help="Show progress bars")
@verbose_option
def run(
    scenario: str,
    step: Optional[float],
    seed: Optional[int],
    out_dir: Optional[str],
    no_timestamp: bool,
    tol_scale: float,
    progress: bool,
):
    """Run a scenario file or a built-in scenario by name."""
    from .registry import load_scenario
    from .runner import run_scenario

    try:
        parsed = load_scenario(scenario)
        report = run_scenario(
            parsed,
            step=step,
            seed=seed,
            out_dir=out_dir,
            timestamp=not no_timestamp,
            tol_scale=tol_scale,
            use_tqdm=progress,
        )
    except (ValueError, OSError, KeyError) as e:
        click.secho(f"error: {e}", fg="red", err=True)
        sys.exit(EXIT_INPUT)

    click.echo(report.summary())
    if not report.passed:
        click.secho(f"{parsed.name} missed its tolerances", fg="red", err=True)
        sys.exit(EXIT_TOLERANCE)


@click.command(name="list")
def list_command():
    """List the built-in scenarios."""
    from .registry import list_scenarios

    for name in list_scenarios():
        click.echo(name)


if __name__ == "__main__":
    run()
