"""Command line interface: ``dfsramsey <mode> --config run.yaml``.

Exit codes: 0 success, 2 configuration error, 3 at least one fit failed or did not
converge (outputs are still written).
"""

from __future__ import annotations

import logging
import sys

import click

from . import pipeline
from .config import ConfigError, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FIT = 3

LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def _run(mode: str, config_path, seed, out, emit_plot_data, n_jobs):
    try:
        config = load_config(config_path)
        if config.mode != mode:
            raise ConfigError(f"Config is for mode {config.mode!r}, not {mode!r}.")
        config = config.with_overrides(
            seed=seed,
            output_dir=out,
            n_jobs=n_jobs,
            emit_plot_data=True if emit_plot_data else None,
        )
        result = pipeline.run(config)
    except ConfigError as err:
        click.echo(f"Configuration error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"{mode}: {len(result.outputs)} files written to {result.out_dir}")
    if not result.ok:
        click.echo(f"{result.n_failed} fit(s) failed or did not converge.", err=True)
        sys.exit(EXIT_FIT)
    sys.exit(EXIT_OK)


def _mode_command(mode: str, help_text: str):
    @click.command(name=mode, help=help_text)
    @click.option(
        "--config",
        "config_path",
        required=True,
        type=click.Path(exists=True, dir_okay=False),
        help="YAML run configuration.",
    )
    @click.option("--seed", type=click.IntRange(0, 2**64 - 1), help="Override plan.seed.")
    @click.option("--out", type=click.Path(file_okay=False), help="Override run.output_dir.")
    @click.option(
        "--emit-plot-data", is_flag=True, help="Write plot_*.csv files with x, y, sigma."
    )
    @click.option(
        "--n-jobs", type=click.IntRange(min=1), help="Worker threads (outputs do not change)."
    )
    def command(config_path, seed, out, emit_plot_data, n_jobs):
        _run(mode, config_path, seed, out, emit_plot_data, n_jobs)

    return command


@click.group()
@click.version_option(package_name="dfsramsey")
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG logging.")
def main(verbose):
    """Simulate and analyse Ramsey experiments on decoherence-free two-ion Bell states."""
    logging.basicConfig(
        level=LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)],
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )


main.add_command(
    _mode_command("parity-scan", "Parity oscillations of the configured states at one gradient.")
)
main.add_command(_mode_command("angle-scan", "Shift against magnetic field orientation."))
main.add_command(_mode_command("gradient-scan", "Shift against gradient and the moment."))
main.add_command(_mode_command("extract", "Moment from a given slope."))
main.add_command(_mode_command("fit-only", "Fit external parity datasets."))


if __name__ == "__main__":
    main()
