"""Command-line entry point: ``relmeas <verb> --config PATH [--out PATH] [--threads N]``.

Exit codes: 0 success, 1 failed invariant check, 2 configuration error,
3 numerical guard error.
"""
import sys

import click

from ..errors import ConfigError, NumericalGuardError
from .config import ExperimentConfig, load_config, validate
from .runners import RUNNERS
from .table import emit_table

EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _run(experiment, config, out, threads):
    try:
        if config is None:
            if experiment != "check":
                raise ConfigError("--config is required for this verb")
            cfg = ExperimentConfig(experiment="check")
            validate(cfg)
        else:
            cfg = load_config(config)
        if cfg.experiment != experiment:
            line = cfg.key_lines.get("experiment")
            raise ConfigError(
                f"config declares experiment {cfg.experiment!r} but the verb runs {experiment!r}", line)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        table = RUNNERS[experiment](cfg, threads)
    except NumericalGuardError as exc:
        click.echo(f"numerical guard: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    path = out or cfg.output_path or f"{experiment}.csv"
    try:
        written = emit_table(table, path)
    except OSError as exc:
        click.echo(f"output error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    for k, v in table.summary.items():
        click.echo(f"{k}: {v}")
    for p in written:
        click.echo(f"wrote {p}")
    if experiment == "check" and not table.summary.get("all_passed", False):
        sys.exit(EXIT_CHECK_FAILED)


def _options(fn):
    fn = click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True,
                      help="Worker threads; results do not depend on this.")(fn)
    fn = click.option("--out", type=click.Path(dir_okay=False), default=None,
                      help="Output CSV path (overrides output_path in the config).")(fn)
    return fn


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Restricted-path-integral position measurement experiments."""


@main.command()
@click.option("--config", "config", type=click.Path(), required=True)
@_options
def lightcone(config, out, threads):
    """Outcome weights across the light cone and their spacelike decay length."""
    _run("lightcone", config, out, threads)


@main.command()
@click.option("--config", "config", type=click.Path(), required=True)
@_options
def smoothing(config, out, threads):
    """Weight variation between nearby outcomes of a sharp reduction."""
    _run("smoothing", config, out, threads)


@main.command("unitarity-sweep")
@click.option("--config", "config", type=click.Path(), required=True)
@_options
def unitarity_sweep(config, out, threads):
    """Gram defect and Compton condition over a sweep of smearing widths."""
    _run("unitarity_sweep", config, out, threads)


@main.command()
@click.option("--config", "config", type=click.Path(), required=True)
@_options
def completeness(config, out, threads):
    """Outcome-sum identity and propagator composition at grid refinements."""
    _run("completeness", config, out, threads)


@main.command()
@click.option("--config", "config", type=click.Path(), default=None)
@_options
def check(config, out, threads):
    """Run the invariant suite; exits 1 if any invariant fails."""
    _run("check", config, out, threads)


if __name__ == "__main__":
    main()
