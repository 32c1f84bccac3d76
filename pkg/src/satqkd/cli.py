"""Command-line interface: ``satqkd <command> ...``.

Exit codes: 0 success, 1 a validation check failed, 2 bad input.
"""
from __future__ import annotations

import csv
import math
import sys
from pathlib import Path

import click

from .errors import SatQKDError
from .link_budget import assemble_ledger
from .orbit_doppler import default_zenith_grid, doppler_profile, zenith_sweep
from .pipeline import scenario_aperture_sweep, scenario_fading, scenario_keyrate
from .qkd_rates import fit_detector_params
from .scenario_io import load_scenario, render_output, run_validation_suite
from .scenario_io.render import (
    FORMATS,
    aperture_report,
    detector_fit_report,
    doppler_report,
    keyrate_report,
    ledger_report,
    statistics_report,
    validation_report,
    zenith_report,
)

EXIT_OK, EXIT_VALIDATION, EXIT_INPUT = 0, 1, 2


class _Ctx:
    def __init__(self, fmt, out, seed):
        self.fmt = fmt
        self.out = out
        self.seed = seed

    def emit(self, report, scenario_format: str | None = None) -> None:
        data = render_output(report, self.fmt or scenario_format or "table")
        if self.out is None:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
        else:
            Path(self.out).write_bytes(data)


def _guard(fn):
    """Map library errors to exit code 2 with a one-line message per issue."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SatQKDError, ValueError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None, help="Output format (default: scenario's, else table).")
@click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None, help="Write output here instead of stdout.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Seed for Monte Carlo commands.")
@click.version_option(package_name="artifact")
@click.pass_context
def main(ctx, fmt, out, seed):
    """Optical link budgets and QKD key rates for ground-to-satellite links.

    SCENARIO arguments take a TOML path or the name of a shipped scenario
    (for example hanle_signal).
    """
    ctx.obj = _Ctx(fmt, out, seed)


@main.command()
@click.argument("scenario")
@click.pass_obj
@_guard
def budget(obj: _Ctx, scenario):
    """Assemble the dB ledger of SCENARIO."""
    sf = load_scenario(scenario)
    obj.emit(ledger_report(assemble_ledger(sf.link), sf.echo), sf.output_format)


@main.command("sweep-zenith")
@click.argument("scenario")
@click.option("--max-deg", type=float, default=70.0, show_default=True)
@click.option("--step-deg", type=float, default=5.0, show_default=True)
@click.pass_obj
@_guard
def sweep_zenith_cmd(obj: _Ctx, scenario, max_deg, step_deg):
    """Excess loss versus zenith angle relative to zenith."""
    sf = load_scenario(scenario)
    obj.emit(zenith_report(zenith_sweep(sf.link, default_zenith_grid(max_deg, step_deg))), sf.output_format)


def _parse_diameters(text: str | None):
    if text is None:
        return None
    try:
        values = [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise click.BadParameter("diameters must be comma-separated numbers in metres") from None
    if not values:
        raise click.BadParameter("give at least one diameter")
    return values


@main.command("sweep-aperture")
@click.argument("scenario")
@click.option("--diameters", default=None, help="Comma-separated diameters in metres (default: the scenario grid).")
@click.pass_obj
@_guard
def sweep_aperture_cmd(obj: _Ctx, scenario, diameters):
    """Beam wander plus turbulence loss versus transmitter diameter."""
    sf = load_scenario(scenario)
    rows, best = scenario_aperture_sweep(sf, _parse_diameters(diameters))
    if best is not None and best.warning:
        click.echo(f"warning: {best.warning}", err=True)
    obj.emit(aperture_report(rows, best), sf.output_format)


@main.command()
@click.argument("scenario")
@click.option("--protocol", type=click.Choice(["decoy", "bbm92"]), required=True)
@click.option("--loss-db", type=float, default=None, help="Use this channel loss instead of the ledger total.")
@click.pass_obj
@_guard
def keyrate(obj: _Ctx, scenario, protocol, loss_db):
    """QBER and secret-key rate over the scenario's channel."""
    sf = load_scenario(scenario)
    obj.emit(keyrate_report([scenario_keyrate(sf, protocol, loss_db)]), sf.output_format)


@main.command()
@click.argument("scenario")
@click.option("--samples", type=click.IntRange(min=2), default=None, help="Grid size (default: the scenario's).")
@click.pass_obj
@_guard
def doppler(obj: _Ctx, scenario, samples):
    """Doppler profile across the pass window."""
    sf = load_scenario(scenario)
    obj.emit(doppler_report(doppler_profile(sf.pass_params, samples or sf.n_doppler_samples)), sf.output_format)


@main.command()
@click.argument("scenario")
@click.option("--samples", type=click.IntRange(min=2), default=100_000, show_default=True)
@click.pass_obj
@_guard
def fading(obj: _Ctx, scenario, samples):
    """Monte Carlo received power under jitter fading and scintillation."""
    sf = load_scenario(scenario)
    stats = scenario_fading(sf, samples, obj.seed)
    obj.emit(statistics_report(stats, {"seed": obj.seed}), sf.output_format)


@main.command()
@click.argument("suite", type=click.Choice(["canary", "ottawa"]))
@click.pass_obj
def validate(obj: _Ctx, suite):
    """Run a reference validation suite; exit 1 if any check fails."""
    try:
        report = run_validation_suite(suite)
        obj.emit(validation_report(report))
    except (SatQKDError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    if not report.passed:
        for c in report.checks:
            if not c.passed:
                click.echo(c.describe(), err=True)
        sys.exit(EXIT_VALIDATION)


@main.command("fit-detectors")
@click.argument("points_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--mu", type=float, default=0.5, show_default=True, help="Signal mean photon number.")
@click.option("--detector-efficiency", type=float, default=1.0, show_default=True)
@click.pass_obj
@_guard
def fit_detectors(obj: _Ctx, points_csv, mu, detector_efficiency):
    """Fit dark count Y0 and detector error from a loss_db,qber CSV."""
    with open(points_csv, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"loss_db", "qber"} <= set(reader.fieldnames):
            raise ValueError(f"{points_csv}: header must contain loss_db and qber")
        points = [(float(r["loss_db"]), float(r["qber"])) for r in reader]
    if any(not (math.isfinite(l) and math.isfinite(q)) for l, q in points):
        raise ValueError("non-finite values in the points file")
    fit = fit_detector_params(points, mu, detector_efficiency)
    obj.emit(detector_fit_report(fit, points))


if __name__ == "__main__":  # pragma: no cover
    main()
