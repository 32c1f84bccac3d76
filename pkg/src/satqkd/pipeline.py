"""Scenario-level workflows shared by the CLI and the acceptance suite."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .aperture_optimizer import ApertureOptimum, ApertureSweepRow, optimal_aperture, sweep_aperture
from .errors import InputError
from .link_budget import Direction, assemble_ledger, sample_received_power
from .qkd_rates import EntangledParams, entangled_gain, keyrate_bbm92, keyrate_decoy
from .scenario_io.loader import ScenarioFile
from .scenario_io.render import KeyRateRow
from .turbulence import BeamGeometry, diagnose, mean_fading

__all__ = ["scenario_keyrate", "scenario_aperture_sweep", "ground_beam_geometry", "scenario_fading"]


def scenario_keyrate(sf: ScenarioFile, protocol: str, loss_db: float | None = None) -> KeyRateRow:
    """Key rate over the scenario's ledger loss, or over ``loss_db`` when given."""
    loss = assemble_ledger(sf.link).total_loss_db if loss_db is None else loss_db
    site = sf.link.site.name
    if protocol == "decoy":
        if sf.decoy is None:
            raise InputError(f"scenario {sf.name!r} has no [decoy] block")
        return KeyRateRow(site, keyrate_decoy(sf.decoy, loss))
    if protocol == "bbm92":
        e = sf.entangled
        if e is None:
            raise InputError(f"scenario {sf.name!r} has no [entangled] block")
        gain = entangled_gain(loss, e.alice_efficiency, e.bob_efficiency)
        return KeyRateRow(site, keyrate_bbm92(EntangledParams(e.pair_rate, gain, e.qber, e.ec_efficiency_f), loss))
    raise InputError(f"unknown protocol {protocol!r}; choose decoy or bbm92")


def scenario_aperture_sweep(
    sf: ScenarioFile, diameters: Sequence[float] | None = None
) -> tuple[list[ApertureSweepRow], ApertureOptimum | None]:
    """Sweep the transmitter diameter using the scenario's ``[aperture_sweep]`` block."""
    cfg = sf.aperture_sweep
    if cfg is None:
        raise InputError(f"scenario {sf.name!r} has no [aperture_sweep] block")
    link = sf.link
    vertical = cfg.vertical_distance_m or link.range_m * math.cos(link.zenith)
    template = BeamGeometry(
        waist_w0=0.5 * link.transmitter.aperture_d,
        wavelength_nm=link.wavelength_nm,
        range_l=vertical / math.cos(link.zenith),
        zenith=link.zenith,
        site_altitude_h0=link.site.altitude_m,
    )
    ds = cfg.diameters_m if diameters is None else tuple(diameters)
    rows = sweep_aperture(template, cfg.r0_m, ds, cfg.theta_b_half)
    return rows, (optimal_aperture(rows) if len(rows) >= 3 else None)


def ground_beam_geometry(sf: ScenarioFile) -> BeamGeometry:
    link = sf.link
    return BeamGeometry(
        waist_w0=link.transmitter.launch_waist(link.wavelength_nm),
        wavelength_nm=link.wavelength_nm,
        range_l=link.range_m,
        zenith=0.0 if link.direction is Direction.HORIZONTAL else link.zenith,
        site_altitude_h0=link.site.altitude_m,
        horizontal=link.direction is Direction.HORIZONTAL,
    )


def scenario_fading(sf: ScenarioFile, n: int, seed: int | None) -> dict[str, float]:
    """Monte Carlo received power with jitter fading and scintillation from the scenario's site."""
    if n < 2:
        raise InputError("need at least 2 samples")
    link = sf.link
    tx = link.transmitter
    if tx.half_divergence is None:
        raise InputError("fading needs the transmitter half divergence")
    geom = ground_beam_geometry(sf)
    r0 = link.site.fried_r0(link.wavelength_nm, geom.zenith)
    diag = diagnose(geom, link.site.hv_profile, r0, link.ground_terminal.aperture_d, tx.half_divergence)
    draws = sample_received_power(link, diag.beta, diag.rytov_log_variance_sigma_l2, n, seed)
    pr = draws.pr
    return {
        "p0_w": draws.p0,
        "beta": diag.beta,
        "sigma_l2": diag.rytov_log_variance_sigma_l2,
        "fried_r0_m": r0,
        "mean_I_sample": float(np.mean(draws.fading_i)),
        "mean_I_expected": mean_fading(diag.beta),
        "var_S_sample": float(np.var(draws.fading_s, ddof=1)),
        "var_S_expected": diag.scintillation_index_sigma_s2,
        "mean_pr_w": float(np.mean(pr)),
        "samples": float(n),
    }
