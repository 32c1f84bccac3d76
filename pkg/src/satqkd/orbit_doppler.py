"""Culminating LEO pass: Doppler profile and zenith-angle loss sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError
from .link_budget import LinkScenario, assemble_ledger, with_zenith

__all__ = [
    "SPEED_OF_LIGHT",
    "PassParameters",
    "DopplerPoint",
    "SweepPoint",
    "normalized_doppler",
    "doppler_profile",
    "default_zenith_grid",
    "zenith_sweep",
]

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class PassParameters:
    """Circular-orbit pass that culminates at ``t = 0``.

    The pass is centred on culmination, so valid offsets are
    ``[-window/2, window/2]``.
    """

    earth_radius_re: float = 6.4e6
    orbit_radius_r: float = 6.9e6
    visibility_window: float = 480.0
    max_elevation_theta_max: float = 0.5 * math.pi
    angular_speed_omega_f: float = 0.00105
    carrier_frequency_thz: float = 380.0

    def __post_init__(self):
        if not self.orbit_radius_r > self.earth_radius_re > 0:
            raise InputError("need orbit radius > earth radius > 0")
        if not self.visibility_window > 0:
            raise InputError("visibility window must be positive")
        if not self.angular_speed_omega_f > 0:
            raise InputError("angular speed must be positive")
        if not 0.0 < self.max_elevation_theta_max <= 0.5 * math.pi:
            raise InputError("maximum elevation must lie in (0, 90] degrees")
        if not self.carrier_frequency_thz > 0:
            raise InputError("carrier frequency must be positive")

    @property
    def half_window(self) -> float:
        return 0.5 * self.visibility_window

    @property
    def carrier_hz(self) -> float:
        return self.carrier_frequency_thz * 1e12

    @property
    def ground_track_offset_phi(self) -> float:
        """Angle at the earth centre between the station and the orbital plane."""
        theta = self.max_elevation_theta_max
        return math.acos(self.earth_radius_re / self.orbit_radius_r * math.cos(theta)) - theta


def normalized_doppler(t_offset: float, params: PassParameters) -> float:
    """Fractional Doppler shift ``df/f`` at ``t_offset`` seconds from culmination.

    Positive while the satellite approaches.
    """
    if abs(t_offset) > params.half_window * (1.0 + 1e-12):
        raise InputError(f"t_offset {t_offset!r} s outside the +/-{params.half_window:g} s window")
    re, r = params.earth_radius_re, params.orbit_radius_r
    psi = params.angular_speed_omega_f * t_offset
    cos_phi = math.cos(params.ground_track_offset_phi)
    rho = math.sqrt(re * re + r * r - 2.0 * re * r * math.cos(psi) * cos_phi)
    # + 0.0 turns the culmination value -0.0 into 0.0
    return -re * r * math.sin(psi) * cos_phi * params.angular_speed_omega_f / (SPEED_OF_LIGHT * rho) + 0.0


@dataclass(frozen=True)
class DopplerPoint:
    t_s: float
    df_over_f: float
    df_hz: float


def doppler_profile(params: PassParameters, n_samples: int = 481) -> list[DopplerPoint]:
    """Uniform time grid across the window, endpoints included."""
    if n_samples < 2:
        raise InputError("doppler profile needs at least 2 samples")
    times = np.linspace(-params.half_window, params.half_window, n_samples)
    out = []
    for t in times.tolist():
        x = normalized_doppler(t, params)
        out.append(DopplerPoint(t, x, x * params.carrier_hz))
    return out


@dataclass(frozen=True)
class SweepPoint:
    angle_deg: float
    excess_loss_db: float


def default_zenith_grid(max_deg: float = 70.0, step_deg: float = 5.0) -> list[float]:
    """Angles in degrees from 0 to ``max_deg`` inclusive."""
    if not step_deg > 0:
        raise InputError("step must be positive")
    if not 0.0 <= max_deg < 90.0:
        raise InputError("maximum zenith angle must lie in [0, 90) degrees")
    n = int(math.floor(max_deg / step_deg + 1e-9))
    return [i * step_deg for i in range(n + 1)]


def zenith_sweep(scenario: LinkScenario, angles_deg: Sequence[float] | None = None) -> list[SweepPoint]:
    """Total ledger loss at each angle minus the loss at zenith.

    The scenario's range is read as a slant range at its own zenith angle
    and rescaled with ``sec(angle)`` (flat earth).
    """
    angles = default_zenith_grid() if angles_deg is None else list(angles_deg)
    bad = [a for a in angles if not 0.0 <= a < 90.0]
    if bad:
        raise InputError(f"zenith angles must lie in [0, 90) degrees, got {bad}")
    base = assemble_ledger(with_zenith(scenario, 0.0)).total_loss_db
    points = []
    for a in angles:
        total = base if a == 0.0 else assemble_ledger(with_zenith(scenario, math.radians(a))).total_loss_db
        points.append(SweepPoint(float(a), total - base))
    return points
