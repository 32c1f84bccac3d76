"""Trade beam wander against wavefront degradation over transmitter aperture size.

Small apertures launch a narrow beam that wanders more relative to its
footprint; large apertures collect more phase distortion. The sweep adds the
two dB losses and reports the minimising diameter.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .atmosphere import SiteProfile
from .errors import InputError
from .turbulence import BeamGeometry, beam_wander_angle, beam_wander_loss_db, strehl_loss_db

__all__ = [
    "ApertureSweepRow",
    "ApertureOptimum",
    "Regime",
    "sweep_aperture",
    "optimal_aperture",
    "d_over_r0_guidance",
]


@dataclass(frozen=True)
class ApertureSweepRow:
    """Diameter-dependent losses in positive dB.

    ``total_d_dependent_loss`` defaults to the sum of the two parts. It may be
    given explicitly for tabulated data whose printed total was rounded
    separately.
    """

    diameter_d: float
    beam_wander_loss: float
    turbulence_loss: float
    total_d_dependent_loss: float | None = None

    def __post_init__(self):
        if not self.diameter_d > 0:
            raise InputError(f"diameter must be positive, got {self.diameter_d!r}")
        if self.beam_wander_loss < 0 or self.turbulence_loss < 0:
            raise InputError("loss columns must be non-negative")
        if self.total_d_dependent_loss is None:
            object.__setattr__(self, "total_d_dependent_loss", self.beam_wander_loss + self.turbulence_loss)
        elif self.total_d_dependent_loss < 0:
            raise InputError("total loss must be non-negative")


def _r0_of(r0_or_site: float | SiteProfile, geom: BeamGeometry) -> float:
    if isinstance(r0_or_site, SiteProfile):
        return r0_or_site.fried_r0(geom.wavelength_nm, geom.zenith)
    if not r0_or_site > 0:
        raise InputError(f"r0 must be positive, got {r0_or_site!r}")
    return float(r0_or_site)


def sweep_aperture(
    template: BeamGeometry,
    r0_or_site: float | SiteProfile,
    diameters: Sequence[float],
    theta_b_half: float | None = None,
) -> list[ApertureSweepRow]:
    """Evaluate both losses at each diameter, sorted by diameter.

    ``template`` supplies wavelength, range and zenith; its waist is replaced
    by ``D/2``. ``theta_b_half`` is the far-field half angle that wander is
    compared against; by default the diffraction angle of each aperture.
    """
    ds = sorted(float(d) for d in diameters)
    if any(not d > 0 for d in ds):
        raise InputError("diameters must be positive")
    if theta_b_half is not None and not theta_b_half > 0:
        raise InputError("theta_b_half must be positive")
    rows = []
    for d in ds:
        geom = dataclasses.replace(template, waist_w0=0.5 * d)
        r0 = _r0_of(r0_or_site, geom)
        theta = geom.theta_b_half if theta_b_half is None else theta_b_half
        wander = beam_wander_loss_db(beam_wander_angle(geom, r0), theta)
        rows.append(ApertureSweepRow(d, wander, strehl_loss_db(d / r0)))
    return rows


@dataclass(frozen=True)
class ApertureOptimum:
    diameter_d: float
    total_loss: float
    interior: bool

    @property
    def warning(self) -> str | None:
        if self.interior:
            return None
        return (
            f"minimum at the sweep edge (D = {self.diameter_d:g} m); "
            "widen the diameter range to confirm it is a true optimum"
        )


def optimal_aperture(rows: Sequence[ApertureSweepRow]) -> ApertureOptimum:
    """Diameter of least total loss; ties go to the smaller diameter.

    Smaller telescopes are cheaper, hence the tie rule. A minimum at either
    end of the sweep is returned with ``interior=False``.
    """
    if len(rows) < 3:
        raise InputError(f"need at least 3 sweep rows to locate an optimum, got {len(rows)}")
    ordered = sorted(rows, key=lambda r: r.diameter_d)
    best = min(range(len(ordered)), key=lambda i: (ordered[i].total_d_dependent_loss, ordered[i].diameter_d))
    row = ordered[best]
    return ApertureOptimum(row.diameter_d, row.total_d_dependent_loss, 0 < best < len(ordered) - 1)


class Regime(str, Enum):
    WANDER_REGIME = "wander_regime"
    SAFE = "safe"
    DEGRADING = "degrading"


def d_over_r0_guidance(d_over_r0: float) -> Regime:
    """Operating band of an aperture: below 1 wander dominates, above 2 the wavefront degrades."""
    if d_over_r0 < 0 or math.isnan(d_over_r0):
        raise InputError(f"D/r0 must be non-negative, got {d_over_r0!r}")
    if d_over_r0 < 1.0:
        return Regime.WANDER_REGIME
    if d_over_r0 <= 2.0:
        return Regime.SAFE
    return Regime.DEGRADING
