"""Refractive-index structure profiles, Fried parameter and atmospheric transmittance.

Heights passed to a profile are metres above the ground station, not above
sea level. Angles are radians.
"""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .errors import InputError
from .numerics import adaptive_simpson

__all__ = [
    "ARCSEC",
    "DEFAULT_H_TOP",
    "QUAD_REL_TOL",
    "SEEING_CONSTANT",
    "Cn2Profile",
    "HufnagelValleyProfile",
    "UniformCn2Profile",
    "TransmittanceTable",
    "SiteProfile",
    "ExtinctionSpec",
    "Weight",
    "cn2_hv",
    "cn2_moment",
    "weight_function",
    "fried_parameter",
    "fried_from_seeing",
    "rescale_fried",
    "uniform_cn2_from_fried",
    "zenith_transmittance",
    "slant_transmittance",
    "horizontal_transmittance",
    "load_transmittance_csv",
    "wavenumber",
]

ARCSEC = math.pi / (180.0 * 3600.0)
#: Ceiling of every altitude integral, metres above the site.
DEFAULT_H_TOP = 30e3
QUAD_REL_TOL = 1e-8
#: r0 = SEEING_CONSTANT * wavelength / seeing_angle.
SEEING_CONSTANT = 0.98


def wavenumber(wavelength_nm: float) -> float:
    """Optical wavenumber ``2 pi / lambda`` in rad/m."""
    if not wavelength_nm > 0:
        raise InputError(f"wavelength must be positive, got {wavelength_nm!r} nm")
    return 2.0 * math.pi / (wavelength_nm * 1e-9)


def _check_zenith(zenith: float) -> None:
    if not 0.0 <= zenith < 0.5 * math.pi:
        raise InputError(f"zenith angle must lie in [0, 90) degrees, got {math.degrees(zenith):.6g} deg")


class Cn2Profile(Protocol):
    def cn2(self, h: float) -> float: ...


@dataclass(frozen=True)
class HufnagelValleyProfile:
    """Three-term Hufnagel-Valley profile.

    ``ground_turbulence_a0`` is in m^(-2/3), ``wind_rms_v`` in m/s. The
    defaults give the familiar HV-5/7 profile.
    """

    ground_turbulence_a0: float = 1.7e-14
    wind_rms_v: float = 21.0
    # Coefficients of the high-altitude and tropopause terms; zeroing all three
    # gives a turbulence-free atmosphere for tests.
    high_altitude_coeff: float = 0.00594
    tropopause_coeff: float = 2.7e-16

    def __post_init__(self):
        if self.ground_turbulence_a0 < 0 or self.wind_rms_v < 0:
            raise InputError("Hufnagel-Valley A0 and v must be non-negative")
        if self.high_altitude_coeff < 0 or self.tropopause_coeff < 0:
            raise InputError("Hufnagel-Valley coefficients must be non-negative")

    def cn2(self, h: float) -> float:
        return cn2_hv(h, self)


@dataclass(frozen=True)
class UniformCn2Profile:
    """Height-independent Cn^2, used for horizontal paths."""

    value: float

    def __post_init__(self):
        if self.value < 0:
            raise InputError(f"Cn2 must be non-negative, got {self.value!r}")

    def cn2(self, h: float) -> float:
        if h < 0:
            raise InputError(f"height must be non-negative, got {h!r}")
        return self.value


def cn2_hv(h: float, profile: HufnagelValleyProfile) -> float:
    """Hufnagel-Valley Cn^2 at height ``h`` (m above the site), in m^(-2/3)."""
    if h < 0 or math.isnan(h):
        raise InputError(f"height must be non-negative, got {h!r}")
    high = profile.high_altitude_coeff * (profile.wind_rms_v / 27.0) ** 2 * (1e-5 * h) ** 10 * math.exp(-1e-3 * h)
    tropo = profile.tropopause_coeff * math.exp(-h / 1500.0)
    ground = profile.ground_turbulence_a0 * math.exp(-1e-2 * h)
    return high + tropo + ground


class Weight(str, Enum):
    UNIT = "unit"
    H56 = "h^(5/6)"
    UPLINK_PATH = "uplink_path"


def weight_function(weight: Weight | str, h0: float, path_length: float | None = None):
    """Return the weighting ``w(h)`` used inside a Cn^2 moment."""
    weight = Weight(weight)
    if weight is Weight.UNIT:
        return lambda h: 1.0
    if weight is Weight.H56:
        return lambda h: (h - h0) ** (5.0 / 6.0) if h > h0 else 0.0
    if path_length is None or not path_length > 0:
        raise InputError("uplink_path weight needs a positive path length")

    def w(h: float) -> float:
        frac = 1.0 - (h - h0) / path_length
        return frac ** (5.0 / 3.0) if frac > 0 else 0.0

    return w


def cn2_moment(
    profile: Cn2Profile,
    h0: float = 0.0,
    h_top: float = DEFAULT_H_TOP,
    weight: Weight | str = Weight.UNIT,
    path_length: float | None = None,
    rel_tol: float = QUAD_REL_TOL,
) -> float:
    """Integral of ``Cn2(h) * w(h)`` over ``[h0, h_top]``.

    ``h`` is height above the site. ``path_length`` is only read by the
    ``uplink_path`` weight, ``(1 - (h - h0)/L)^(5/3)``; the ``h^(5/6)`` weight
    is measured from ``h0``.
    """
    if not (h0 >= 0 and h_top > h0):
        raise InputError(f"need h_top > h0 >= 0, got h0={h0!r}, h_top={h_top!r}")
    w = weight_function(weight, h0, path_length)
    result = adaptive_simpson(lambda h: profile.cn2(h) * w(h), h0, h_top, rel_tol=rel_tol)
    return max(result.value, 0.0)


def fried_parameter(
    profile: Cn2Profile,
    wavelength_nm: float,
    zenith: float = 0.0,
    h0: float = 0.0,
    h_top: float = DEFAULT_H_TOP,
) -> float:
    """Fried coherence length r0 in metres for a slant path at ``zenith``."""
    _check_zenith(zenith)
    k = wavenumber(wavelength_nm)
    integral = cn2_moment(profile, h0, h_top, Weight.UNIT)
    if integral == 0.0:
        return math.inf
    return (0.42 * k * k / math.cos(zenith) * integral) ** (-3.0 / 5.0)


def fried_from_seeing(seeing_arcsec: float, wavelength_nm: float) -> float:
    """r0 from a seeing FWHM, ``0.98 * lambda / seeing``."""
    if not seeing_arcsec > 0:
        raise InputError(f"seeing must be positive, got {seeing_arcsec!r} arcsec")
    if not wavelength_nm > 0:
        raise InputError(f"wavelength must be positive, got {wavelength_nm!r} nm")
    return SEEING_CONSTANT * wavelength_nm * 1e-9 / (seeing_arcsec * ARCSEC)


def rescale_fried(r0: float, from_nm: float, to_nm: float) -> float:
    """Move an r0 value between wavelengths with the lambda^(6/5) law."""
    return r0 * (to_nm / from_nm) ** (6.0 / 5.0)


def uniform_cn2_from_fried(r0: float, wavelength_nm: float, path_length: float) -> float:
    """Constant Cn^2 that yields ``r0`` over a horizontal path of ``path_length`` m."""
    k = wavenumber(wavelength_nm)
    return r0 ** (-5.0 / 3.0) / (0.42 * k * k * path_length)


@dataclass(frozen=True)
class TransmittanceTable:
    """Zenith transmittance sampled at increasing wavelengths (nm)."""

    entries: tuple[tuple[float, float], ...]

    def __post_init__(self):
        entries = tuple((float(w), float(t)) for w, t in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise InputError("transmittance table is empty")
        waves = [w for w, _ in entries]
        if any(b <= a for a, b in zip(waves, waves[1:])):
            raise InputError("transmittance wavelengths must be strictly increasing")
        bad = [t for _, t in entries if not 0.0 < t <= 1.0]
        if bad:
            raise InputError(f"transmittance values must lie in (0, 1], got {bad}")

    @property
    def wavelengths(self) -> list[float]:
        return [w for w, _ in self.entries]


def zenith_transmittance(table: TransmittanceTable, wavelength_nm: float) -> float:
    """Linear interpolation in wavelength; no extrapolation."""
    waves = table.wavelengths
    lo, hi = waves[0], waves[-1]
    if not lo <= wavelength_nm <= hi:
        raise InputError(f"wavelength {wavelength_nm!r} nm outside table range [{lo:g}, {hi:g}] nm")
    i = bisect.bisect_left(waves, wavelength_nm)
    if waves[i] == wavelength_nm:
        return table.entries[i][1]
    (w0, t0), (w1, t1) = table.entries[i - 1], table.entries[i]
    return t0 + (t1 - t0) * (wavelength_nm - w0) / (w1 - w0)


def slant_transmittance(eta_zenith: float, zenith: float) -> float:
    """Airmass scaling ``eta ** sec(zenith)``."""
    if not 0.0 < eta_zenith <= 1.0:
        raise InputError(f"zenith transmittance must lie in (0, 1], got {eta_zenith!r}")
    _check_zenith(zenith)
    if zenith == 0.0:
        return eta_zenith
    return eta_zenith ** (1.0 / math.cos(zenith))


@dataclass(frozen=True)
class ExtinctionSpec:
    beta_ext: float  # 1/m
    path_length: float  # m

    def __post_init__(self):
        if self.beta_ext < 0:
            raise InputError(f"extinction coefficient must be >= 0, got {self.beta_ext!r}")
        if not self.path_length > 0:
            raise InputError(f"path length must be positive, got {self.path_length!r}")


def horizontal_transmittance(spec: ExtinctionSpec) -> float:
    """Beer-Lambert transmittance ``exp(-beta L)``."""
    return math.exp(-spec.beta_ext * spec.path_length)


@dataclass(frozen=True)
class SiteProfile:
    """Ground-station description.

    ``turbulence_overrides`` maps wavelength (nm) to a measured turbulence
    transmittance that replaces the Strehl estimate at that wavelength.
    ``fried_reference`` is an optional ``(r0_m, wavelength_nm)`` pair quoted
    for the site; it takes precedence over seeing and over the profile.
    """

    name: str
    altitude_m: float
    hv_profile: HufnagelValleyProfile = field(default_factory=HufnagelValleyProfile)
    transmittance: TransmittanceTable | None = None
    seeing_arcsec: float | None = None
    turbulence_overrides: Mapping[float, float] = field(default_factory=dict)
    fried_reference: tuple[float, float] | None = None
    provenance: str = ""
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.altitude_m < 0:
            raise InputError(f"site altitude must be >= 0, got {self.altitude_m!r}")
        bad = {w: v for w, v in self.turbulence_overrides.items() if not 0.0 < v <= 1.0}
        if bad:
            raise InputError(f"turbulence overrides must lie in (0, 1], got {bad}")
        if self.seeing_arcsec is not None and not self.seeing_arcsec > 0:
            raise InputError("seeing must be positive")

    def turbulence_override(self, wavelength_nm: float) -> float | None:
        for w, v in self.turbulence_overrides.items():
            if math.isclose(float(w), wavelength_nm, rel_tol=0.0, abs_tol=1e-9):
                return v
        return None

    def fried_r0(self, wavelength_nm: float, zenith: float = 0.0) -> float:
        """r0 at ``wavelength_nm`` along a path at ``zenith``.

        Preference order: quoted reference value, seeing, profile integral.
        The first two are zenith values scaled by ``cos(zenith)^(3/5)``.
        """
        _check_zenith(zenith)
        slant = math.cos(zenith) ** (3.0 / 5.0)
        if self.fried_reference is not None:
            r0_ref, ref_nm = self.fried_reference
            return rescale_fried(r0_ref, ref_nm, wavelength_nm) * slant
        if self.seeing_arcsec is not None:
            return fried_from_seeing(self.seeing_arcsec, wavelength_nm) * slant
        return fried_parameter(self.hv_profile, wavelength_nm, zenith)


def load_transmittance_csv(path: str | Path) -> TransmittanceTable:
    """Read a ``wavelength_nm,transmittance`` CSV into a table."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [n.strip() for n in reader.fieldnames] != ["wavelength_nm", "transmittance"]:
            raise InputError(f"{path}: header must be 'wavelength_nm,transmittance'")
        rows = [(float(r["wavelength_nm"]), float(r["transmittance"])) for r in reader]
    return TransmittanceTable(tuple(rows))


def table_from_pairs(pairs: Sequence[Sequence[float]]) -> TransmittanceTable:
    return TransmittanceTable(tuple((float(w), float(t)) for w, t in pairs))
