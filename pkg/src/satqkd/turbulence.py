"""Turbulence-induced beam statistics for slant and horizontal optical paths.

Covers long-term beam spreading, pointing jitter and its beta-distributed
fading, log-normal scintillation, the Strehl ratio, and beam wander.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .atmosphere import (
    DEFAULT_H_TOP,
    Cn2Profile,
    SiteProfile,
    UniformCn2Profile,
    Weight,
    cn2_moment,
    uniform_cn2_from_fried,
    wavenumber,
)
from .errors import InputError
from .numerics import to_db

__all__ = [
    "BeamGeometry",
    "JitterVariant",
    "TurbulenceDiagnostics",
    "vacuum_beam_radius",
    "beam_spread_factor",
    "effective_waist",
    "mean_onaxis_intensity",
    "jitter_variance",
    "beta_parameter",
    "mean_fading",
    "rytov_log_variance",
    "scintillation_index",
    "strehl_ratio",
    "strehl_loss_db",
    "d_over_r0_from_transmittance",
    "beam_wander_rms",
    "beam_wander_angle",
    "beam_wander_loss_db",
    "turbulence_transmittance",
    "turbulence_loss_db",
    "sample_beta_fading",
    "sample_lognormal",
    "diagnose",
    "horizontal_profile_from_site",
]


@dataclass(frozen=True)
class BeamGeometry:
    """Gaussian beam launched with waist ``waist_w0`` (m, 1/e^2 radius).

    ``range_l`` is the slant distance in metres. A ``horizontal`` geometry
    ignores the zenith angle and integrates a profile along the path instead
    of in altitude.
    """

    waist_w0: float
    wavelength_nm: float
    range_l: float
    zenith: float = 0.0
    site_altitude_h0: float = 0.0
    horizontal: bool = False

    def __post_init__(self):
        if not (self.waist_w0 > 0 and self.wavelength_nm > 0 and self.range_l >= 0):
            raise InputError("beam waist and wavelength must be positive, range non-negative")
        if not 0.0 <= self.zenith < 0.5 * math.pi:
            raise InputError(f"zenith must lie in [0, 90) degrees, got {math.degrees(self.zenith):.6g}")
        if self.site_altitude_h0 < 0:
            raise InputError("site altitude must be non-negative")

    @property
    def k(self) -> float:
        return wavenumber(self.wavelength_nm)

    @property
    def wavelength_m(self) -> float:
        return self.wavelength_nm * 1e-9

    @property
    def sec(self) -> float:
        return 1.0 if self.horizontal else 1.0 / math.cos(self.zenith)

    @property
    def theta_b_half(self) -> float:
        """Far-field half divergence ``lambda / (pi W0)``."""
        return self.wavelength_m / (math.pi * self.waist_w0)

    def chi(self) -> float:
        """Diffraction parameter ``2L / (k W^2)`` at the receiver."""
        w = vacuum_beam_radius(self)
        return 2.0 * self.range_l / (self.k * w * w)


class JitterVariant(str, Enum):
    MAIN_TEXT = "main_text"
    APPENDIX = "appendix"


_JITTER_COEFF = {JitterVariant.MAIN_TEXT: 0.182, JitterVariant.APPENDIX: 0.36}


def vacuum_beam_radius(geom: BeamGeometry) -> float:
    """Diffraction-only beam radius ``W0 sqrt(1 + (2L / (k W0^2))^2)``."""
    z = 2.0 * geom.range_l / (geom.k * geom.waist_w0**2)
    return geom.waist_w0 * math.sqrt(1.0 + z * z)


def _path_moment(geom: BeamGeometry, profile: Cn2Profile, weight: Weight, h_top: float | None) -> float:
    if geom.horizontal:
        # Path coordinate replaces altitude; the whole path is integrated.
        return cn2_moment(profile, 0.0, geom.range_l, weight, path_length=geom.range_l)
    top = DEFAULT_H_TOP if h_top is None else h_top
    top = min(top, geom.range_l) if geom.range_l > 0 else top
    return cn2_moment(profile, 0.0, top, weight, path_length=geom.range_l)


def beam_spread_factor(geom: BeamGeometry, profile: Cn2Profile, h_top: float | None = None) -> float:
    """Turbulent spreading term ``T`` so that ``We^2 = W^2 (1 + T)``."""
    if geom.range_l == 0:
        return 0.0
    integral = _path_moment(geom, profile, Weight.UPLINK_PATH, h_top)
    prefactor = 4.35 * geom.chi() ** (5.0 / 6.0) * geom.k ** (7.0 / 6.0) * geom.range_l ** (5.0 / 6.0)
    return prefactor * geom.sec ** (11.0 / 6.0) * integral


def effective_waist(w: float, t: float) -> float:
    if not w > 0 or t < 0:
        raise InputError("need W > 0 and T >= 0")
    return w * math.sqrt(1.0 + t)


def mean_onaxis_intensity(geom: BeamGeometry, we: float, r: float = 0.0) -> float:
    """Mean intensity relative to the on-axis vacuum value, ``(W/We)^2 exp(-2 r^2/We^2)``."""
    w = vacuum_beam_radius(geom)
    if we < w * (1.0 - 1e-12):
        raise InputError(f"effective waist {we!r} smaller than vacuum radius {w!r}")
    return (w / we) ** 2 * math.exp(-2.0 * r * r / (we * we))


def jitter_variance(
    d_over_r0: float,
    wavelength_nm: float,
    aperture_d: float,
    variant: JitterVariant | str = JitterVariant.MAIN_TEXT,
) -> float:
    """Single-axis angle-of-arrival variance in rad^2."""
    if not (d_over_r0 > 0 and wavelength_nm > 0 and aperture_d > 0):
        raise InputError("jitter variance needs positive D/r0, wavelength and aperture")
    c = _JITTER_COEFF[JitterVariant(variant)]
    return c * d_over_r0 ** (5.0 / 3.0) * (wavelength_nm * 1e-9 / aperture_d) ** 2


def beta_parameter(theta_b_half: float, sigma_j2: float) -> float:
    if not (theta_b_half > 0 and sigma_j2 > 0):
        raise InputError("beta needs positive divergence and jitter variance")
    return theta_b_half**2 / (4.0 * sigma_j2)


def mean_fading(beta: float) -> float:
    """Mean of the pointing fading factor, ``beta / (beta + 1)``."""
    if math.isinf(beta):
        return 1.0
    return beta / (beta + 1.0)


def rytov_log_variance(geom: BeamGeometry, profile: Cn2Profile, h_top: float | None = None) -> float:
    """Log-intensity variance of the received signal."""
    integral = _path_moment(geom, profile, Weight.H56, h_top)
    return 2.24 * geom.k ** (7.0 / 6.0) * geom.sec ** (11.0 / 6.0) * integral


def scintillation_index(sigma_l2: float) -> float:
    return math.expm1(sigma_l2)


def strehl_ratio(d_over_r0: float) -> float:
    """Long-exposure Strehl ratio ``[1 + (D/r0)^(5/3)]^(-6/5)``."""
    if d_over_r0 < 0:
        raise InputError(f"D/r0 must be non-negative, got {d_over_r0!r}")
    return (1.0 + d_over_r0 ** (5.0 / 3.0)) ** (-6.0 / 5.0)


def strehl_loss_db(d_over_r0: float) -> float:
    """Positive dB loss of :func:`strehl_ratio`."""
    return 12.0 * math.log10(1.0 + d_over_r0 ** (5.0 / 3.0))


def d_over_r0_from_transmittance(eta: float) -> float:
    """Invert the Strehl law: the D/r0 whose Strehl ratio equals ``eta``."""
    if not 0.0 < eta <= 1.0:
        raise InputError(f"transmittance must lie in (0, 1], got {eta!r}")
    return (eta ** (-5.0 / 6.0) - 1.0) ** (3.0 / 5.0)


def beam_wander_rms(geom: BeamGeometry, r0: float) -> float:
    """RMS centroid displacement at the receiver, metres.

    ``Z`` in the wander law is the vertical distance to the target, so
    ``Z sec(zeta)`` equals the slant range of ``geom``.
    """
    if not r0 > 0:
        raise InputError(f"r0 must be positive, got {r0!r}")
    if math.isinf(r0):
        return 0.0
    w0 = geom.waist_w0
    z_vertical = geom.range_l * math.cos(geom.zenith) if not geom.horizontal else geom.range_l
    return 0.73 * z_vertical * geom.sec * (geom.wavelength_m / (2 * w0)) * (2 * w0 / r0) ** (5.0 / 6.0)


def beam_wander_angle(geom: BeamGeometry, r0: float) -> float:
    if geom.range_l == 0:
        return 0.0
    return beam_wander_rms(geom, r0) / geom.range_l


def beam_wander_loss_db(theta_bw: float, theta_b_half: float) -> float:
    """Mean loss of a far-field Gaussian displaced by ``theta_bw``.

    Loss is ``-10 log10 exp(-2 theta_bw^2 / theta_b^2)``, positive dB.
    """
    if theta_bw < 0 or not theta_b_half > 0:
        raise InputError("wander angle must be >= 0 and divergence > 0")
    return 20.0 / math.log(10.0) * (theta_bw / theta_b_half) ** 2


def turbulence_transmittance(site: SiteProfile, wavelength_nm: float, aperture_d: float, zenith: float = 0.0) -> float:
    """Turbulence transmittance for ``aperture_d`` looking through ``site``.

    A site override at this wavelength is a zenith value; off zenith it is
    converted to an equivalent D/r0 and scaled by ``sec(zenith)^(3/5)``.
    Without an override the Strehl ratio of ``aperture_d / r0`` is used.
    """
    override = site.turbulence_override(wavelength_nm)
    if override is not None:
        if zenith == 0.0:
            return override
        ratio = d_over_r0_from_transmittance(override) / math.cos(zenith) ** (3.0 / 5.0)
        return strehl_ratio(ratio)
    r0 = site.fried_r0(wavelength_nm, zenith)
    return strehl_ratio(aperture_d / r0)


def turbulence_loss_db(site: SiteProfile, wavelength_nm: float, aperture_d: float, zenith: float = 0.0) -> float:
    """Positive dB form of :func:`turbulence_transmittance`."""
    return -to_db(turbulence_transmittance(site, wavelength_nm, aperture_d, zenith))


def sample_beta_fading(beta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``I`` with density ``beta I^(beta-1)`` on [0, 1] by inversion."""
    if not beta > 0:
        raise InputError(f"beta must be positive, got {beta!r}")
    if math.isinf(beta):
        return np.ones(n)
    return rng.random(n) ** (1.0 / beta)


def sample_lognormal(sigma_l2: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-mean log-normal draws with log-variance ``sigma_l2``."""
    if sigma_l2 < 0:
        raise InputError(f"log variance must be >= 0, got {sigma_l2!r}")
    if sigma_l2 == 0:
        return np.ones(n)
    return rng.lognormal(mean=-0.5 * sigma_l2, sigma=math.sqrt(sigma_l2), size=n)


@dataclass(frozen=True)
class TurbulenceDiagnostics:
    spread_t: float
    vacuum_radius_w: float
    effective_waist_we: float
    rytov_log_variance_sigma_l2: float
    scintillation_index_sigma_s2: float
    jitter_variance_sigma_j2: float
    beta: float
    fried_r0: float
    d_over_r0: float
    wander_rms_rc: float
    wander_angle_theta_bw: float


def diagnose(
    geom: BeamGeometry,
    profile: Cn2Profile,
    r0: float,
    aperture_d: float,
    theta_b_half: float | None = None,
    jitter: JitterVariant | str = JitterVariant.MAIN_TEXT,
) -> TurbulenceDiagnostics:
    """Evaluate every turbulence statistic for one geometry."""
    t = beam_spread_factor(geom, profile)
    w = vacuum_beam_radius(geom)
    sigma_l2 = rytov_log_variance(geom, profile)
    ratio = aperture_d / r0
    sigma_j2 = jitter_variance(ratio, geom.wavelength_nm, aperture_d, jitter)
    theta = geom.theta_b_half if theta_b_half is None else theta_b_half
    return TurbulenceDiagnostics(
        spread_t=t,
        vacuum_radius_w=w,
        effective_waist_we=effective_waist(w, t),
        rytov_log_variance_sigma_l2=sigma_l2,
        scintillation_index_sigma_s2=scintillation_index(sigma_l2),
        jitter_variance_sigma_j2=sigma_j2,
        beta=beta_parameter(theta, sigma_j2),
        fried_r0=r0,
        d_over_r0=ratio,
        wander_rms_rc=beam_wander_rms(geom, r0),
        wander_angle_theta_bw=beam_wander_angle(geom, r0),
    )


def horizontal_profile_from_site(site: SiteProfile, wavelength_nm: float, path_length: float) -> UniformCn2Profile:
    """Uniform Cn^2 consistent with the site's r0 over a horizontal path."""
    r0 = site.fried_r0(wavelength_nm)
    return UniformCn2Profile(uniform_cn2_from_fried(r0, wavelength_nm, path_length))
