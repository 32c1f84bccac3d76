"""Gains, losses and the assembled dB ledger of an optical link.

A :class:`LinkScenario` carries an ordered *recipe*: the list of row kinds
that make up its budget. Each kind maps to a linear factor, so the mean
received power and the dB ledger are two views of the same product.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Mapping, Sequence

import numpy as np

from .atmosphere import (
    ExtinctionSpec,
    SiteProfile,
    horizontal_transmittance,
    slant_transmittance,
    zenith_transmittance,
)
from .errors import InputError
from .numerics import bessel_j1, to_db
from .turbulence import (
    BeamGeometry,
    beam_spread_factor,
    beam_wander_angle,
    effective_waist,
    horizontal_profile_from_site,
    sample_beta_fading,
    sample_lognormal,
    turbulence_transmittance,
    vacuum_beam_radius,
)

__all__ = [
    "Direction",
    "GainMode",
    "RowKind",
    "RecipeRow",
    "OpticalTerminal",
    "LinkScenario",
    "LedgerRow",
    "LossLedger",
    "ReceivedPowerSample",
    "ReceivedPowerSamples",
    "transmitter_gain_db",
    "obscuration_efficiency",
    "receiver_gain_db",
    "free_space_path_loss_db",
    "pointing_efficiency",
    "pointing_loss_db",
    "row_factor",
    "assemble_ledger",
    "received_power_mean",
    "sample_received_power",
    "with_zenith",
]


class Direction(str, Enum):
    UPLINK = "uplink"
    DOWNLINK = "downlink"
    HORIZONTAL = "horizontal"


class GainMode(str, Enum):
    PLAIN = "plain"
    OBSCURED = "obscured"


class RowKind(str, Enum):
    TRANSMITTER_GAIN = "transmitter_gain"
    TX_OPTICS = "tx_optics"
    PATH_LOSS = "path_loss"
    ATMOSPHERE = "atmosphere"
    HORIZONTAL_ATMOSPHERE = "horizontal_atmosphere"
    TURBULENCE = "turbulence"
    BEAM_WANDER = "beam_wander"
    RECEIVER_GAIN = "receiver_gain"
    RX_OPTICS = "rx_optics"
    POINTING = "pointing"
    GEOMETRIC_COUPLING = "geometric_coupling"
    FIXED = "fixed"


_DEFAULT_LABELS = {
    RowKind.TRANSMITTER_GAIN: "Tx gain (Gt)",
    RowKind.TX_OPTICS: "Tx optics loss (eta_t)",
    RowKind.PATH_LOSS: "Path loss (Lr)",
    RowKind.ATMOSPHERE: "Atmospheric attenuation (eta_atm)",
    RowKind.HORIZONTAL_ATMOSPHERE: "Atmospheric extinction (Beer-Lambert)",
    RowKind.TURBULENCE: "Turbulence (eta_tur)",
    RowKind.BEAM_WANDER: "Beam wander loss (L_BW)",
    RowKind.RECEIVER_GAIN: "RX gain (Gr)",
    RowKind.RX_OPTICS: "RX optics loss (eta_r)",
    RowKind.POINTING: "RX pointing loss",
    RowKind.GEOMETRIC_COUPLING: "Beam spreading and aperture coupling",
    RowKind.FIXED: "Fixed contribution",
}

_DEFAULT_PROVENANCE = {
    RowKind.TRANSMITTER_GAIN: "Gt = 8 / theta_B^2, theta_B = transmitter half divergence",
    RowKind.TX_OPTICS: "transmitter optics efficiency",
    RowKind.PATH_LOSS: "Lr = (lambda / (4 pi L))^2",
    RowKind.ATMOSPHERE: "site zenith transmittance raised to sec(zenith)",
    RowKind.HORIZONTAL_ATMOSPHERE: "exp(-beta_ext L)",
    RowKind.TURBULENCE: "site turbulence transmittance, else Strehl ratio of D/r0",
    RowKind.BEAM_WANDER: "Gaussian far field offset by the rms wander angle",
    RowKind.RECEIVER_GAIN: "Gr = 4 pi A / lambda^2",
    RowKind.RX_OPTICS: "receiver optics efficiency",
    RowKind.POINTING: "lp = 4 [J1(p)/p]^2, p = pi D theta / lambda",
    RowKind.GEOMETRIC_COUPLING: "1 - exp(-2 a^2 / We^2) with turbulent effective waist We",
    RowKind.FIXED: "fixed value supplied by the scenario",
}


@dataclass(frozen=True)
class RecipeRow:
    kind: RowKind
    label: str | None = None
    value_db: float | None = None
    provenance: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", RowKind(self.kind))
        if self.kind is RowKind.FIXED and self.value_db is None:
            raise InputError("a fixed recipe row needs value_db")
        if self.kind is not RowKind.FIXED and self.value_db is not None:
            raise InputError(f"recipe row {self.kind.value!r} is computed; value_db is only allowed on fixed rows")

    @property
    def display_label(self) -> str:
        return self.label or _DEFAULT_LABELS[self.kind]

    @property
    def display_provenance(self) -> str:
        return self.provenance or _DEFAULT_PROVENANCE[self.kind]


@dataclass(frozen=True)
class OpticalTerminal:
    """Telescope at one end of the link.

    ``secondary_radius_b`` and ``beam_radius_omega`` only feed the obscured
    gain. ``launch_waist`` defaults to ``lambda / (pi theta_B)`` when a
    half divergence is given, otherwise to the aperture radius.
    """

    aperture_d: float
    half_divergence: float | None = None
    optics_efficiency: float = 1.0
    secondary_radius_b: float = 0.0
    beam_radius_omega: float | None = None
    pointing_offset: float = 0.0
    beam_waist: float | None = None

    def __post_init__(self):
        if not self.aperture_d > 0:
            raise InputError(f"aperture diameter must be positive, got {self.aperture_d!r}")
        if not 0.0 <= self.secondary_radius_b < self.primary_radius_r:
            raise InputError("secondary radius must satisfy 0 <= b < R")
        if not 0.0 < self.optics_efficiency <= 1.0:
            raise InputError(f"optics efficiency must lie in (0, 1], got {self.optics_efficiency!r}")
        if self.half_divergence is not None and not self.half_divergence > 0:
            raise InputError("half divergence must be positive")
        if self.pointing_offset < 0:
            raise InputError("pointing offset must be non-negative")

    @property
    def primary_radius_r(self) -> float:
        return 0.5 * self.aperture_d

    @property
    def gamma(self) -> float:
        return self.secondary_radius_b / self.primary_radius_r

    @property
    def alpha(self) -> float:
        if self.beam_radius_omega is None:
            raise InputError("obscured gain needs beam_radius_omega on the terminal")
        return self.primary_radius_r / self.beam_radius_omega

    def launch_waist(self, wavelength_nm: float) -> float:
        if self.beam_waist is not None:
            return self.beam_waist
        if self.half_divergence is not None:
            return wavelength_nm * 1e-9 / (math.pi * self.half_divergence)
        return self.primary_radius_r


@dataclass(frozen=True)
class LinkScenario:
    name: str
    transmitter: OpticalTerminal
    receiver: OpticalTerminal
    wavelength_nm: float
    range_m: float
    zenith: float
    direction: Direction
    site: SiteProfile
    recipe: tuple[RecipeRow, ...]
    tx_power_w: float = 1.0
    receiver_gain_mode: GainMode = GainMode.PLAIN
    extinction_per_m: float | None = None
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        object.__setattr__(self, "receiver_gain_mode", GainMode(self.receiver_gain_mode))
        object.__setattr__(self, "recipe", tuple(self.recipe))
        if not self.range_m > 0:
            raise InputError(f"range must be positive, got {self.range_m!r}")
        if not self.wavelength_nm > 0:
            raise InputError("wavelength must be positive")
        if not self.recipe:
            raise InputError("recipe must not be empty")
        if not 0.0 <= self.zenith < 0.5 * math.pi:
            raise InputError("zenith must lie in [0, 90) degrees")
        if not self.tx_power_w > 0:
            raise InputError("transmit power must be positive")
        kinds = [r.kind for r in self.recipe if r.kind is not RowKind.FIXED]
        dupes = sorted({k.value for k in kinds if kinds.count(k) > 1})
        if dupes:
            raise InputError(f"recipe repeats computed rows: {', '.join(dupes)}")

    @property
    def wavelength_m(self) -> float:
        return self.wavelength_nm * 1e-9

    @property
    def ground_terminal(self) -> OpticalTerminal:
        return self.receiver if self.direction is Direction.DOWNLINK else self.transmitter


@dataclass(frozen=True)
class LedgerRow:
    label: str
    value_db: float
    provenance: str


@dataclass(frozen=True)
class LossLedger:
    """Signed dB rows (gains positive) and the total loss, ``-sum(rows)``."""

    rows: tuple[LedgerRow, ...]
    total_loss_db: float

    @classmethod
    def from_rows(cls, rows: Sequence[LedgerRow]) -> "LossLedger":
        rows = tuple(rows)
        return cls(rows, cls.sum_rows(rows))

    @staticmethod
    def sum_rows(rows: Sequence[LedgerRow]) -> float:
        return -math.fsum(r.value_db for r in rows)

    @property
    def gains_db(self) -> float:
        return math.fsum(r.value_db for r in self.rows if r.value_db > 0)

    @property
    def losses_db(self) -> float:
        return -math.fsum(r.value_db for r in self.rows if r.value_db < 0)


# --- closed forms ---------------------------------------------------------


def transmitter_gain_db(theta_b_half: float) -> float:
    """Gaussian transmitter gain ``8 / theta_B^2`` in dB."""
    if not theta_b_half > 0:
        raise InputError(f"half divergence must be positive, got {theta_b_half!r}")
    return to_db(8.0 / theta_b_half**2)


def obscuration_efficiency(alpha: float, gamma: float) -> float:
    """Fraction of a truncated Gaussian passed by a centrally obscured aperture."""
    if not alpha > 0:
        raise InputError(f"alpha must be positive, got {alpha!r}")
    if not 0.0 <= gamma < 1.0:
        raise InputError(f"gamma must lie in [0, 1), got {gamma!r}")
    a2 = alpha * alpha
    return 2.0 / a2 * (math.exp(-a2) - math.exp(-a2 * gamma * gamma)) ** 2


def _receiver_gain_linear(aperture_d: float, wavelength_nm: float, mode: GainMode | str, alpha=None, gamma=None) -> float:
    if not (aperture_d > 0 and wavelength_nm > 0):
        raise InputError("receiver gain needs positive aperture and wavelength")
    lam = wavelength_nm * 1e-9
    area = math.pi * aperture_d**2 / 4.0
    plain = 4.0 * math.pi * area / lam**2
    if GainMode(mode) is GainMode.PLAIN:
        return plain
    if alpha is None or gamma is None:
        raise InputError("obscured receiver gain needs alpha and gamma")
    return plain * obscuration_efficiency(alpha, gamma)


def receiver_gain_db(
    aperture_d: float,
    wavelength_nm: float,
    mode: GainMode | str = GainMode.PLAIN,
    alpha: float | None = None,
    gamma: float | None = None,
) -> float:
    return to_db(_receiver_gain_linear(aperture_d, wavelength_nm, mode, alpha, gamma))


def free_space_path_loss_db(wavelength_nm: float, range_l: float) -> float:
    if not (wavelength_nm > 0 and range_l > 0):
        raise InputError("path loss needs positive wavelength and range")
    return to_db((wavelength_nm * 1e-9 / (4.0 * math.pi * range_l)) ** 2)


def pointing_efficiency(offset_theta: float, aperture_d: float, wavelength_nm: float) -> float:
    """Airy-pattern pointing factor ``4 [J1(p)/p]^2``."""
    if offset_theta < 0 or not (aperture_d > 0 and wavelength_nm > 0):
        raise InputError("pointing loss needs offset >= 0 and positive aperture, wavelength")
    p = math.pi * aperture_d / (wavelength_nm * 1e-9) * offset_theta
    if p < 1e-6:
        # series of (2 J1(p)/p)^2; avoids the subnormal quotient
        return 1.0 - 0.25 * p * p * (1.0 - 5.0 * p * p / 48.0)
    return 4.0 * (bessel_j1(p) / p) ** 2


def pointing_loss_db(offset_theta: float, aperture_d: float, wavelength_nm: float) -> float:
    return to_db(pointing_efficiency(offset_theta, aperture_d, wavelength_nm))


# --- recipe evaluation ----------------------------------------------------


def _site_zenith_transmittance(sc: LinkScenario) -> float:
    table = sc.site.transmittance
    if table is None:
        raise InputError(f"site {sc.site.name!r} has no transmittance table")
    try:
        return zenith_transmittance(table, sc.wavelength_nm)
    except InputError as exc:
        raise InputError(f"site {sc.site.name!r}: no transmittance for {sc.wavelength_nm:g} nm ({exc})") from None


def _beam_geometry(sc: LinkScenario, waist: float) -> BeamGeometry:
    return BeamGeometry(
        waist_w0=waist,
        wavelength_nm=sc.wavelength_nm,
        range_l=sc.range_m,
        zenith=0.0 if sc.direction is Direction.HORIZONTAL else sc.zenith,
        site_altitude_h0=sc.site.altitude_m,
        horizontal=sc.direction is Direction.HORIZONTAL,
    )


def _wander_factor(sc: LinkScenario) -> float:
    tx = sc.transmitter
    if tx.half_divergence is None:
        raise InputError("beam wander row needs the transmitter half divergence")
    geom = _beam_geometry(sc, 0.5 * tx.aperture_d)
    r0 = sc.site.fried_r0(sc.wavelength_nm, geom.zenith)
    theta_bw = beam_wander_angle(geom, r0)
    return math.exp(-2.0 * (theta_bw / tx.half_divergence) ** 2)


def _coupling_factor(sc: LinkScenario) -> float:
    geom = _beam_geometry(sc, sc.transmitter.launch_waist(sc.wavelength_nm))
    if geom.horizontal:
        profile = horizontal_profile_from_site(sc.site, sc.wavelength_nm, sc.range_m)
    else:
        profile = sc.site.hv_profile
    we = effective_waist(vacuum_beam_radius(geom), beam_spread_factor(geom, profile))
    a = sc.receiver.primary_radius_r
    return -math.expm1(-2.0 * a * a / (we * we))


def row_factor(row: RecipeRow, sc: LinkScenario) -> float:
    """Linear power factor contributed by one recipe row."""
    kind = row.kind
    tx, rx = sc.transmitter, sc.receiver
    if kind is RowKind.TRANSMITTER_GAIN:
        if tx.half_divergence is None:
            raise InputError("transmitter gain needs the transmitter half divergence")
        return 8.0 / tx.half_divergence**2
    if kind is RowKind.TX_OPTICS:
        return tx.optics_efficiency
    if kind is RowKind.PATH_LOSS:
        return (sc.wavelength_m / (4.0 * math.pi * sc.range_m)) ** 2
    if kind is RowKind.ATMOSPHERE:
        return slant_transmittance(_site_zenith_transmittance(sc), sc.zenith)
    if kind is RowKind.HORIZONTAL_ATMOSPHERE:
        if sc.extinction_per_m is None:
            raise InputError("horizontal_atmosphere row needs extinction_per_m")
        return horizontal_transmittance(ExtinctionSpec(sc.extinction_per_m, sc.range_m))
    if kind is RowKind.TURBULENCE:
        return turbulence_transmittance(sc.site, sc.wavelength_nm, sc.ground_terminal.aperture_d, sc.zenith)
    if kind is RowKind.BEAM_WANDER:
        return _wander_factor(sc)
    if kind is RowKind.RECEIVER_GAIN:
        if sc.receiver_gain_mode is GainMode.OBSCURED:
            return _receiver_gain_linear(rx.aperture_d, sc.wavelength_nm, GainMode.OBSCURED, rx.alpha, rx.gamma)
        return _receiver_gain_linear(rx.aperture_d, sc.wavelength_nm, GainMode.PLAIN)
    if kind is RowKind.RX_OPTICS:
        return rx.optics_efficiency
    if kind is RowKind.POINTING:
        return pointing_efficiency(rx.pointing_offset, rx.aperture_d, sc.wavelength_nm)
    if kind is RowKind.GEOMETRIC_COUPLING:
        return _coupling_factor(sc)
    if kind is RowKind.FIXED:
        return 10.0 ** (row.value_db / 10.0)
    raise InputError(f"unknown recipe row kind {kind!r}")  # pragma: no cover


def assemble_ledger(sc: LinkScenario) -> LossLedger:
    """Evaluate every recipe row in order."""
    rows = []
    for row in sc.recipe:
        value = row.value_db if row.kind is RowKind.FIXED else to_db(row_factor(row, sc))
        rows.append(LedgerRow(row.display_label, value, row.display_provenance))
    return LossLedger.from_rows(rows)


def received_power_mean(sc: LinkScenario) -> float:
    """Mean received power in watts without fading: ``Pt`` times every row factor."""
    return sc.tx_power_w * math.prod(row_factor(r, sc) for r in sc.recipe)


def with_zenith(sc: LinkScenario, zenith: float) -> LinkScenario:
    """The same link seen at another zenith angle.

    The slant range scales as ``sec(zenith)`` about the vertical distance of
    ``sc``; flat-earth geometry.
    """
    if sc.direction is Direction.HORIZONTAL:
        raise InputError("zenith changes are undefined for a horizontal link")
    if not 0.0 <= zenith < 0.5 * math.pi:
        raise InputError(f"zenith must lie in [0, 90) degrees, got {math.degrees(zenith):.6g}")
    vertical = sc.range_m * math.cos(sc.zenith)
    return dataclasses.replace(sc, zenith=zenith, range_m=vertical / math.cos(zenith))


# --- fading ----------------------------------------------------------------


@dataclass(frozen=True)
class ReceivedPowerSample:
    p0: float
    fading_i: float
    fading_s: float
    pr: float


@dataclass(frozen=True)
class ReceivedPowerSamples:
    """Vectorised draws of ``Pr = P0 I S``."""

    p0: float
    fading_i: np.ndarray
    fading_s: np.ndarray

    @property
    def pr(self) -> np.ndarray:
        return self.p0 * self.fading_i * self.fading_s

    def __len__(self) -> int:
        return len(self.fading_i)

    def __iter__(self) -> Iterator[ReceivedPowerSample]:
        for i, s in zip(self.fading_i.tolist(), self.fading_s.tolist()):
            yield ReceivedPowerSample(self.p0, i, s, self.p0 * i * s)


def sample_received_power(
    sc: LinkScenario,
    beta: float,
    sigma_l2: float,
    n: int,
    seed: int | np.random.Generator | None = None,
) -> ReceivedPowerSamples:
    """Draw ``n`` received-power samples with beta pointing fade and log-normal scintillation."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p0 = received_power_mean(sc)
    fading_i = sample_beta_fading(beta, n, rng)
    fading_s = sample_lognormal(sigma_l2, n, rng)
    return ReceivedPowerSamples(p0, fading_i, fading_s)
