"""Strict pydantic schemas for site and scenario TOML files.

Every key carries its unit as a suffix. Unknown keys are errors, so a typo
never silently falls back to a default.
"""
from __future__ import annotations

import difflib
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

__all__ = [
    "StrictModel",
    "TerminalSchema",
    "RecipeRowSchema",
    "DecoySchema",
    "EntangledSchema",
    "PassSchema",
    "ApertureSweepSchema",
    "ExpectedSchema",
    "ScenarioSchema",
    "SiteSchema",
    "SitesFileSchema",
    "DetectorDefaultsSchema",
    "format_validation_error",
]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True, frozen=True)


class TerminalSchema(StrictModel):
    aperture_d_m: float = Field(gt=0)
    half_divergence_urad: Optional[float] = Field(default=None, gt=0)
    optics_efficiency: Optional[float] = Field(default=None, gt=0, le=1)
    optics_loss_db: Optional[float] = Field(default=None, ge=0)
    secondary_radius_m: float = Field(default=0.0, ge=0)
    beam_radius_omega_m: Optional[float] = Field(default=None, gt=0)
    pointing_offset_urad: float = Field(default=0.0, ge=0)
    beam_waist_m: Optional[float] = Field(default=None, gt=0)
    note: str = ""

    @model_validator(mode="after")
    def _one_optics_spec(self):
        if self.optics_efficiency is not None and self.optics_loss_db is not None:
            raise ValueError("give optics_efficiency or optics_loss_db, not both")
        if self.secondary_radius_m >= 0.5 * self.aperture_d_m:
            raise ValueError("secondary_radius_m must be smaller than the primary radius")
        return self


RowKindName = Literal[
    "transmitter_gain",
    "tx_optics",
    "path_loss",
    "atmosphere",
    "horizontal_atmosphere",
    "turbulence",
    "beam_wander",
    "receiver_gain",
    "rx_optics",
    "pointing",
    "geometric_coupling",
    "fixed",
]


class RecipeRowSchema(StrictModel):
    kind: RowKindName
    label: Optional[str] = None
    value_db: Optional[float] = None
    provenance: Optional[str] = None

    @model_validator(mode="after")
    def _fixed_needs_value(self):
        if self.kind == "fixed" and self.value_db is None:
            raise ValueError("a fixed row needs value_db")
        if self.kind != "fixed" and self.value_db is not None:
            raise ValueError(f"row kind {self.kind!r} is computed; value_db is only allowed on fixed rows")
        return self


class DecoySchema(StrictModel):
    mean_photon_mu: float = Field(default=0.5, ge=0)
    decoy_nu: float = Field(default=0.1, ge=0)
    dark_count_y0: Optional[float] = Field(default=None, ge=0, le=1)
    detector_error_e_det: Optional[float] = Field(default=None, ge=0, le=1)
    detector_efficiency: float = Field(default=1.0, gt=0, le=1)
    basis_factor_q: float = Field(default=0.5, gt=0, le=1)
    ec_efficiency_f: float = Field(default=1.22, ge=1)
    source_rate_hz: float = Field(default=10e6, gt=0)
    signal_counts_n_mu: float = Field(default=1e6, gt=0)
    decoy_counts_n_nu: float = Field(default=1e6, gt=0)
    raw_key_n: float = Field(default=1e6, gt=0)
    security_eps: float = 1e-9
    eps_bar: float = 1e-10
    eps_bar_prime: float = 1e-11
    eps_ec: float = 1e-10
    single_photon_bound: Literal["asymptotic", "vacuum_weak"] = "asymptotic"
    finite_key: bool = False


class EntangledSchema(StrictModel):
    pair_rate_hz: float = Field(default=10e6, gt=0)
    qber: float = Field(ge=0, le=1)
    alice_efficiency: float = Field(default=0.25, gt=0, le=1)
    bob_efficiency: Optional[float] = Field(default=None, gt=0, le=1)
    ec_efficiency_f: float = Field(default=1.22, ge=1)
    provenance: str = ""


class PassSchema(StrictModel):
    earth_radius_m: float = Field(default=6.4e6, gt=0)
    orbit_radius_m: float = Field(default=6.9e6, gt=0)
    visibility_window_s: float = Field(default=480.0, gt=0)
    max_elevation_deg: float = Field(default=90.0, gt=0, le=90)
    angular_speed_rad_s: float = Field(default=0.00105, gt=0)
    carrier_frequency_thz: float = Field(default=380.0, gt=0)
    n_samples: int = Field(default=481, ge=2)


class ApertureSweepSchema(StrictModel):
    r0_m: float = Field(gt=0)
    vertical_distance_m: Optional[float] = Field(default=None, gt=0)
    theta_b_half_urad: Optional[float] = Field(default=None, gt=0)
    diameters_m: list[float] = Field(min_length=1)
    provenance: str = ""


class ExpectedSchema(StrictModel):
    end_to_end_loss_db: Optional[float] = None
    tolerance_db: Optional[float] = Field(default=None, gt=0)
    atmospheric_loss_band_db: Optional[list[float]] = Field(default=None, min_length=2, max_length=2)
    fried_rescale_m: Optional[float] = Field(default=None, gt=0)
    fried_rescale_tolerance_m: Optional[float] = Field(default=None, gt=0)
    provenance: str = ""


class ScenarioSchema(StrictModel):
    name: str
    description: str = ""
    site: str
    direction: Literal["uplink", "downlink", "horizontal"]
    wavelength_nm: float = Field(gt=0)
    range_m: float = Field(gt=0)
    zenith_deg: float = Field(default=0.0, ge=0, lt=90)
    tx_power_w: float = Field(default=1.0, gt=0)
    receiver_gain_mode: Literal["plain", "obscured"] = "plain"
    extinction_per_m: Optional[float] = Field(default=None, ge=0)
    output_format: Literal["table", "csv", "json"] = "table"
    transmitter: TerminalSchema
    receiver: TerminalSchema
    recipe: list[RecipeRowSchema] = Field(min_length=1)
    decoy: Optional[DecoySchema] = None
    entangled: Optional[EntangledSchema] = None
    orbit_pass: Optional[PassSchema] = Field(default=None, alias="pass")
    aperture_sweep: Optional[ApertureSweepSchema] = None
    expected: Optional[ExpectedSchema] = None

    model_config = ConfigDict(extra="forbid", strict=True, frozen=True, populate_by_name=True)


class SiteSchema(StrictModel):
    name: str
    altitude_m: float = Field(ge=0)
    provenance: str = Field(min_length=1)
    hv_ground_a0_m23: float = Field(default=1.7e-14, ge=0)
    hv_wind_rms_m_s: float = Field(default=21.0, ge=0)
    seeing_arcsec: Optional[float] = Field(default=None, gt=0)
    fried_reference_r0_m: Optional[float] = Field(default=None, gt=0)
    fried_reference_wavelength_nm: Optional[float] = Field(default=None, gt=0)
    # Parallel arrays keep the TOML readable: one wavelength per transmittance.
    transmittance_wavelength_nm: list[float] = Field(default_factory=list)
    transmittance_zenith: list[float] = Field(default_factory=list)
    turbulence_override_wavelength_nm: list[float] = Field(default_factory=list)
    turbulence_override_eta: list[float] = Field(default_factory=list)
    metadata: dict[str, str | float | int | bool] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _paired(self):
        if len(self.transmittance_wavelength_nm) != len(self.transmittance_zenith):
            raise ValueError("transmittance_wavelength_nm and transmittance_zenith must have equal length")
        if len(self.turbulence_override_wavelength_nm) != len(self.turbulence_override_eta):
            raise ValueError("turbulence override arrays must have equal length")
        if (self.fried_reference_r0_m is None) != (self.fried_reference_wavelength_nm is None):
            raise ValueError("fried_reference_r0_m and fried_reference_wavelength_nm go together")
        return self


class SitesFileSchema(StrictModel):
    sites: dict[str, SiteSchema]


class DetectorDefaultsSchema(StrictModel):
    mean_photon_mu: float
    detector_efficiency: float
    dark_count_y0: float
    detector_error_e_det: float
    fit_loss_db: list[float]
    fit_qber: list[float]
    fit_residuals: list[float]
    entangled_alice_efficiency: float
    entangled_bob_efficiency: float
    entangled_fit_key_bps: list[float]
    entangled_fit_qber: list[float]
    entangled_fit_relative_residuals: list[float]
    provenance: str


def _model_at(model: type[BaseModel] | None, loc: tuple) -> type[BaseModel] | None:
    """Walk ``loc`` through nested schema classes; ``None`` when it leaves them."""
    for part in loc:
        if model is None:
            return None
        if isinstance(part, int):
            continue
        field = model.model_fields.get(part)
        if field is None:
            field = next((f for f in model.model_fields.values() if f.alias == part), None)
        if field is None:
            return None
        model = _inner_model(field.annotation)
    return model


def _inner_model(annotation) -> type[BaseModel] | None:
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    for arg in getattr(annotation, "__args__", ()) or ():
        found = _inner_model(arg)
        if found is not None:
            return found
    return None


def _names(model: type[BaseModel]) -> list[str]:
    return [f.alias or name for name, f in model.model_fields.items()]


def format_validation_error(exc: ValidationError, root: type[BaseModel]) -> list[str]:
    """One readable line per violation, with close-match hints for unknown keys."""
    issues = []
    for err in exc.errors():
        loc = tuple(err["loc"])
        where = ".".join(str(p) for p in loc) or "<root>"
        if err["type"] == "extra_forbidden":
            parent = _model_at(root, loc[:-1])
            hint = ""
            if parent is not None:
                close = difflib.get_close_matches(str(loc[-1]), _names(parent), n=1, cutoff=0.6)
                if close:
                    hint = f" (did you mean {close[0]!r}?)"
            issues.append(f"{where}: unknown key{hint}")
        elif err["type"] == "missing":
            issues.append(f"{where}: required key is missing")
        else:
            issues.append(f"{where}: {err['msg']}")
    return issues
