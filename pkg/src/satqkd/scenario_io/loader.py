"""Read site, detector and scenario TOML files into domain objects."""
from __future__ import annotations

import difflib
import math
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterator, Mapping

from pydantic import BaseModel, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from ..atmosphere import HufnagelValleyProfile, SiteProfile, TransmittanceTable
from ..errors import InputError, ScenarioError
from ..link_budget import Direction, GainMode, LinkScenario, OpticalTerminal, RecipeRow
from ..orbit_doppler import PassParameters
from ..qkd_rates import DecoyParams
from .schema import (
    DetectorDefaultsSchema,
    ExpectedSchema,
    ScenarioSchema,
    SitesFileSchema,
    TerminalSchema,
    format_validation_error,
)

__all__ = [
    "DATA_DIR",
    "SiteDatabase",
    "DetectorDefaults",
    "EntangledConfig",
    "ApertureSweepConfig",
    "ScenarioFile",
    "read_toml",
    "load_sites",
    "load_detector_defaults",
    "load_scenario",
    "shipped_scenarios",
    "shipped_scenario_path",
]

DATA_DIR = resources.files("satqkd.scenario_io") / "data"
URAD = 1e-6


def read_toml(source: str | Path | None = None, text: str | None = None) -> dict[str, Any]:
    """Parse TOML from a file or a string; syntax errors carry line and column."""
    label = str(source) if source is not None else "<string>"
    if text is None:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ScenarioError(label, ["file not found"]) from None
        except OSError as exc:
            raise ScenarioError(label, [f"cannot read file: {exc}"]) from None
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # tomli reports "... (at line L, column C)".
        raise ScenarioError(label, [f"TOML syntax error: {exc}"]) from None


def _validate(model: type[BaseModel], data: dict, label: str):
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(label, format_validation_error(exc, model)) from None


class SiteDatabase(Mapping[str, SiteProfile]):
    """Sites addressable by display name (``IAO-Hanle``) or table key (``iao_hanle``)."""

    def __init__(self, sites: Mapping[str, SiteProfile], keys: Mapping[str, str]):
        self._sites = dict(sites)
        self._keys = dict(keys)

    def __getitem__(self, name: str) -> SiteProfile:
        if name in self._sites:
            return self._sites[name]
        if name in self._keys:
            return self._sites[self._keys[name]]
        raise KeyError(name)

    def __iter__(self) -> Iterator[str]:
        return iter(self._sites)

    def __len__(self) -> int:
        return len(self._sites)

    def __contains__(self, name: object) -> bool:
        return name in self._sites or name in self._keys


def _site_from_schema(s) -> SiteProfile:
    table = None
    if s.transmittance_wavelength_nm:
        table = TransmittanceTable(tuple(zip(s.transmittance_wavelength_nm, s.transmittance_zenith)))
    ref = None
    if s.fried_reference_r0_m is not None:
        ref = (s.fried_reference_r0_m, s.fried_reference_wavelength_nm)
    return SiteProfile(
        name=s.name,
        altitude_m=s.altitude_m,
        hv_profile=HufnagelValleyProfile(s.hv_ground_a0_m23, s.hv_wind_rms_m_s),
        transmittance=table,
        seeing_arcsec=s.seeing_arcsec,
        turbulence_overrides=MappingProxyType(dict(zip(s.turbulence_override_wavelength_nm, s.turbulence_override_eta))),
        fried_reference=ref,
        provenance=s.provenance,
        metadata=MappingProxyType(dict(s.metadata)),
    )


def load_sites(path: str | Path | None = None) -> SiteDatabase:
    """Site database from ``path``, or the shipped one."""
    if path is None:
        return _shipped_sites()
    return _load_sites_file(Path(path))


def _load_sites_file(path) -> SiteDatabase:
    label = str(path)
    parsed = _validate(SitesFileSchema, read_toml(path), label)
    sites, keys, issues = {}, {}, []
    for key, s in parsed.sites.items():
        if s.name in sites:
            issues.append(f"sites.{key}.name: duplicate site name {s.name!r}")
            continue
        try:
            sites[s.name] = _site_from_schema(s)
        except InputError as exc:
            issues.append(f"sites.{key}: {exc}")
        keys[key] = s.name
    if issues:
        raise ScenarioError(label, issues)
    return SiteDatabase(sites, keys)


@lru_cache(maxsize=1)
def _shipped_sites() -> SiteDatabase:
    with resources.as_file(DATA_DIR / "sites.toml") as p:
        return _load_sites_file(p)


@dataclass(frozen=True)
class DetectorDefaults:
    """Stored fit of dark counts and detector error, plus the entangled efficiency fit."""

    mean_photon_mu: float
    detector_efficiency: float
    dark_count_y0: float
    detector_error_e_det: float
    fit_points: tuple[tuple[float, float], ...]
    fit_residuals: tuple[float, ...]
    entangled_alice_efficiency: float
    entangled_bob_efficiency: float
    entangled_fit_points: tuple[tuple[float, float, float], ...]
    entangled_fit_relative_residuals: tuple[float, ...]
    provenance: str


@lru_cache(maxsize=1)
def load_detector_defaults() -> DetectorDefaults:
    with resources.as_file(DATA_DIR / "detector_defaults.toml") as p:
        d = _validate(DetectorDefaultsSchema, read_toml(p), str(p))
    return DetectorDefaults(
        mean_photon_mu=d.mean_photon_mu,
        detector_efficiency=d.detector_efficiency,
        dark_count_y0=d.dark_count_y0,
        detector_error_e_det=d.detector_error_e_det,
        fit_points=tuple(zip(d.fit_loss_db, d.fit_qber)),
        fit_residuals=tuple(d.fit_residuals),
        entangled_alice_efficiency=d.entangled_alice_efficiency,
        entangled_bob_efficiency=d.entangled_bob_efficiency,
        entangled_fit_points=tuple(zip(d.fit_loss_db, d.entangled_fit_qber, d.entangled_fit_key_bps)),
        entangled_fit_relative_residuals=tuple(d.entangled_fit_relative_residuals),
        provenance=d.provenance,
    )


@dataclass(frozen=True)
class EntangledConfig:
    pair_rate: float
    qber: float
    alice_efficiency: float
    bob_efficiency: float
    ec_efficiency_f: float
    provenance: str = ""


@dataclass(frozen=True)
class ApertureSweepConfig:
    r0_m: float
    diameters_m: tuple[float, ...]
    theta_b_half: float | None
    vertical_distance_m: float | None
    provenance: str = ""


@dataclass(frozen=True)
class ScenarioFile:
    """A validated scenario: the link plus optional protocol, pass and sweep blocks."""

    name: str
    description: str
    link: LinkScenario
    output_format: str
    pass_params: PassParameters
    n_doppler_samples: int
    decoy: DecoyParams | None = None
    entangled: EntangledConfig | None = None
    aperture_sweep: ApertureSweepConfig | None = None
    expected: ExpectedSchema | None = None
    source: str = ""
    echo: Mapping[str, Any] = field(default_factory=dict)


def _terminal(t: TerminalSchema) -> OpticalTerminal:
    eff = 1.0
    if t.optics_efficiency is not None:
        eff = t.optics_efficiency
    elif t.optics_loss_db is not None:
        eff = 10.0 ** (-t.optics_loss_db / 10.0)
    return OpticalTerminal(
        aperture_d=t.aperture_d_m,
        half_divergence=None if t.half_divergence_urad is None else t.half_divergence_urad * URAD,
        optics_efficiency=eff,
        secondary_radius_b=t.secondary_radius_m,
        beam_radius_omega=t.beam_radius_omega_m,
        pointing_offset=t.pointing_offset_urad * URAD,
        beam_waist=t.beam_waist_m,
    )


def _decoy(d, defaults: DetectorDefaults) -> DecoyParams:
    return DecoyParams(
        dark_count_y0=defaults.dark_count_y0 if d.dark_count_y0 is None else d.dark_count_y0,
        detector_error_e_det=defaults.detector_error_e_det if d.detector_error_e_det is None else d.detector_error_e_det,
        mean_photon_mu=d.mean_photon_mu,
        decoy_nu=d.decoy_nu,
        detector_efficiency=d.detector_efficiency,
        basis_factor_q=d.basis_factor_q,
        ec_efficiency_f=d.ec_efficiency_f,
        source_rate=d.source_rate_hz,
        signal_counts_n_mu=d.signal_counts_n_mu,
        decoy_counts_n_nu=d.decoy_counts_n_nu,
        raw_key_n=d.raw_key_n,
        security_eps=d.security_eps,
        eps_bar=d.eps_bar,
        eps_bar_prime=d.eps_bar_prime,
        eps_ec=d.eps_ec,
        single_photon_bound=d.single_photon_bound,
        finite_key=d.finite_key,
    )


def shipped_scenarios() -> list[str]:
    return sorted(p.name[:-5] for p in (DATA_DIR / "scenarios").iterdir() if p.name.endswith(".toml"))


def shipped_scenario_path(name: str) -> Path:
    p = DATA_DIR / "scenarios" / f"{name}.toml"
    if not p.is_file():
        raise InputError(f"no shipped scenario {name!r}; available: {', '.join(shipped_scenarios())}")
    return Path(str(p))


def _resolve(path_or_name: str | Path) -> Path:
    p = Path(path_or_name)
    if p.exists():
        return p
    name = str(path_or_name)
    if p.suffix == "" and name in shipped_scenarios():
        return shipped_scenario_path(name)
    return p


def load_scenario(
    path_or_name: str | Path,
    sites: SiteDatabase | None = None,
    text: str | None = None,
) -> ScenarioFile:
    """Load and validate a scenario file, or a shipped scenario by name.

    Raises :class:`ScenarioError` listing every problem found: TOML syntax,
    schema violations, unknown sites and inconsistent domain values.
    """
    path = _resolve(path_or_name) if text is None else Path(str(path_or_name))
    label = str(path)
    raw = read_toml(path, text=text)
    s: ScenarioSchema = _validate(ScenarioSchema, raw, label)
    db = _shipped_sites() if sites is None else sites
    if s.site not in db:
        near = difflib.get_close_matches(s.site, list(db), n=1)
        hint = f" (did you mean {near[0]!r}?)" if near else ""
        raise ScenarioError(label, [f"site: unknown site {s.site!r}{hint}; known sites: {', '.join(sorted(db))}"])
    site = db[s.site]
    defaults = load_detector_defaults()
    issues = []
    try:
        link = LinkScenario(
            name=s.name,
            transmitter=_terminal(s.transmitter),
            receiver=_terminal(s.receiver),
            wavelength_nm=s.wavelength_nm,
            range_m=s.range_m,
            zenith=math.radians(s.zenith_deg),
            direction=Direction(s.direction),
            site=site,
            recipe=tuple(RecipeRow(r.kind, r.label, r.value_db, r.provenance) for r in s.recipe),
            tx_power_w=s.tx_power_w,
            receiver_gain_mode=GainMode(s.receiver_gain_mode),
            extinction_per_m=s.extinction_per_m,
        )
    except InputError as exc:
        issues.append(str(exc))
        link = None
    decoy = None
    if s.decoy is not None:
        try:
            decoy = _decoy(s.decoy, defaults)
        except InputError as exc:
            issues.append(f"decoy: {exc}")
    p = s.orbit_pass
    try:
        pass_params = (
            PassParameters()
            if p is None
            else PassParameters(
                p.earth_radius_m,
                p.orbit_radius_m,
                p.visibility_window_s,
                math.radians(p.max_elevation_deg),
                p.angular_speed_rad_s,
                p.carrier_frequency_thz,
            )
        )
    except InputError as exc:
        issues.append(f"pass: {exc}")
    if issues:
        raise ScenarioError(label, issues)
    entangled = None
    if s.entangled is not None:
        e = s.entangled
        entangled = EntangledConfig(
            pair_rate=e.pair_rate_hz,
            qber=e.qber,
            alice_efficiency=e.alice_efficiency,
            bob_efficiency=defaults.entangled_bob_efficiency if e.bob_efficiency is None else e.bob_efficiency,
            ec_efficiency_f=e.ec_efficiency_f,
            provenance=e.provenance,
        )
    sweep = None
    if s.aperture_sweep is not None:
        a = s.aperture_sweep
        sweep = ApertureSweepConfig(
            r0_m=a.r0_m,
            diameters_m=tuple(a.diameters_m),
            theta_b_half=None if a.theta_b_half_urad is None else a.theta_b_half_urad * URAD,
            vertical_distance_m=a.vertical_distance_m,
            provenance=a.provenance,
        )
    return ScenarioFile(
        name=s.name,
        description=s.description,
        link=link,
        output_format=s.output_format,
        pass_params=pass_params,
        n_doppler_samples=481 if p is None else p.n_samples,
        decoy=decoy,
        entangled=entangled,
        aperture_sweep=sweep,
        expected=s.expected,
        source=label,
        echo=MappingProxyType(s.model_dump(mode="json", by_alias=True, exclude_none=True)),
    )
