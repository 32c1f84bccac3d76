"""Reference-link checks: the Canary horizontal link and the Ottawa site."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..atmosphere import rescale_fried
from ..errors import InputError
from ..link_budget import RowKind, assemble_ledger
from ..numerics import DB_FLOOR
from .loader import ScenarioFile, load_scenario

__all__ = ["Check", "ValidationReport", "run_validation_suite", "VALIDATION_SUITES"]

VALIDATION_SUITES = ("canary", "ottawa")


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    expected: float | None
    lower: float | None
    upper: float | None
    passed: bool
    unit: str = ""

    def describe(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        band = ""
        if self.lower is not None and self.upper is not None:
            band = f" in [{self.lower:g}, {self.upper:g}]"
        ref = "" if self.expected is None else f" (expected {self.expected:g})"
        return f"{state} {self.name}: {self.measured:.4f} {self.unit}{band}{ref}".rstrip()


@dataclass(frozen=True)
class ValidationReport:
    suite: str
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _band(name: str, value: float, lo: float, hi: float, expected=None, unit="dB") -> Check:
    return Check(name, value, expected, lo, hi, lo <= value <= hi, unit)


def _canary_checks(sf: ScenarioFile) -> list[Check]:
    exp = sf.expected
    if exp is None:
        raise InputError(f"scenario {sf.name!r} has no [expected] block")
    ledger = assemble_ledger(sf.link)
    checks = []
    atm = [r for spec, r in zip(sf.link.recipe, ledger.rows) if spec.kind is RowKind.HORIZONTAL_ATMOSPHERE]
    nm = f"{sf.link.wavelength_nm:g} nm"
    if exp.atmospheric_loss_band_db is not None and atm:
        lo, hi = exp.atmospheric_loss_band_db
        checks.append(_band(f"L_A at {nm}", -atm[0].value_db, lo, hi))
    if exp.end_to_end_loss_db is not None and exp.tolerance_db is not None:
        e, tol = exp.end_to_end_loss_db, exp.tolerance_db
        checks.append(_band(f"end-to-end loss at {nm}", ledger.total_loss_db, e - tol, e + tol, e))
    if exp.fried_rescale_m is not None:
        ref = sf.link.site.fried_reference
        if ref is None:
            raise InputError(f"site {sf.link.site.name!r} has no reference r0 to rescale")
        r0 = rescale_fried(ref[0], ref[1], sf.link.wavelength_nm)
        tol = exp.fried_rescale_tolerance_m or 1e-4
        checks.append(
            _band(f"r0 rescaled {ref[1]:g} -> {nm}", r0, exp.fried_rescale_m - tol, exp.fried_rescale_m + tol, exp.fried_rescale_m, "m")
        )
    return checks


def _assembly_check(sf: ScenarioFile) -> list[Check]:
    ledger = assemble_ledger(sf.link)
    finite = math.isfinite(ledger.total_loss_db) and all(r.value_db > DB_FLOOR for r in ledger.rows)
    return [Check(f"{sf.name} ledger assembles ({len(ledger.rows)} rows)", ledger.total_loss_db, None, None, None, finite, "dB")]


def run_validation_suite(name: str) -> ValidationReport:
    """Run a named reference check against the shipped scenarios."""
    if name == "canary":
        checks = _canary_checks(load_scenario("canary_850")) + _canary_checks(load_scenario("canary_532"))
    elif name == "ottawa":
        checks = _assembly_check(load_scenario("ottawa_signal"))
    else:
        raise InputError(f"unknown validation suite {name!r}; choose from {', '.join(VALIDATION_SUITES)}")
    return ValidationReport(name, tuple(checks))
