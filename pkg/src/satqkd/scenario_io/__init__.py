"""Configuration files, the site database, reference checks and output rendering."""
from .loader import (
    ApertureSweepConfig,
    DetectorDefaults,
    EntangledConfig,
    ScenarioFile,
    SiteDatabase,
    load_detector_defaults,
    load_scenario,
    load_sites,
    read_toml,
    shipped_scenario_path,
    shipped_scenarios,
)
from .render import (
    FORMATS,
    KeyRateRow,
    Report,
    ledger_from_report,
    parse_output,
    render_output,
    to_report,
)
from .validation import Check, ValidationReport, run_validation_suite

__all__ = [
    "ApertureSweepConfig",
    "Check",
    "DetectorDefaults",
    "EntangledConfig",
    "FORMATS",
    "KeyRateRow",
    "Report",
    "ScenarioFile",
    "SiteDatabase",
    "ValidationReport",
    "ledger_from_report",
    "load_detector_defaults",
    "load_scenario",
    "load_sites",
    "parse_output",
    "read_toml",
    "render_output",
    "run_validation_suite",
    "shipped_scenario_path",
    "shipped_scenarios",
    "to_report",
]
