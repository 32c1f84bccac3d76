"""Deterministic text, CSV and JSON rendering of ledgers, sweeps and reports.

Every payload is first turned into a :class:`Report`: a kind, typed rows and
free-form metadata. CSV carries rows only; JSON carries rows and metadata.
Floats are written with ``repr`` so both formats round-trip exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..aperture_optimizer import ApertureOptimum, ApertureSweepRow
from ..errors import InputError
from ..link_budget import LedgerRow, LossLedger
from ..orbit_doppler import DopplerPoint, SweepPoint
from ..qkd_rates import DetectorFit, KeyRateResult
from .validation import ValidationReport

__all__ = [
    "FORMATS",
    "SCHEMAS",
    "Report",
    "KeyRateRow",
    "ledger_report",
    "zenith_report",
    "doppler_report",
    "aperture_report",
    "keyrate_report",
    "validation_report",
    "detector_fit_report",
    "statistics_report",
    "to_report",
    "render_output",
    "parse_output",
    "ledger_from_report",
]

FORMATS = ("table", "csv", "json")

SCHEMAS: dict[str, tuple[tuple[str, type], ...]] = {
    "ledger": (("label", str), ("value_db", float), ("provenance", str)),
    "zenith_sweep": (("angle_deg", float), ("excess_loss_db", float)),
    "doppler": (("t_s", float), ("df_over_f", float), ("df_hz", float)),
    "aperture_sweep": (("d_m", float), ("wander_db", float), ("turbulence_db", float), ("total_db", float)),
    "keyrate": (
        ("site", str),
        ("loss_db", float),
        ("protocol", str),
        ("qber", float),
        ("key_bps", float),
        ("secure", bool),
    ),
    "validation": (
        ("check", str),
        ("measured", float),
        ("expected", float),
        ("lower", float),
        ("upper", float),
        ("passed", bool),
    ),
    "detector_fit": (("loss_db", float), ("qber", float), ("fitted_qber", float), ("residual", float)),
    "statistics": (("statistic", str), ("value", float)),
}


@dataclass(frozen=True)
class Report:
    kind: str
    rows: tuple[tuple, ...]
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise InputError(f"unknown report kind {self.kind!r}")
        width = len(SCHEMAS[self.kind])
        rows = tuple(tuple(r) for r in self.rows)
        bad = [r for r in rows if len(r) != width]
        if bad:
            raise InputError(f"{self.kind} rows need {width} fields, got {bad[0]!r}")
        object.__setattr__(self, "rows", rows)

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(name for name, _ in SCHEMAS[self.kind])


@dataclass(frozen=True)
class KeyRateRow:
    site: str
    result: KeyRateResult


def ledger_report(ledger: LossLedger, echo: Mapping[str, Any] | None = None) -> Report:
    meta: dict[str, Any] = {"total_loss_db": ledger.total_loss_db}
    if echo is not None:
        meta["scenario"] = _plain(echo)
    return Report("ledger", tuple((r.label, r.value_db, r.provenance) for r in ledger.rows), meta)


def zenith_report(points: Sequence[SweepPoint]) -> Report:
    return Report("zenith_sweep", tuple((p.angle_deg, p.excess_loss_db) for p in points))


def doppler_report(points: Sequence[DopplerPoint]) -> Report:
    meta = {}
    if points:
        extreme = max(points, key=lambda p: abs(p.df_over_f))
        meta = {"max_abs_df_over_f": abs(extreme.df_over_f), "max_abs_df_hz": abs(extreme.df_hz)}
    return Report("doppler", tuple((p.t_s, p.df_over_f, p.df_hz) for p in points), meta)


def aperture_report(rows: Sequence[ApertureSweepRow], optimum: ApertureOptimum | None = None) -> Report:
    meta = {}
    if optimum is not None:
        meta = {"optimal_d_m": optimum.diameter_d, "optimal_total_db": optimum.total_loss, "interior": optimum.interior}
    return Report(
        "aperture_sweep",
        tuple((r.diameter_d, r.beam_wander_loss, r.turbulence_loss, r.total_d_dependent_loss) for r in rows),
        meta,
    )


def keyrate_report(rows: Sequence[KeyRateRow]) -> Report:
    return Report(
        "keyrate",
        tuple(
            (r.site, r.result.loss_db, r.result.protocol, r.result.qber, r.result.key_rate_bps, r.result.secure)
            for r in rows
        ),
    )


def validation_report(report: ValidationReport) -> Report:
    return Report(
        "validation",
        tuple((c.name, c.measured, c.expected, c.lower, c.upper, c.passed) for c in report.checks),
        {"suite": report.suite, "passed": report.passed},
    )


def detector_fit_report(fit: DetectorFit, points: Sequence[tuple[float, float]]) -> Report:
    rows = tuple((l, q, q + r, r) for (l, q), r in zip(points, fit.residuals))
    meta = {
        "dark_count_y0": fit.dark_count_y0,
        "detector_error_e_det": fit.detector_error_e_det,
        "max_abs_residual": fit.max_abs_residual,
        "mean_photon_mu": fit.mean_photon_mu,
        "detector_efficiency": fit.detector_efficiency,
    }
    return Report("detector_fit", rows, meta)


def statistics_report(values: Mapping[str, float], meta: Mapping[str, Any] | None = None) -> Report:
    return Report("statistics", tuple((k, float(v)) for k, v in values.items()), dict(meta or {}))


def to_report(payload) -> Report:
    """Coerce a domain object (or list of them) into a :class:`Report`."""
    if isinstance(payload, Report):
        return payload
    if isinstance(payload, LossLedger):
        return ledger_report(payload)
    if isinstance(payload, ValidationReport):
        return validation_report(payload)
    if isinstance(payload, (list, tuple)):
        if not payload:
            raise InputError("cannot infer the kind of an empty payload; build a Report explicitly")
        first = payload[0]
        for cls, fn in (
            (SweepPoint, zenith_report),
            (DopplerPoint, doppler_report),
            (ApertureSweepRow, aperture_report),
            (KeyRateRow, keyrate_report),
        ):
            if isinstance(first, cls):
                return fn(payload)
    raise InputError(f"cannot render payload of type {type(payload).__name__}")


def _plain(obj):
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


# --- CSV ----------------------------------------------------------------


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _render_csv(rep: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(rep.columns)
    for row in rep.rows:
        w.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _parse_cell(text: str, typ: type):
    if typ is str:
        return text
    if text == "":
        return None
    if typ is bool:
        if text not in ("true", "false"):
            raise InputError(f"expected true/false, got {text!r}")
        return text == "true"
    return float(text)


def _parse_csv(text: str, kind: str | None) -> Report:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise InputError("empty CSV input")
    header = tuple(rows[0])
    if kind is None:
        matches = [k for k, cols in SCHEMAS.items() if tuple(n for n, _ in cols) == header]
        if not matches:
            raise InputError(f"CSV header {','.join(header)!r} matches no known report")
        kind = matches[0]
    types = [t for _, t in SCHEMAS[kind]]
    if header != tuple(n for n, _ in SCHEMAS[kind]):
        raise InputError(f"CSV header does not match report kind {kind!r}")
    return Report(kind, tuple(tuple(_parse_cell(c, t) for c, t in zip(r, types)) for r in rows[1:]))


# --- JSON ---------------------------------------------------------------


def _render_json(rep: Report) -> str:
    doc = {
        "kind": rep.kind,
        "columns": list(rep.columns),
        "rows": [dict(zip(rep.columns, row)) for row in rep.rows],
        "meta": _plain(rep.meta),
    }
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def _parse_json(text: str) -> Report:
    doc = json.loads(text)
    kind = doc["kind"]
    cols = [n for n, _ in SCHEMAS[kind]]
    return Report(kind, tuple(tuple(r[c] for c in cols) for r in doc["rows"]), doc.get("meta", {}))


# --- text table ---------------------------------------------------------


def _fmt(value, decimals: int) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        value += 0.0  # no "-0.0000"
        if value != 0.0 and (abs(value) < 1e-3 or abs(value) >= 1e7):
            return f"{value:.4e}"
        return f"{value:.{decimals}f}"
    return str(value)


def _render_table(rep: Report) -> str:
    decimals = 2 if rep.kind in ("ledger", "keyrate") else 4
    cols = list(rep.columns)
    body = [[_fmt(v, decimals) for v in row] for row in rep.rows]
    if rep.kind == "ledger":
        cols = ["No", "Parameter", "dB", "Provenance"]
        body = [[str(i + 1), r[0], r[1], r[2]] for i, r in enumerate(body)]
        if "total_loss_db" in rep.meta:
            body.append([str(len(body) + 1), "Total loss", _fmt(float(rep.meta["total_loss_db"]), 2), "-(sum of rows)"])
    numeric = [all(_is_number(r[i]) for r in body) if body else False for i in range(len(cols))]
    widths = [max([len(c)] + [len(r[i]) for r in body]) for i, c in enumerate(cols)]

    def line(cells):
        out = []
        for i, cell in enumerate(cells):
            out.append(cell.rjust(widths[i]) if numeric[i] else cell.ljust(widths[i]))
        return "  ".join(out).rstrip()

    lines = [line(cols), "  ".join("-" * w for w in widths)]
    lines += [line(r) for r in body]
    extra = {k: v for k, v in rep.meta.items() if k not in ("total_loss_db", "scenario")}
    for k, v in extra.items():
        lines.append(f"{k}: {_fmt(v, 6) if isinstance(v, float) else v}")
    return "\n".join(lines) + "\n"


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return text == "-"
    return True


def render_output(payload, fmt: str = "table") -> bytes:
    """Render ``payload`` as UTF-8 bytes in ``fmt`` (table, csv or json)."""
    rep = to_report(payload)
    if fmt == "csv":
        return _render_csv(rep).encode("utf-8")
    if fmt == "json":
        return _render_json(rep).encode("utf-8")
    if fmt == "table":
        return _render_table(rep).encode("utf-8")
    raise InputError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")


def parse_output(data: bytes | str, fmt: str, kind: str | None = None) -> Report:
    """Inverse of :func:`render_output` for the csv and json formats."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    if fmt == "csv":
        return _parse_csv(text, kind)
    if fmt == "json":
        rep = _parse_json(text)
        if kind is not None and rep.kind != kind:
            raise InputError(f"expected a {kind!r} report, got {rep.kind!r}")
        return rep
    raise InputError(f"cannot parse format {fmt!r}; only csv and json are machine readable")


def ledger_from_report(rep: Report) -> LossLedger:
    if rep.kind != "ledger":
        raise InputError(f"expected a ledger report, got {rep.kind!r}")
    return LossLedger.from_rows([LedgerRow(label, float(value), prov) for label, value, prov in rep.rows])
