"""QBER and secret-key rates for decoy-state BB84 and entanglement-based BBM92.

Yields and dark counts are per gate (per pulse). ``loss_db`` arguments are
positive channel losses such as a ledger total.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import InputError, NoSignalError

__all__ = [
    "QBER_THRESHOLD",
    "SinglePhotonBound",
    "DecoyParams",
    "EntangledParams",
    "KeyRateResult",
    "DetectorFit",
    "EntangledFit",
    "binary_entropy",
    "channel_eta",
    "decoy_gain_qmu",
    "decoy_error_emu",
    "qber_decoy",
    "security_delta",
    "single_photon_estimates",
    "keyrate_decoy",
    "entangled_gain",
    "keyrate_bbm92",
    "fit_detector_params",
    "fit_entangled_efficiency",
    "threshold_check",
    "keyrate_vs_source_rate",
]

QBER_THRESHOLD = 0.11


def binary_entropy(x: float) -> float:
    """Shannon entropy of a biased bit, in bits."""
    if not 0.0 <= x <= 1.0:
        raise InputError(f"binary entropy needs x in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def channel_eta(loss_db: float, detector_efficiency: float = 1.0) -> float:
    """Overall transmittance ``10^(-loss/10)`` times the detector efficiency."""
    if loss_db < 0:
        raise InputError(f"channel loss must be >= 0 dB, got {loss_db!r}")
    if not 0.0 < detector_efficiency <= 1.0:
        raise InputError(f"detector efficiency must lie in (0, 1], got {detector_efficiency!r}")
    return 10.0 ** (-loss_db / 10.0) * detector_efficiency


def decoy_gain_qmu(eta: float, mu: float, y0: float) -> float:
    """Gain of a coherent state with mean photon number ``mu``."""
    if not 0.0 <= eta <= 1.0 or mu < 0 or not 0.0 <= y0 <= 1.0:
        raise InputError("gain needs eta, Y0 in [0, 1] and mu >= 0")
    # expm1 keeps precision at the 1e-5 gains a satellite link delivers.
    return y0 - math.expm1(-eta * mu)


def decoy_error_emu(eta: float, mu: float, y0: float, e_det: float) -> float:
    q = decoy_gain_qmu(eta, mu, y0)
    if q == 0.0:
        raise NoSignalError("zero gain: no detections, QBER undefined")
    return (0.5 * y0 - e_det * math.expm1(-eta * mu)) / q


class SinglePhotonBound(str, Enum):
    """How the single-photon gain ``Q1`` and error ``E1`` are obtained.

    ``asymptotic`` assumes infinitely many decoy intensities, so the
    single-photon yield is known exactly. ``vacuum_weak`` uses one weak decoy
    plus vacuum, giving a lower bound on ``Y1`` and an upper bound on ``E1``.
    """

    ASYMPTOTIC = "asymptotic"
    VACUUM_WEAK = "vacuum_weak"


@dataclass(frozen=True)
class DecoyParams:
    """Weak-coherent-pulse source and detector description.

    The shipped ``dark_count_y0`` and ``detector_error_e_det`` come from
    fitting the three reference (loss, QBER) site points, see
    :mod:`satqkd.scenario_io`. ``finite_key`` switches in the statistical
    deduction ``Q_mu Delta / N_mu``; it is off by default, which gives the
    asymptotic rate.
    """

    dark_count_y0: float
    detector_error_e_det: float
    mean_photon_mu: float = 0.5
    decoy_nu: float = 0.1
    detector_efficiency: float = 1.0
    basis_factor_q: float = 0.5
    ec_efficiency_f: float = 1.22
    source_rate: float = 10e6
    signal_counts_n_mu: float = 1e6
    decoy_counts_n_nu: float = 1e6
    raw_key_n: float = 1e6
    security_eps: float = 1e-9
    eps_bar: float = 1e-10
    eps_bar_prime: float = 1e-11
    eps_ec: float = 1e-10
    single_photon_bound: SinglePhotonBound = SinglePhotonBound.ASYMPTOTIC
    finite_key: bool = False

    def __post_init__(self):
        object.__setattr__(self, "single_photon_bound", SinglePhotonBound(self.single_photon_bound))
        for name in ("dark_count_y0", "detector_error_e_det"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InputError(f"{name} must lie in [0, 1], got {v!r}")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise InputError("detector efficiency must lie in (0, 1]")
        if not 0.0 < self.basis_factor_q <= 1.0:
            raise InputError("basis factor q must lie in (0, 1]")
        if not self.mean_photon_mu > self.decoy_nu >= 0.0:
            raise InputError(f"need mu > nu >= 0, got mu={self.mean_photon_mu!r}, nu={self.decoy_nu!r}")
        if self.ec_efficiency_f < 1.0:
            raise InputError("error-correction efficiency f must be >= 1")
        if not self.source_rate > 0:
            raise InputError("source rate must be positive")
        if not (self.signal_counts_n_mu > 0 and self.decoy_counts_n_nu > 0 and self.raw_key_n > 0):
            raise InputError("count allocations must be positive")

    @property
    def signal_fraction(self) -> float:
        return self.signal_counts_n_mu / (self.signal_counts_n_mu + self.decoy_counts_n_nu)


@dataclass(frozen=True)
class EntangledParams:
    pair_rate: float
    signal_gain_q_lambda: float
    qber_e: float
    ec_efficiency_f: float = 1.22

    def __post_init__(self):
        if not self.pair_rate > 0:
            raise InputError("pair rate must be positive")
        if not 0.0 <= self.signal_gain_q_lambda <= 1.0:
            raise InputError("gain must lie in [0, 1]")
        if not 0.0 <= self.qber_e <= 1.0:
            raise InputError("QBER must lie in [0, 1]")
        if self.ec_efficiency_f < 1.0:
            raise InputError("error-correction efficiency f must be >= 1")


@dataclass(frozen=True)
class KeyRateResult:
    protocol: str
    loss_db: float
    qber: float
    key_rate_per_pulse: float
    key_rate_bps: float
    secure: bool


def threshold_check(qber: float) -> bool:
    """True when ``qber`` is strictly below the 11 % BB84 threshold."""
    if not 0.0 <= qber <= 0.5:
        raise InputError(f"QBER must lie in [0, 0.5], got {qber!r}")
    return qber < QBER_THRESHOLD


def _result(protocol: str, loss_db: float, qber: float, k: float, rate: float) -> KeyRateResult:
    k = max(k, 0.0)
    return KeyRateResult(protocol, loss_db, qber, k, k * rate, threshold_check(min(qber, 0.5)) and k > 0)


def qber_decoy(params: DecoyParams, loss_db: float) -> float:
    """Signal-state QBER ``E_mu`` after a channel of ``loss_db``."""
    eta = channel_eta(loss_db, params.detector_efficiency)
    return decoy_error_emu(eta, params.mean_photon_mu, params.dark_count_y0, params.detector_error_e_det)


def security_delta(params: DecoyParams) -> float:
    """Finite-key deduction in bits for a raw key of ``params.raw_key_n`` bits.

    ``Delta = 7 sqrt(N log2(2 / (eps_bar - eps_bar'))) + 2 log2(1 / (2 (eps - eps_bar - eps_EC)))``.
    """
    eps, eb, ebp, eec = params.security_eps, params.eps_bar, params.eps_bar_prime, params.eps_ec
    problems = []
    if not eps > eb:
        problems.append(f"eps ({eps:g}) must exceed eps_bar ({eb:g})")
    if not eb > ebp:
        problems.append(f"eps_bar ({eb:g}) must exceed eps_bar_prime ({ebp:g})")
    if ebp < 0:
        problems.append(f"eps_bar_prime ({ebp:g}) must be >= 0")
    if eec < 0:
        problems.append(f"eps_EC ({eec:g}) must be >= 0")
    if not eps - eb - eec > 0:
        problems.append(f"eps - eps_bar - eps_EC = {eps - eb - eec:g} must be positive")
    if problems:
        raise InputError("invalid security parameters: " + "; ".join(problems))
    n = params.raw_key_n
    return 7.0 * math.sqrt(n * math.log2(2.0 / (eb - ebp))) + 2.0 * math.log2(1.0 / (2.0 * (eps - eb - eec)))


def single_photon_estimates(params: DecoyParams, eta: float) -> tuple[float, float]:
    """``(Q1, E1)`` for transmittance ``eta``; ``E1`` is capped at 0.5."""
    mu, nu, y0, ed = params.mean_photon_mu, params.decoy_nu, params.dark_count_y0, params.detector_error_e_det
    if params.single_photon_bound is SinglePhotonBound.ASYMPTOTIC:
        y1 = y0 + eta
        if y1 == 0.0:
            return 0.0, 0.5
        return y1 * mu * math.exp(-mu), min((0.5 * y0 + ed * eta) / y1, 0.5)
    if nu == 0.0:
        raise InputError("the vacuum+weak bound needs a non-zero decoy intensity")
    q_mu = decoy_gain_qmu(eta, mu, y0)
    q_nu = decoy_gain_qmu(eta, nu, y0)
    e_nu = decoy_error_emu(eta, nu, y0, ed)
    y1 = mu / (mu * nu - nu * nu) * (
        q_nu * math.exp(nu) - q_mu * math.exp(mu) * nu * nu / (mu * mu) - (mu * mu - nu * nu) / (mu * mu) * y0
    )
    if y1 <= 0.0:
        return 0.0, 0.5
    e1 = (e_nu * q_nu * math.exp(nu) - 0.5 * y0) / (y1 * nu)
    return y1 * mu * math.exp(-mu), min(max(e1, 0.0), 0.5)


def keyrate_decoy(params: DecoyParams, loss_db: float) -> KeyRateResult:
    """Decoy-state BB84 secret-key rate, clamped at zero."""
    eta = channel_eta(loss_db, params.detector_efficiency)
    mu = params.mean_photon_mu
    q_mu = decoy_gain_qmu(eta, mu, params.dark_count_y0)
    e_mu = decoy_error_emu(eta, mu, params.dark_count_y0, params.detector_error_e_det)
    q1, e1 = single_photon_estimates(params, eta)
    finite = q_mu * security_delta(params) / params.signal_counts_n_mu if params.finite_key else 0.0
    bracket = -q_mu * params.ec_efficiency_f * binary_entropy(min(e_mu, 0.5)) + q1 * (1.0 - binary_entropy(e1) - finite)
    k = params.basis_factor_q * params.signal_fraction * bracket
    return _result("decoy", loss_db, e_mu, k, params.source_rate)


def entangled_gain(loss_db: float, alice_efficiency: float, bob_efficiency: float) -> float:
    """Coincidence gain per pair for a source co-located with Alice.

    Only Bob's photon crosses the channel; both detectors must click.
    """
    for name, v in (("alice_efficiency", alice_efficiency), ("bob_efficiency", bob_efficiency)):
        if not 0.0 < v <= 1.0:
            raise InputError(f"{name} must lie in (0, 1], got {v!r}")
    return alice_efficiency * channel_eta(loss_db, bob_efficiency)


def keyrate_bbm92(params: EntangledParams, loss_db: float = float("nan")) -> KeyRateResult:
    """BBM92 rate ``K = Q_lambda (1 - H2(E) - f H2(E)) / 2``, clamped at zero."""
    h = binary_entropy(min(params.qber_e, 0.5))
    k = 0.5 * params.signal_gain_q_lambda * (1.0 - h - params.ec_efficiency_f * h)
    return _result("bbm92", loss_db, params.qber_e, k, params.pair_rate)


@dataclass(frozen=True)
class DetectorFit:
    dark_count_y0: float
    detector_error_e_det: float
    residuals: tuple[float, ...]
    mean_photon_mu: float
    detector_efficiency: float

    @property
    def max_abs_residual(self) -> float:
        return max(abs(r) for r in self.residuals)


def fit_detector_params(
    points: Sequence[tuple[float, float]],
    mean_photon_mu: float = 0.5,
    detector_efficiency: float = 1.0,
) -> DetectorFit:
    """Least-squares ``(Y0, e_det)`` from ``(loss_db, qber)`` observations.

    ``E (Y0 + x) = Y0/2 + e_det x`` with ``x = 1 - exp(-eta mu)`` is linear in
    the unknowns; its solution seeds a refinement on the QBER residuals.
    """
    pts = [(float(l), float(q)) for l, q in points]
    if len(pts) < 2:
        raise InputError(f"need at least 2 (loss, qber) points to fit 2 parameters, got {len(pts)}")
    bad = [q for _, q in pts if not 0.0 < q < 0.5]
    if bad:
        raise InputError(f"QBER values must lie in (0, 0.5), got {bad}")
    x = np.array([-math.expm1(-channel_eta(l, detector_efficiency) * mean_photon_mu) for l, _ in pts])
    e = np.array([q for _, q in pts])
    a = np.column_stack([e - 0.5, -x])
    b = -e * x
    scale = np.linalg.norm(a, axis=0)
    if np.any(scale == 0):
        raise InputError("degenerate fit: a design column vanishes")
    sv = np.linalg.svd(a / scale, compute_uv=False)
    if sv[-1] < 1e-9 * sv[0]:
        raise InputError("degenerate fit: the points do not separate dark counts from detector error (repeated losses?)")
    sol, *_ = np.linalg.lstsq(a / scale, b, rcond=None)
    y0, ed = (sol / scale).tolist()

    def qber_at(p, l):
        return decoy_error_emu(channel_eta(l, detector_efficiency), mean_photon_mu, p[0] * y_scale, p[1])

    y_scale = abs(y0) if y0 != 0 else 1e-6
    start = np.array([y0 / y_scale, ed])
    if not (0.0 <= y0 <= 1.0 and 0.0 <= ed <= 1.0):
        raise InputError(f"fit left the physical region: Y0={y0:g}, e_det={ed:g}")
    resid0 = [qber_at(start, l) - q for l, q in pts]
    if max(abs(r) for r in resid0) > 1e-14:
        sol_ls = least_squares(
            lambda p: [qber_at(p, l) - q for l, q in pts],
            start,
            bounds=([0.0, 0.0], [1.0 / y_scale, 1.0]),
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        start = sol_ls.x
    y0, ed = float(start[0] * y_scale), float(start[1])
    residuals = tuple(qber_at([y0 / y_scale, ed], l) - q for l, q in pts)
    return DetectorFit(y0, ed, residuals, mean_photon_mu, detector_efficiency)


@dataclass(frozen=True)
class EntangledFit:
    bob_efficiency: float
    alice_efficiency: float
    relative_residuals: tuple[float, ...] = field(default_factory=tuple)


def fit_entangled_efficiency(
    points: Sequence[tuple[float, float, float]],
    pair_rate: float,
    alice_efficiency: float = 0.25,
    ec_efficiency_f: float = 1.22,
) -> EntangledFit:
    """Bob-side efficiency that best matches ``(loss_db, qber, key_bps)`` points.

    The rate is linear in the efficiency, so the fit minimises relative
    errors in closed form.
    """
    if not points:
        raise InputError("need at least one (loss, qber, key_bps) point")
    unit = []
    targets = []
    for loss, qber, bps in points:
        probe = EntangledParams(pair_rate, entangled_gain(loss, alice_efficiency, 1.0), qber, ec_efficiency_f)
        unit.append(keyrate_bbm92(probe, loss).key_rate_bps)
        targets.append(bps)
    ratios = [t / u for t, u in zip(targets, unit) if u > 0]
    if not ratios:
        raise InputError("no point yields a positive key rate")
    # Minimise sum((eff u_i - t_i)/t_i)^2.
    num = math.fsum(u / t for u, t in zip(unit, targets))
    den = math.fsum((u / t) ** 2 for u, t in zip(unit, targets))
    eff = num / den
    if not 0.0 < eff <= 1.0:
        raise InputError(f"fitted efficiency {eff:g} is not physical")
    rel = tuple(eff * u / t - 1.0 for u, t in zip(unit, targets))
    return EntangledFit(eff, alice_efficiency, rel)


def keyrate_vs_source_rate(
    params: DecoyParams | EntangledParams,
    loss_db: float,
    rates_hz: Sequence[float],
) -> list[KeyRateResult]:
    """Key rate at each source (or pair) rate; per-pulse quantities are rate independent."""
    out = []
    for r in rates_hz:
        if isinstance(params, DecoyParams):
            out.append(keyrate_decoy(replace(params, source_rate=float(r)), loss_db))
        else:
            out.append(keyrate_bbm92(replace(params, pair_rate=float(r)), loss_db))
    return out
