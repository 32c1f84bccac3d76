"""Small numerical kernels: adaptive Simpson quadrature and the order-one Bessel function."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import QuadratureError

__all__ = ["QuadResult", "adaptive_simpson", "bessel_j1", "to_db", "DB_FLOOR"]

#: Sentinel returned by :func:`to_db` for non-positive linear values.
DB_FLOOR = -300.0


def to_db(linear: float) -> float:
    """``10 log10(linear)``, clamped at :data:`DB_FLOOR`; zero maps to the floor."""
    if linear < 0.0 or math.isnan(linear):
        raise ValueError(f"cannot express {linear!r} in dB")
    if linear == 0.0:
        return DB_FLOOR
    return max(10.0 * math.log10(linear), DB_FLOOR)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-8,
    abs_tol: float = 0.0,
    initial_panels: int = 64,
    max_depth: int = 40,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]`` with adaptive composite Simpson.

    The interval is first cut into ``initial_panels`` equal panels so that
    narrow features near an endpoint (the boundary-layer term of a turbulence
    profile, for instance) are seen by the coarse pass. Each panel is then
    bisected until the Richardson-corrected local error falls under its share
    of ``max(abs_tol, rel_tol * |I|)``.

    Raises
    ------
    QuadratureError
        If any panel still misses its tolerance at ``max_depth`` bisections.
    """
    if not b > a:
        raise ValueError(f"need b > a, got a={a!r}, b={b!r}")
    width = (b - a) / initial_panels
    evaluations = 0

    def fe(x: float) -> float:
        nonlocal evaluations
        evaluations += 1
        return f(x)

    # (left, right, f(left), f(mid), f(right), whole-panel Simpson, depth)
    panels = []
    coarse = 0.0
    f_left = fe(a)
    for i in range(initial_panels):
        lo = a + i * width
        hi = b if i == initial_panels - 1 else a + (i + 1) * width
        mid = 0.5 * (lo + hi)
        f_mid, f_right = fe(mid), fe(hi)
        whole = (hi - lo) / 6.0 * (f_left + 4.0 * f_mid + f_right)
        panels.append((lo, hi, f_left, f_mid, f_right, whole, 0))
        coarse += whole
        f_left = f_right

    tol = max(abs_tol, rel_tol * abs(coarse))
    pieces: list[float] = []
    err_total = 0.0
    unconverged = False
    stack = panels[::-1]
    while stack:
        lo, hi, fl, fm, fr, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        flm, frm = fe(0.5 * (lo + mid)), fe(0.5 * (mid + hi))
        left = (mid - lo) / 6.0 * (fl + 4.0 * flm + fm)
        right = (hi - mid) / 6.0 * (fm + 4.0 * frm + fr)
        delta = left + right - whole
        local_tol = tol * (hi - lo) / (b - a)
        if abs(delta) <= 15.0 * local_tol or depth >= max_depth:
            if abs(delta) > 15.0 * local_tol:
                unconverged = True
            pieces.append(left + right + delta / 15.0)
            err_total += abs(delta) / 15.0
        else:
            stack.append((mid, hi, fm, frm, fr, right, depth + 1))
            stack.append((lo, mid, fl, flm, fm, left, depth + 1))

    value = math.fsum(pieces)
    if unconverged:
        raise QuadratureError("adaptive Simpson did not converge", value, err_total)
    return QuadResult(value, err_total, evaluations)


def _j1_series(x: float) -> float:
    half = 0.5 * x
    q = half * half
    term = half
    terms = [term]
    k = 0
    while True:
        k += 1
        term *= -q / (k * (k + 1))
        terms.append(term)
        if abs(term) < 1e-18 * max(1.0, abs(half)) and k > 4:
            break
    return math.fsum(terms)


def _j1_asymptotic(x: float) -> float:
    # Hankel expansion with mu = 4 n^2 = 4; truncated at the smallest term.
    mu = 4.0
    z8 = 8.0 * x
    p_sum, q_sum = 1.0, 0.0
    term = 1.0
    last = math.inf
    for k in range(1, 60):
        term *= (mu - (2 * k - 1) ** 2) / (k * z8)
        if abs(term) >= last:
            break
        last = abs(term)
        if k % 2:
            q_sum += term if k % 4 == 1 else -term
        else:
            p_sum += -term if k % 4 == 2 else term
        if last < 1e-17:
            break
    chi = x - 0.75 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p_sum * math.cos(chi) - q_sum * math.sin(chi))


def bessel_j1(x: float) -> float:
    """Bessel function of the first kind, order one.

    Power series for ``|x| <= 12`` (absolute error below 1e-12), Hankel
    asymptotic expansion beyond. Odd in ``x``.
    """
    if not math.isfinite(x):
        raise ValueError(f"bessel_j1 needs a finite argument, got {x!r}")
    ax = abs(x)
    value = _j1_series(ax) if ax <= 12.0 else _j1_asymptotic(ax)
    return -value if x < 0 else value
