"""Critical volatility, bifurcation sweeps, critical exponents, specific-heat
jump and susceptibility of the symmetric homogeneous market."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import CriticalDivergence, InsufficientBranch, ManesError, NonCritical
from .gm_potential import NesParams
from .mean_field import free_energy, solve_self_consistency, symmetric_b


def _hc2_at(mu, sigma, T, g, h2):
    """2 g mu^2 T^2 / (1 + b(h)) - g sigma^2 T with b evaluated at h."""
    b = symmetric_b(mu, sigma, T, g, math.sqrt(h2)) if h2 > 0 else 1.0
    return 2 * g * mu * mu * T * T / (1 + b) - g * sigma * sigma * T


def critical_volatility(mu, sigma, T, g, damping=0.5, tol=1e-12, max_iter=10_000):
    """Fixed point h^2 = 2 g mu^2 T^2 / (1 + b(h)) - g sigma^2 T."""
    if g <= 0:
        raise ValueError("g must be positive")
    mu = abs(mu)
    x = 2 * g * mu * mu * T * T - g * sigma * sigma * T  # b = 0 start
    if x <= 0:
        raise NonCritical("bifurcation constraint 2 mu^2 T / sigma^2 >= 1 + b fails")
    for _ in range(max_iter):
        x_new = (1 - damping) * x + damping * _hc2_at(mu, sigma, T, g, x)
        if x_new <= 1e-14:
            raise NonCritical("bifurcation constraint fails at the fixed point")
        if abs(math.sqrt(x_new) - math.sqrt(x)) < tol:
            x = x_new
            break
        x = x_new
    else:
        f = lambda s: s - _hc2_at(mu, sigma, T, g, s)
        try:
            x = brentq(f, 1e-14, 2 * g * mu * mu * T * T, xtol=1e-16)
        except ValueError:
            raise NonCritical("no fixed point for the critical volatility") from None
    b = symmetric_b(mu, sigma, T, g, math.sqrt(x))
    if 2 * mu * mu * T / (sigma * sigma) < 1 + b:
        raise NonCritical("bifurcation constraint fails at the fixed point")
    return math.sqrt(x)


@dataclass(frozen=True)
class LandauCoefficients:
    f1: float
    f2: float
    f4: float
    b: float


def landau_coefficients(mu, sigma, T, g, h) -> LandauCoefficients:
    h2 = h * h
    D = h2 + g * sigma * sigma * T
    b = symmetric_b(mu, sigma, T, g, h)
    f1 = g * sigma * sigma * T / D * (1 + h2 * mu * mu * T * T / (1 + b) / D)
    f2 = g * h2 / (2 * D) * (1 - 2 * g * mu * mu * T * T / ((1 + b) * D))
    f4 = h2 * (2 - b) / (3 * (1 + b) ** 2) * (g * mu * T / D) ** 4
    return LandauCoefficients(f1, f2, f4, b)


def _sym(p: NesParams):
    if not p.is_symmetric():
        raise ValueError("symmetric potential parameters required")
    return abs(p.mu1), p.sigma1, p.T


@dataclass(frozen=True)
class BranchPoint:
    h: float
    roots: tuple
    stable: tuple
    error: str | None = None

    @property
    def n_roots(self):
        return len(self.roots)


def bifurcation_sweep(p_sym: NesParams, g, h_grid):
    out = []
    for h in np.asarray(h_grid, dtype=float):
        try:
            res = solve_self_consistency(p_sym.with_(h=float(h)), g)
            out.append(BranchPoint(float(h), tuple(r.m for r in res.roots), tuple(r.stable for r in res.roots)))
        except ManesError as exc:
            out.append(BranchPoint(float(h), (), (), f"{type(exc).__name__}: {exc}"))
    return out


def critical_amplitude(mu, sigma, T, g, h):
    """Leading-order coefficient c in m ~ c sqrt(h_c^2 - h^2)."""
    D = h * h + g * sigma * sigma * T
    b = symmetric_b(mu, sigma, T, g, h)
    return D / (2 * (g * mu * T) ** 2) * math.sqrt(3 * g * (1 + b) ** 2 / (2 - b))


@dataclass(frozen=True)
class BetaFit:
    slope: float
    intercept: float
    r2: float
    n_points: int
    amplitude_numeric: float
    amplitude_closed_form: float


def beta_exponent(p_sym: NesParams, g, n_points=30, lo=0.9, hi=0.999) -> BetaFit:
    mu, sigma, T = _sym(p_sym)
    hc = critical_volatility(mu, sigma, T, g)
    hs = hc * (1 - np.geomspace(1 - hi, 1 - lo, n_points))[::-1]
    xs, ys = [], []
    for bp in bifurcation_sweep(p_sym, g, hs):
        pos = [r for r in bp.roots if r > 1e-12]
        if bp.error is None and pos:
            xs.append(math.log(hc * hc - bp.h * bp.h))
            ys.append(math.log(max(pos)))
    if len(xs) < 5:
        raise InsufficientBranch(f"only {len(xs)} points on the ordered branch")
    xs, ys = np.array(xs), np.array(ys)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    r2 = 1 - np.sum((ys - pred) ** 2) / np.sum((ys - ys.mean()) ** 2)
    # amplitude at the point closest to h_c
    i = int(np.argmin(xs))
    h_near = math.sqrt(hc * hc - math.exp(xs[i]))
    amp_num = math.exp(ys[i]) / math.sqrt(math.exp(xs[i]))
    return BetaFit(float(slope), float(intercept), float(r2), len(xs), amp_num,
                   critical_amplitude(mu, sigma, T, g, h_near))


def specific_heat_jump(p_sym: NesParams, g) -> float:
    mu, sigma, T = _sym(p_sym)
    hc = critical_volatility(mu, sigma, T, g)
    b = symmetric_b(mu, sigma, T, g, hc)
    return 3 / 8 * (1 + b) ** 2 / (2 - b) * hc ** 4 / (g * g * mu ** 4 * T ** 4)


def minimized_free_energy(p: NesParams, g, B=0.0) -> float:
    """min_m F(m), by golden-section search inside each stable basin."""
    res = solve_self_consistency(p, g, B)
    ms = [r.m for r in res.roots]
    best = math.inf
    for i, r in enumerate(res.roots):
        if not r.stable:
            continue
        lo = ms[i - 1] if i > 0 else r.m - 1.0
        hi = ms[i + 1] if i + 1 < len(ms) else r.m + 1.0
        f = lambda m: free_energy(p, g, m, B)
        try:
            opt = minimize_scalar(f, bracket=(lo + 0.5 * (r.m - lo), r.m, hi - 0.5 * (hi - r.m)),
                                  method="golden", tol=1e-10)
            val = min(float(opt.fun), f(r.m))
        except ValueError:
            val = f(r.m)
        best = min(best, val)
    return best


def specific_heat_jump_numeric(p_sym: NesParams, g, rel_step=1e-4) -> float:
    """Jump of -h_c^2 d^2 F_min / d(h^2)^2 across h_c from one-sided stencils
    extrapolated to the critical point."""
    mu, sigma, T = _sym(p_sym)
    hc = critical_volatility(mu, sigma, T, g)
    x_c = hc * hc
    eps = rel_step * x_c
    F = lambda x: minimized_free_energy(p_sym.with_(h=math.sqrt(x)), g)

    def one_side(sign):
        vals = {k: F(x_c + sign * k * eps) for k in (1, 2, 3, 4)}
        d2 = lambda k: (vals[k + 1] - 2 * vals[k] + vals[k - 1]) / eps ** 2
        return 3 * d2(2) - 2 * d2(3)  # linear extrapolation to x_c

    below, above = one_side(-1), one_side(+1)
    return -x_c * (below - above)


def specific_heat(p_sym: NesParams, g, h, rel_step=1e-4) -> float:
    """C_H = -h^2 d^2 F_min / d(h^2)^2 at h (central difference)."""
    x = h * h
    e = rel_step * x
    F = lambda s: minimized_free_energy(p_sym.with_(h=math.sqrt(s)), g)
    return -x * (F(x + e) - 2 * F(x) + F(x - e)) / e ** 2


def susceptibility(p_sym: NesParams, g, h=None) -> float:
    """Closed-form dm/dB at B = 0 in the disordered phase."""
    mu, sigma, T = _sym(p_sym)
    h = p_sym.h if h is None else h
    h2 = h * h
    hc2 = _hc2_at(mu, sigma, T, g, h2)
    if abs(h2 - hc2) < 1e-6:
        raise CriticalDivergence(f"|h^2 - h_c^2| = {abs(h2 - hc2):.2e} is below 1e-6")
    if h2 < hc2:
        raise ValueError("susceptibility formula requires h above the critical volatility")
    s2T = sigma * sigma * T
    return (h2 * hc2 + 2 * g * h2 * s2T + g * g * s2T * s2T) / (g * h2 * (h2 - hc2))


def susceptibility_numeric(p_sym: NesParams, g, h=None, delta=1e-5) -> float:
    p = p_sym if h is None else p_sym.with_(h=h)
    m1 = solve_self_consistency(p, g, delta).values
    m0 = solve_self_consistency(p, g, 0.0).values
    if len(m1) != 1 or len(m0) != 1:
        raise ValueError("finite-difference susceptibility needs a unique root")
    return (m1[0] - m0[0]) / delta


@dataclass(frozen=True)
class PhaseDiagnostics:
    h_c: float
    b: float
    beta_exponent: float
    beta_r2: float
    delta_CH: float
    chi: float | None
    h: float


def phase_diagnostics(p_sym: NesParams, g) -> PhaseDiagnostics:
    mu, sigma, T = _sym(p_sym)
    hc = critical_volatility(mu, sigma, T, g)
    fit = beta_exponent(p_sym, g)
    try:
        chi = susceptibility(p_sym, g)
    except (ValueError, CriticalDivergence):
        chi = None
    return PhaseDiagnostics(hc, symmetric_b(mu, sigma, T, g, hc), fit.slope, fit.r2,
                            specific_heat_jump(p_sym, g), chi, p_sym.h)
