"""Partition function, free energy and self-consistent mean field of the
homogeneous market."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import SolverFailure
from .gm_potential import NesParams, renormalize_arrays, stationary_density


@dataclass(frozen=True)
class MarketCoupling:
    g: float
    B: float = 0.0
    N: int = 500

    def __post_init__(self):
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if self.N < 2:
            raise ValueError("N must be at least 2")


def _mixture_arrays(mu1, mu2, s1, s2, a, T):
    """Vectorized three-component stationary mixture. Returns log-weights,
    means and variances with a trailing component axis, plus log Omega."""
    mu1, mu2, s1, s2, a = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (mu1, mu2, s1, s2, a)))
    ssum = s1 * s1 + s2 * s2
    lt = np.stack([
        2 * np.log1p(-a) - np.log(s1),
        2 * np.log(a) - np.log(s2),
        math.log(2.0) + np.log(a) + np.log1p(-a) - 0.5 * np.log(ssum / 2)
        - (mu1 - mu2) ** 2 * T / (2 * ssum),
    ], axis=-1)
    log_omega = logsumexp(lt, axis=-1)
    lw = lt - log_omega[..., None]
    mu3 = (mu1 * s2 * s2 + mu2 * s1 * s1) / ssum
    means = np.stack([mu1 * T, mu2 * T, mu3 * T], axis=-1)
    var = np.stack([s1 * s1 * T / 2, s2 * s2 * T / 2, s1 * s1 * s2 * s2 * T / ssum], axis=-1)
    return lw, means, var, log_omega


def _tilted(p: NesParams, g: float, lam):
    """Log-normalizer, mean and variance of Psi0^2 exp(-(g/h^2) y^2 + (2 lam/h^2) y)
    with lam = g m + B. Closed forms throughout."""
    lam = np.asarray(lam, dtype=float)
    h2 = p.h ** 2
    if g > 0:
        psi = lam / g
        mu1, mu2, s1, s2, ab, vh = renormalize_arrays(p, g, psi)
        lw, means, var, log_om_bar = _mixture_arrays(mu1, mu2, s1, s2, ab, p.T)
        log_om = math.log(stationary_density(p).Omega)
        logz = 2 * vh + log_om_bar - log_om
    else:
        st = stationary_density(p)
        beta = (2.0 * lam / h2)[..., None]
        M, v = np.asarray(st.means), np.asarray(st.variances)
        lt = np.log(np.asarray(st.weights)) + beta * M + beta * beta * v / 2
        logz = logsumexp(lt, axis=-1)
        lw = lt - logz[..., None]
        means = M + beta * v
        var = np.broadcast_to(v, means.shape)
    w = np.exp(lw)
    mean = np.sum(w * means, axis=-1)
    second = np.sum(w * (var + means * means), axis=-1)
    return logz, mean, second - mean * mean


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def log_partition_function(p: NesParams, g: float, m, B: float = 0.0):
    return _ret(_tilted(p, g, g * np.asarray(m, dtype=float) + B)[0])


def partition_function(p: NesParams, g: float, m, B: float = 0.0):
    """Normalized Z(m) = integral of Psi0^2 exp(-(2g/h^2)(y^2/2 - m y) + 2 B y / h^2)."""
    return _ret(np.exp(log_partition_function(p, g, m, B)))


def symmetric_b(mu, sigma, T, g, h):
    D = h * h + g * sigma * sigma * T
    return math.exp(-h * h * mu * mu * T / (sigma * sigma * D))


def partition_function_symmetric(mu, sigma, T, g, h, m, B: float = 0.0):
    """Symmetric-potential closed form in the 1/sigma normalization,
    (1/sigma) e^{2 V_hat} [1 - (1-b) / (2 cosh^2(mu T lam / D))]."""
    from .gm_potential import v_hat
    p = NesParams.symmetric(mu, sigma, T, h)
    D = h * h + g * sigma * sigma * T
    b = symmetric_b(mu, sigma, T, g, h)
    lam = g * np.asarray(m, dtype=float) + B
    if g > 0:
        vh = v_hat(p, g, lam / g)
    else:
        # zero coupling: Gaussian tilt of each component
        vh = np.logaddexp(mu * T * lam / h ** 2, -mu * T * lam / h ** 2) + sigma * sigma * T * lam ** 2 / (2 * h ** 4) - math.log(2)
    x = mu * T * lam / D
    return _ret(np.exp(2 * vh) / sigma * (1 - (1 - b) / (2 * np.cosh(x) ** 2)))


def mean_response(p: NesParams, g: float, m, B: float = 0.0):
    """<y> under the Boltzmann density at mean field m (equals (h^2/2g) dlogZ/dm)."""
    return _ret(_tilted(p, g, g * np.asarray(m, dtype=float) + B)[1])


def dlogz_dm(p: NesParams, g: float, m, B: float = 0.0):
    return _ret(2 * g / p.h ** 2 * np.asarray(mean_response(p, g, m, B)))


def _ratio(x, b):
    """sinh(x) / (cosh(x) + b), overflow safe."""
    ax = np.abs(x)
    e1, e2 = np.exp(-ax), np.exp(-2 * ax)
    return np.sign(x) * (1 - e2) / (1 + e2 + 2 * b * e1)


def self_consistency_rhs(p: NesParams, g: float, m, B: float = 0.0):
    """Right-hand side of m = rhs(m); hyperbolic closed form for symmetric
    potentials, Boltzmann mean otherwise."""
    m = np.asarray(m, dtype=float)
    if p.is_symmetric():
        mu, s, T, h2 = p.mu1, p.sigma1, p.T, p.h ** 2
        D = h2 + g * s * s * T
        b = math.exp(-h2 * mu * mu * T / (s * s * D))
        return _ret(s * s * T * B / h2 + mu * T * _ratio(2 * mu * T * (g * m + B) / D, b))
    return mean_response(p, g, m, B)


def free_energy(p: NesParams, g: float, m, B: float = 0.0):
    """F(m) = -(h^2/2) log Z + g m^2 / 2 in the normalized convention."""
    m = np.asarray(m, dtype=float)
    return _ret(-0.5 * p.h ** 2 * np.asarray(log_partition_function(p, g, m, B)) + 0.5 * g * m * m)


def free_energy_curvature(p: NesParams, g: float, m, B: float = 0.0):
    m = np.asarray(m, dtype=float)
    var = _tilted(p, g, g * m + B)[2]
    return _ret(g - 2 * g * g / p.h ** 2 * var)


def free_energy_symmetric(mu, sigma, T, g, h, m, B: float = 0.0):
    """Explicit symmetric form with m-independent constants dropped."""
    m = np.asarray(m, dtype=float)
    h2 = h * h
    D = h2 + g * sigma * sigma * T
    b = math.exp(-h2 * mu * mu * T / (sigma * sigma * D))
    x = np.abs(2 * mu * T * (g * m + B) / D)
    logcosh_b = x + np.log((1 + np.exp(-2 * x)) / 2 + b * np.exp(-x))
    return _ret(-g * sigma * sigma * T / D * B * m + g * h2 * m * m / (2 * D) - h2 / 2 * logcosh_b)


@dataclass(frozen=True)
class Root:
    m: float
    stable: bool
    free_energy: float
    curvature: float
    residual: float

    @property
    def stability(self):
        return "stable" if self.stable else "unstable"


@dataclass(frozen=True)
class SelfConsistencyResult:
    roots: tuple = field(default_factory=tuple)

    @property
    def values(self):
        return [r.m for r in self.roots]

    def stable_roots(self):
        return [r for r in self.roots if r.stable]

    def global_minimum(self):
        return min(self.roots, key=lambda r: r.free_energy)


def search_bound(p: NesParams, B: float = 0.0):
    smax = max(p.sigma1, p.sigma2)
    return (max(abs(p.mu1), abs(p.mu2)) * p.T + 10 * smax * math.sqrt(p.T)
            + abs(B) * smax * smax * p.T / p.h ** 2)


def _scan(rvec, lo, hi, n):
    """Sign-change scan; returns (lo, hi, exact) brackets."""
    grid = np.linspace(lo, hi, n)
    res = rvec(grid)
    out = []
    for i in range(n):
        if res[i] == 0.0:
            out.append((grid[max(i - 1, 0)], grid[min(i + 1, n - 1)], grid[i]))
        elif i < n - 1 and res[i] * res[i + 1] < 0:
            out.append((grid[i], grid[i + 1], None))
    return out, grid, res


def solve_self_consistency(p: NesParams, g: float, B: float = 0.0, n_grid: int = 2001,
                           xtol: float = 1e-13, res_tol: float = 1e-10,
                           max_refine: int = 8) -> SelfConsistencyResult:
    """All roots of m = rhs(m) on [-M, M], ascending, with free-energy labels.

    A root whose stability contradicts the residual's sign pattern across its
    bracket implies unresolved neighbours; such brackets are rescanned.
    """
    M = search_bound(p, B)
    rvec = lambda x: x - np.asarray(self_consistency_rhs(p, g, x, B))
    f = lambda x: x - float(self_consistency_rhs(p, g, x, B))
    pending = [(-M, M, 0)]
    found = []
    while pending:
        lo, hi, depth = pending.pop()
        brackets, _, _ = _scan(rvec, lo, hi, n_grid)
        for L, R, exact in brackets:
            r = exact if exact is not None else brentq(f, L, R, xtol=xtol, rtol=1e-15, maxiter=500)
            found.append(r)
            if depth >= max_refine or R - L <= 1e-14:
                continue
            rising = f(R) > f(L)
            stable = free_energy_curvature(p, g, r, B) >= 0
            if rising != stable:
                pending.append((L, R, depth + 1))
    if not found:
        raise SolverFailure("no sign change of the self-consistency residual was found")
    roots = []
    for r in sorted(found):
        resid = f(r)
        if abs(resid) >= res_tol:
            raise SolverFailure(f"residual {resid:.3e} at m={r} exceeds tolerance")
        if roots and abs(r - roots[-1]) < 1e-12:
            continue
        roots.append(r)
    ref = min(roots, key=abs)
    F0 = free_energy(p, g, ref, B)
    out = []
    for r in roots:
        curv = free_energy_curvature(p, g, r, B)
        out.append(Root(m=float(r), stable=bool(curv >= 0), free_energy=float(free_energy(p, g, r, B) - F0),
                        curvature=float(curv), residual=float(f(r))))
    return SelfConsistencyResult(tuple(out))
