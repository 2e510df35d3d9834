"""Finite-N interacting Langevin particles and a finite-volume McKean-Vlasov
density solver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import exprel

from .errors import CFLViolation, UnstableStep
from .gm_potential import NesParams, log_mixture, potential, potential_gradient


@dataclass(frozen=True)
class SimConfig:
    N: int
    steps: int
    seed: int = 0
    dt: float | None = None
    burn_in: int | None = None
    init: tuple = ("point", 0.0)
    record_every: int = 1
    B: float = 0.0

    def __post_init__(self):
        if self.N < 1 or self.steps < 1 or self.record_every < 1:
            raise ValueError("N, steps and record_every must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        kind = self.init[0]
        if kind not in ("point", "gaussian"):
            raise ValueError("init must be ('point', y0) or ('gaussian', mean, sd)")

    def resolved_dt(self, p: NesParams) -> float:
        if self.dt is not None:
            return self.dt
        smin = min(p.sigma1, p.sigma2)
        return min(1e-3, 0.1 * smin * smin * p.T / p.h ** 2)

    def resolved_burn_in(self) -> int:
        return self.steps // 5 if self.burn_in is None else self.burn_in


def stability_bound(p: NesParams, g: float) -> float:
    smin = min(p.sigma1, p.sigma2)
    bound = smin * smin * p.T / p.h ** 2
    return min(bound, 1.0 / g) if g > 0 else bound


@dataclass
class SimResult:
    t: np.ndarray
    m_hat: np.ndarray
    var_hat: np.ndarray
    time_avg_m: float
    time_avg_var: float
    mean_offdiag_cov: float
    m_hat_time_var: float
    n_stationary: int
    y_final: np.ndarray = field(repr=False)


def _initial(cfg: SimConfig, rng):
    if cfg.init[0] == "point":
        return np.full(cfg.N, float(cfg.init[1]))
    _, mean, sd = cfg.init
    return rng.normal(float(mean), float(sd), cfg.N)


def simulate_particles(p: NesParams, g: float, cfg: SimConfig) -> SimResult:
    """Euler-Maruyama for dy_i = [-V'(y_i) - g (y_i - ybar) + B] dt + h dW_i."""
    dt = cfg.resolved_dt(p)
    if dt >= stability_bound(p, g):
        raise ValueError(f"dt={dt} violates the stability bound {stability_bound(p, g)}")
    burn = cfg.resolved_burn_in()
    if burn >= cfg.steps:
        raise ValueError("burn_in must be smaller than steps")
    rng = np.random.default_rng(cfg.seed)
    y = _initial(cfg, rng)
    smax = max(p.sigma1, p.sigma2) * math.sqrt(p.T)
    bound = max(abs(p.mu1), abs(p.mu2)) * p.T + 20 * smax
    sq = p.h * math.sqrt(dt)
    t_rec, m_rec, v_rec = [], [], []
    s_m = s_m2 = 0.0
    s_y = np.zeros(cfg.N)
    s_y2 = np.zeros(cfg.N)
    n_stat = 0
    for k in range(1, cfg.steps + 1):
        ybar = y.mean()
        drift = -potential_gradient(p, y) - g * (y - ybar) + cfg.B
        y = y + drift * dt + sq * rng.standard_normal(cfg.N)
        if not np.all(np.abs(y) < bound):
            raise UnstableStep(f"|y| exceeded {bound:.3g} at step {k}; reduce dt")
        m = y.mean()
        if k % cfg.record_every == 0:
            t_rec.append(k * dt)
            m_rec.append(m)
            v_rec.append(y.var(ddof=1) if cfg.N > 1 else 0.0)
        if k > burn:
            n_stat += 1
            s_m += m
            s_m2 += m * m
            s_y += y
            s_y2 += y * y
    avg_m = s_m / n_stat
    var_m = max(s_m2 / n_stat - avg_m ** 2, 0.0)
    per_var = s_y2 / n_stat - (s_y / n_stat) ** 2
    N = cfg.N
    offdiag = (N * N * var_m - per_var.sum()) / (N * (N - 1)) if N > 1 else 0.0
    return SimResult(t=np.array(t_rec), m_hat=np.array(m_rec), var_hat=np.array(v_rec),
                     time_avg_m=float(avg_m), time_avg_var=float(per_var.mean()),
                     mean_offdiag_cov=float(offdiag), m_hat_time_var=float(var_m),
                     n_stationary=n_stat, y_final=y)


@dataclass(frozen=True)
class ForceCheck:
    meanfield: np.ndarray
    pairwise: np.ndarray
    max_abs_diff: float


def force_equivalence(p: NesParams, g: float, y) -> ForceCheck:
    """Mean-field interaction force against the explicit pairwise sum."""
    y = np.asarray(y, dtype=float)
    N = y.size
    base = -potential_gradient(p, y)
    mf = base - g * (y - y.mean())
    pair = base.copy()
    for i in range(N):
        pair[i] -= g / N * np.sum(y[i] - y)
    return ForceCheck(mf, pair, float(np.max(np.abs(mf - pair))))


@dataclass(frozen=True)
class GridConfig:
    y_min: float
    y_max: float
    n_cells: int
    dt: float | None = None

    @classmethod
    def default(cls, p: NesParams, n_cells=1000, dt=None):
        smax = max(p.sigma1, p.sigma2) * math.sqrt(p.T)
        return cls(min(p.mu1, p.mu2) * p.T - 10 * smax, max(p.mu1, p.mu2) * p.T + 10 * smax, n_cells, dt)

    @property
    def dx(self):
        return (self.y_max - self.y_min) / self.n_cells

    @property
    def centers(self):
        return self.y_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass
class MVResult:
    y: np.ndarray
    t: np.ndarray
    means: np.ndarray
    masses: np.ndarray
    density: np.ndarray
    snapshots: np.ndarray
    max_mass_step_error: float
    min_density: float
    dt: float


def _bernoulli(x):
    return 1.0 / exprel(x)


def boltzmann_density(p: NesParams, g: float, grid: GridConfig, m: float, B: float = 0.0):
    """Grid-normalized exp(-2 U/h^2), U = V + g(y^2/2 - m y) - B y."""
    y = grid.centers
    log_p = 2 * log_mixture(p, y) - (2 / p.h ** 2) * (g * (y * y / 2 - m * y) - B * y)
    w = np.exp(log_p - log_p.max())
    return w / (w.sum() * grid.dx)


def evolve_mckean_vlasov(p: NesParams, g: float, grid: GridConfig, p0, t_end: float,
                         B: float = 0.0, n_snapshots: int = 0, safety: float = 0.5) -> MVResult:
    """Explicit finite-volume scheme with exponentially fitted fluxes and zero
    flux at both walls. The discrete Boltzmann state is an exact fixed point
    for a frozen mean field."""
    y, dx = grid.centers, grid.dx
    h2 = p.h ** 2
    Dc = h2 / 2
    phi_v = -2 * log_mixture(p, y)  # 2V/h^2 up to a constant
    q = (2 / h2) * (g * y * y / 2 - B * y)
    dy = np.diff(y)
    rho = np.array(p0, dtype=float)
    if rho.shape != y.shape or np.any(rho < 0):
        raise ValueError("initial density must be non-negative on the grid")
    rho = rho / (rho.sum() * dx)

    def coeffs(m):
        dphi = np.diff(phi_v) + np.diff(q) - (2 / h2) * g * m * dy
        return Dc / dx / dx * _bernoulli(dphi), Dc / dx / dx * _bernoulli(-dphi)

    m = float(np.sum(y * rho) * dx)
    fwd, bwd = coeffs(m)
    diag_max = float(np.max(np.concatenate([fwd, [0]])[:] + np.concatenate([[0], bwd])))
    dt = grid.dt if grid.dt is not None else safety / diag_max
    n_steps = max(1, int(math.ceil(t_end / dt)))
    dt = t_end / n_steps if grid.dt is None else dt
    snap_every = max(1, n_steps // n_snapshots) if n_snapshots else 0
    means, masses, times, snaps = [m], [1.0], [0.0], []
    max_err = 0.0
    min_rho = float(rho.min())
    for k in range(1, n_steps + 1):
        fwd, bwd = coeffs(m)
        out_diag = np.zeros_like(rho)
        out_diag[:-1] += fwd
        out_diag[1:] += bwd
        if dt * out_diag.max() > 1.0:
            raise CFLViolation(f"dt={dt:.3e} exceeds the explicit stability limit {1 / out_diag.max():.3e}")
        flux = fwd * rho[:-1] - bwd * rho[1:]  # net rate from cell j to j+1 (per dx)
        mass_before = rho.sum() * dx
        new = rho.copy()
        new[:-1] -= dt * flux
        new[1:] += dt * flux
        rho = new
        mass = rho.sum() * dx
        max_err = max(max_err, abs(mass - mass_before))
        min_rho = min(min_rho, float(rho.min()))
        m = float(np.sum(y * rho) * dx)
        if k % 50 == 0 or k == n_steps:
            means.append(m)
            masses.append(mass)
            times.append(k * dt)
        if snap_every and k % snap_every == 0:
            snaps.append(rho.copy())
    return MVResult(y=y, t=np.array(times), means=np.array(means), masses=np.array(masses),
                    density=rho, snapshots=np.array(snaps), max_mass_step_error=max_err,
                    min_density=min_rho, dt=dt)


def gaussian_on_grid(grid: GridConfig, mean: float, sd: float):
    y = grid.centers
    w = np.exp(-0.5 * ((y - mean) / sd) ** 2)
    return w / (w.sum() * grid.dx)
