"""Heterogeneous market: local mean fields, linear response, covariances and
fluctuation-response checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NearSingular, NonConvergence


@dataclass(frozen=True)
class HeterogeneousMarket:
    mu: np.ndarray
    sigma: np.ndarray
    B: np.ndarray
    g: float
    h: float
    T: float

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        B = np.broadcast_to(np.asarray(self.B, dtype=float), mu.shape).copy()
        if sigma.shape != mu.shape:
            raise ValueError("mu and sigma must have equal length")
        if np.any(sigma <= 0):
            raise ValueError("all sigma_i must be positive")
        if self.g < 0 or self.h <= 0 or self.T <= 0:
            raise ValueError("need g >= 0, h > 0, T > 0")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "B", B)

    @property
    def N(self):
        return self.mu.size

    @classmethod
    def homogeneous(cls, mu, sigma, g, h, T, N, B=0.0):
        return cls(np.full(N, float(mu)), np.full(N, float(sigma)), np.full(N, float(B)), g, h, T)


def _per_asset(mkt):
    h2 = mkt.h ** 2
    s2T = mkt.sigma ** 2 * mkt.T
    D = h2 + mkt.g * s2T
    b = np.exp(-h2 * mkt.mu ** 2 * mkt.T / (mkt.sigma ** 2 * D))
    return h2, s2T, D, b


def response_coefficients(mkt: HeterogeneousMarket) -> np.ndarray:
    """A_i = 1 - h^2 (h^2 - h_c,i^2) / D_i^2, with h_c,i^2 built from b_i(h)."""
    h2, s2T, D, b = _per_asset(mkt)
    hc2 = 2 * mkt.g * mkt.mu ** 2 * mkt.T ** 2 / (1 + b) - mkt.g * s2T
    return (h2 * hc2 + 2 * mkt.g * h2 * s2T + mkt.g ** 2 * s2T ** 2) / D ** 2


def response_matrix(A: np.ndarray) -> np.ndarray:
    N = A.size
    return np.eye(N) * (1 + A / N) - np.outer(A / N, np.ones(N))


def sherman_morrison_inverse(d, u, v):
    """Dense inverse of diag(d) + u v^T."""
    di = 1.0 / d
    denom = 1.0 + np.dot(v, di * u)
    if abs(denom) < 1e-300:
        raise NearSingular("Sherman-Morrison denominator vanishes")
    return np.diag(di) - np.outer(di * u, v * di) / denom


def g_inverse(A):
    """Exact inverse of G_ij = delta_ij (1 + A_i/N) - A_i/N."""
    A = np.asarray(A, dtype=float)
    N = A.size
    return sherman_morrison_inverse(1 + A / N, -A / N, np.ones(N))


def g_inverse_large_n(A):
    A = np.asarray(A, dtype=float)
    N = A.size
    return np.eye(N) + np.outer(A, np.ones(N)) / (N * (1 - A.mean()))


def g_inverse_as_printed(A):
    """Closed form with N + A_j denominators and a bare 1 - <A> factor, kept
    only for comparison against the exact inverse."""
    A = np.asarray(A, dtype=float)
    N = A.size
    off = N * A[:, None] / ((N + A[:, None]) * (N + A[None, :]) * (1 - A.mean()))
    return np.diag(N / (N + A)) + off


@dataclass(frozen=True)
class LinearResponse:
    A: np.ndarray
    G: np.ndarray
    G_inv: np.ndarray
    G_inv_large_n: np.ndarray
    chi: np.ndarray
    C: np.ndarray
    chi_large_n: np.ndarray
    C_large_n: np.ndarray
    mean_A: float


def linear_response(mkt: HeterogeneousMarket) -> LinearResponse:
    A = response_coefficients(mkt)
    mean_A = float(A.mean())
    if 1 - mean_A < 1e-8:
        raise NearSingular(f"1 - <A> = {1 - mean_A:.3e}; linear response is invalid")
    if mkt.g == 0:
        # no coupling: responses are purely local
        N = A.size
        b = _per_asset(mkt)[3]
        chi = np.diag(mkt.sigma ** 2 * mkt.T / mkt.h ** 2
                      * (1 + 2 * mkt.mu ** 2 * mkt.T / (mkt.sigma ** 2 * (1 + b))))
        G = np.eye(N)
        return LinearResponse(A, G, G, G, chi, mkt.h ** 2 / 2 * chi, chi, mkt.h ** 2 / 2 * chi, mean_A)
    G = response_matrix(A)
    Gi = g_inverse(A)
    Gl = g_inverse_large_n(A)
    chi = Gi * A[None, :] / mkt.g
    chi_l = Gl * A[None, :] / mkt.g
    h2 = mkt.h ** 2
    return LinearResponse(A, G, Gi, Gl, chi, h2 / 2 * chi, chi_l, h2 / 2 * chi_l, mean_A)


def _local_rhs(mkt, psi):
    h2, s2T, D, b = _per_asset(mkt)
    x = 2 * mkt.mu * mkt.T * mkt.g * psi / D
    ax = np.abs(x)
    ratio = np.sign(x) * (1 - np.exp(-2 * ax)) / (1 + np.exp(-2 * ax) + 2 * b * np.exp(-ax))
    return (mkt.g * s2T * psi + h2 * mkt.mu * mkt.T * ratio) / D


def _fields(mkt, m, exclude_self):
    tot = m.sum()
    mean = (tot - m) / mkt.N if exclude_self else np.full_like(m, tot / mkt.N)
    return mean + mkt.B / mkt.g


def solve_local_mean_fields(mkt: HeterogeneousMarket, m0=None, damping=0.5, max_iter=10_000,
                            tol=1e-10, exclude_self=True) -> np.ndarray:
    """Damped fixed-point iteration of m_i = F_i(psi_i) with
    psi_i = (1/N) sum_{j != i} m_j + B_i / g (self term kept if exclude_self is False)."""
    if mkt.g <= 0:
        raise ValueError("local mean fields need g > 0")
    m = np.zeros(mkt.N) if m0 is None else np.array(m0, dtype=float)
    res = math.inf
    for _ in range(max_iter):
        target = _local_rhs(mkt, _fields(mkt, m, exclude_self))
        res = float(np.max(np.abs(target - m)))
        if res < tol:
            break
        m = (1 - damping) * m + damping * target
    else:
        raise NonConvergence(f"no convergence after {max_iter} iterations", residual=res)
    # polish so that the reported residual is well inside tolerance
    for _ in range(50):
        target = _local_rhs(mkt, _fields(mkt, m, exclude_self))
        if np.max(np.abs(target - m)) < tol * 1e-2:
            break
        m = (1 - damping) * m + damping * target
    return m


def local_residual(mkt, m, exclude_self=True):
    return _local_rhs(mkt, _fields(mkt, np.asarray(m, float), exclude_self)) - m


def mean_correlation(A, N):
    return A / (N * (1 - A))


def mean_volatility(A, g, h, T):
    return h / math.sqrt(T) * math.sqrt(A / (2 * g))


def coupling_from_market_stats(rho_M, sigma_M, h, T, N):
    """Invert mean correlation and mean volatility for (A, g)."""
    A = N * rho_M / (1 + N * rho_M)
    return A, h * h * A / (2 * sigma_M ** 2 * T)


@dataclass(frozen=True)
class FluctuationResponseReport:
    mean_covariance: float
    rhs: float
    rel_error: float
    chi: float
    sigma_M: float
    rho_M: float
    rho_M_proxy: float
    exact_finite_n_mean_covariance: float


def fluctuation_response_check(mkt: HeterogeneousMarket) -> FluctuationResponseReport:
    """Compare (1/N^2) sum C_ij with (h^2/2N) chi for a homogeneous market."""
    if np.ptp(mkt.mu) > 0 or np.ptp(mkt.sigma) > 0:
        raise ValueError("homogeneous parameters required")
    lr = linear_response(mkt)
    N, g, h2 = mkt.N, mkt.g, mkt.h ** 2
    A = float(lr.A[0])
    chi = A / (g * (1 - A))  # homogeneous susceptibility
    lhs = float(lr.C_large_n.sum()) / N ** 2
    rhs = h2 / (2 * N) * chi
    C = lr.C_large_n
    diag = float(np.trace(C)) / N
    off = (float(C.sum()) - N * diag) / (N * (N - 1))
    return FluctuationResponseReport(
        mean_covariance=lhs, rhs=rhs, rel_error=abs(lhs - rhs) / abs(rhs), chi=chi,
        sigma_M=mean_volatility(A, g, mkt.h, mkt.T), rho_M=mean_correlation(A, N),
        rho_M_proxy=off / diag, exact_finite_n_mean_covariance=float(lr.C.sum()) / N ** 2)
