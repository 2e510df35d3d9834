"""Investor flow rule, soft-abs price impact and the resulting drift."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FlowParams:
    phi: float
    lam: float
    kappa: float
    eta: float
    beta_impact: float
    a_hat: float = 0.0
    abar_tau: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if min(self.phi, self.lam, self.kappa) < 0:
            raise ValueError("phi, lam and kappa must be non-negative")
        if self.eta < 0 or self.beta_impact <= 0:
            raise ValueError("eta must be non-negative and beta_impact positive")

    @property
    def b(self):
        return self.a_hat - self.abar_tau


def flow_rate(fp: FlowParams, y, mean_y):
    y = np.asarray(y, dtype=float)
    return fp.phi * y + fp.lam * (y * y * y) + fp.kappa * np.asarray(mean_y, dtype=float)  # y*y*y keeps exact oddness


def soft_abs(beta, z):
    """(1/beta) log cosh(beta z), switching to the asymptotic form for |beta z| > 30."""
    z = np.asarray(z, dtype=float)
    x = np.abs(beta * z)
    big = x > 30
    xs = np.where(big, 0.0, x)
    out = np.where(big, x - math.log(2.0) + np.log1p(np.exp(-2 * x)), np.log(np.cosh(xs)))
    out = out / beta
    return float(out) if out.ndim == 0 else out


def impact(fp: FlowParams, a):
    b, beta = fp.b, fp.beta_impact
    return -fp.eta * (np.asarray(soft_abs(beta, np.asarray(a) - b)) - soft_abs(beta, -b))


def combined_drift(fp: FlowParams, y, mean_y):
    a = flow_rate(fp, y, mean_y)
    return a + impact(fp, a)


@dataclass(frozen=True)
class DriftCoeffs:
    xi: float
    rho: float
    zeta: float
    g: float


def drift_coeffs(fp: FlowParams, form: str = "exact") -> DriftCoeffs:
    """Small-y coefficients of a + f(a) with a = phi y + lam y^3 + kappa mean_y.

    ``exact`` uses the Taylor coefficients of f at a = 0 (tanh and sech^2 of
    beta b); ``small_b`` is their expansion to third order in beta b as
    commonly printed, which carries the opposite sign in the cubic pieces.
    """
    eta, beta, b = fp.eta, fp.beta_impact, fp.b
    if form == "exact":
        t = math.tanh(beta * b)
        s2 = 1.0 - t * t
        c1 = 1 + eta * t
        c2 = -0.5 * eta * beta * s2
        c3 = -eta * beta ** 2 * s2 * t / 3
    elif form == "small_b":
        c1 = 1 + eta * beta * b * (1 + beta ** 2 * b ** 2 / 3)
        c2 = -0.5 * beta * eta * (1 + beta ** 2 * b ** 2)
        c3 = beta ** 3 * b * eta / 3
    else:
        raise ValueError("form must be 'exact' or 'small_b'")
    return DriftCoeffs(xi=c1 * (fp.phi + fp.kappa), rho=c2 * fp.phi ** 2,
                       zeta=c3 * fp.phi ** 3 + c1 * fp.lam, g=c1 * fp.kappa)


def self_potential(dc: DriftCoeffs, y, theta=0.0):
    """Quartic sketch U(y) = -theta y - xi y^2/2 - rho y^3/3 - zeta y^4/4."""
    y = np.asarray(y, dtype=float)
    return -theta * y - dc.xi * y ** 2 / 2 - dc.rho * y ** 3 / 3 - dc.zeta * y ** 4 / 4
