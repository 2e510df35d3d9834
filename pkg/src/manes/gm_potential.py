"""Log-Gaussian-mixture potential, its stationary density, symmetrization and
interaction renormalization."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import expit, logsumexp

from .errors import ConstraintViolation

_LOG_2PI = math.log(2.0 * math.pi)
PARAM_KEYS = ("mu1", "mu2", "sigma1", "sigma2", "a", "T", "h")


@dataclass(frozen=True)
class NesParams:
    """Two-component potential parameters, annualized, plus horizon T and noise h."""

    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    a: float
    T: float
    h: float

    def __post_init__(self):
        vals = [self.mu1, self.mu2, self.sigma1, self.sigma2, self.a, self.T, self.h]
        if not all(math.isfinite(float(v)) for v in vals):
            raise ValueError("parameters must be finite")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ValueError("sigma1 and sigma2 must be positive")
        if not 0.0 < self.a < 1.0:
            raise ValueError("a must lie in (0, 1)")
        if self.T <= 0 or self.h <= 0:
            raise ValueError("T and h must be positive")

    @classmethod
    def symmetric(cls, mu, sigma, T, h):
        return cls(mu, -mu, sigma, sigma, 0.5, T, h)

    def is_symmetric(self, tol=1e-12):
        return (abs(self.mu1 + self.mu2) <= tol and abs(self.sigma1 - self.sigma2) <= tol
                and abs(self.a - 0.5) <= tol)

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(PARAM_KEYS)
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        missing = set(PARAM_KEYS) - set(d)
        if missing:
            raise ValueError(f"missing parameter keys: {sorted(missing)}")
        return cls(**{k: float(d[k]) for k in PARAM_KEYS})

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class MixtureStationary:
    C: float
    Omega: float
    weights: tuple
    means: tuple
    variances: tuple

    def logpdf(self, y):
        y = np.asarray(y, dtype=float)[..., None]
        w, mu, v = (np.asarray(x) for x in (self.weights, self.means, self.variances))
        with np.errstate(divide="ignore"):
            lw = np.log(w)
        terms = lw - 0.5 * (_LOG_2PI + np.log(v)) - (y - mu) ** 2 / (2 * v)
        return logsumexp(terms, axis=-1)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def cdf(self, y):
        from scipy.stats import norm
        y = np.asarray(y, dtype=float)[..., None]
        return np.sum(np.asarray(self.weights) * norm.cdf(y, self.means, np.sqrt(self.variances)), axis=-1)

    def mean(self):
        return float(np.dot(self.weights, self.means))

    def variance(self):
        w, mu, v = (np.asarray(x) for x in (self.weights, self.means, self.variances))
        m = float(w @ mu)
        return float(w @ (v + mu ** 2) - m * m)

    def sample(self, n, rng):
        k = rng.choice(3, size=n, p=np.asarray(self.weights) / np.sum(self.weights))
        return rng.normal(np.asarray(self.means)[k], np.sqrt(np.asarray(self.variances)[k]))


def stationary_density(p: NesParams) -> MixtureStationary:
    """Three-component mixture for the squared ground state."""
    s1, s2, T, a = p.sigma1, p.sigma2, p.T, p.a
    ssum = s1 * s1 + s2 * s2
    cross = math.exp(-((p.mu1 - p.mu2) ** 2) * T / (2.0 * ssum)) / math.sqrt(ssum / 2.0)
    terms = np.array([(1 - a) ** 2 / s1, a * a / s2, 2 * a * (1 - a) * cross])
    omega = float(terms.sum())
    mu3 = (p.mu1 * s2 * s2 + p.mu2 * s1 * s1) / ssum
    var3 = s1 * s1 * s2 * s2 / ssum
    return MixtureStationary(
        C=math.sqrt(2.0 * math.sqrt(math.pi * T) / omega),
        Omega=omega,
        weights=tuple(float(x) for x in terms / omega),
        means=(p.mu1 * T, p.mu2 * T, mu3 * T),
        variances=(s1 * s1 * T / 2.0, s2 * s2 * T / 2.0, var3 * T),
    )


def log_mixture(p: NesParams, y):
    """log[(1-a) phi(y|mu1 T, s1^2 T) + a phi(y|mu2 T, s2^2 T)]."""
    y = np.asarray(y, dtype=float)
    v1, v2 = p.sigma1 ** 2 * p.T, p.sigma2 ** 2 * p.T
    l1 = math.log1p(-p.a) - 0.5 * (_LOG_2PI + math.log(v1)) - (y - p.mu1 * p.T) ** 2 / (2 * v1)
    l2 = math.log(p.a) - 0.5 * (_LOG_2PI + math.log(v2)) - (y - p.mu2 * p.T) ** 2 / (2 * v2)
    return np.logaddexp(l1, l2)


def log_psi0(p: NesParams, y):
    return math.log(stationary_density(p).C) + log_mixture(p, y)


def log_mixture_grad(p: NesParams, y):
    """d/dy of log_mixture, via component responsibilities."""
    y = np.asarray(y, dtype=float)
    v1, v2 = p.sigma1 ** 2 * p.T, p.sigma2 ** 2 * p.T
    l1 = math.log1p(-p.a) - 0.5 * math.log(v1) - (y - p.mu1 * p.T) ** 2 / (2 * v1)
    l2 = math.log(p.a) - 0.5 * math.log(v2) - (y - p.mu2 * p.T) ** 2 / (2 * v2)
    r2 = expit(l2 - l1)
    return -(1 - r2) * (y - p.mu1 * p.T) / v1 - r2 * (y - p.mu2 * p.T) / v2


def _grid_bounds(p: NesParams, nsig=8.0):
    smax = max(p.sigma1, p.sigma2) * math.sqrt(p.T)
    lo = min(p.mu1, p.mu2) * p.T - nsig * smax
    hi = max(p.mu1, p.mu2) * p.T + nsig * smax
    return lo, hi


@lru_cache(maxsize=256)
def _max_log_psi0(p: NesParams) -> float:
    lo, hi = _grid_bounds(p)
    ys = np.linspace(lo, hi, 4001)
    vals = log_psi0(p, ys)
    i = int(np.argmax(vals))
    a, b = ys[max(i - 1, 0)], ys[min(i + 1, len(ys) - 1)]
    res = minimize_scalar(lambda y: -float(log_psi0(p, y)), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-13})
    return max(float(vals[i]), -float(res.fun))


def potential(p: NesParams, y):
    """V(y) = -h^2 log Psi0(y) + V0, shifted so that its minimum is zero."""
    return p.h ** 2 * (_max_log_psi0(p) - log_psi0(p, y))


def potential_gradient(p: NesParams, y):
    return -p.h ** 2 * log_mixture_grad(p, y)


@dataclass(frozen=True)
class SymmetricDecomposition:
    mu: float
    sigma: float
    eps_a: float
    eps_mu: float
    eps_sigma: float
    B0: float
    T: float
    h: float
    linearization_ok: bool

    def symmetric_params(self) -> NesParams:
        return NesParams.symmetric(self.mu, self.sigma, self.T, self.h)


def field_from_asymmetry(mu, sigma, T, h, eps_a=0.0, eps_mu=0.0, eps_sigma=0.0):
    """Linear field B0 equivalent to small asymmetries of a symmetric potential.

    Coefficients are the exact first-order slopes of V - V_sym at y = 0.
    """
    s2 = sigma * sigma
    c_mu = h * h / s2 * (1.0 - mu * mu * T / s2)
    c_sig = h * h * mu / (s2 * s2) * (mu * mu * T / (2.0 * s2) - 1.5)
    c_a = -2.0 * mu * h * h / s2
    return c_mu * eps_mu + c_sig * eps_sigma + c_a * eps_a


def symmetrize(p: NesParams, threshold: float = 0.2) -> SymmetricDecomposition:
    mu = (p.mu1 - p.mu2) / 2.0
    eps_mu = (p.mu1 + p.mu2) / 2.0
    s2 = (p.sigma1 ** 2 + p.sigma2 ** 2) / 2.0
    eps_sigma = (p.sigma1 ** 2 - p.sigma2 ** 2) / 2.0
    eps_a = p.a - 0.5
    sigma = math.sqrt(s2)
    ok = (abs(eps_a) <= threshold * 0.5
          and abs(eps_mu) <= threshold * max(abs(mu), 1e-300)
          and abs(eps_sigma) <= threshold * s2)
    B0 = field_from_asymmetry(mu, sigma, p.T, p.h, eps_a, eps_mu, eps_sigma)
    return SymmetricDecomposition(mu, sigma, eps_a, eps_mu, eps_sigma, B0, p.T, p.h, ok)


@dataclass(frozen=True)
class RenormalizedParams:
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    a: float
    V_hat: float
    T: float
    h: float

    def as_nes(self) -> NesParams:
        return NesParams(self.mu1, self.mu2, self.sigma1, self.sigma2, self.a, self.T, self.h)


def _component_logweights(p: NesParams, g, m):
    # log of (1-a) h/sqrt(D1) exp(-g (m - mu1 T)^2 / (2 D1)) and the a-term
    h2 = p.h ** 2
    D1 = h2 + g * p.sigma1 ** 2 * p.T
    D2 = h2 + g * p.sigma2 ** 2 * p.T
    m = np.asarray(m, dtype=float)
    l1 = math.log1p(-p.a) + 0.5 * math.log(h2 / D1) - g * (m - p.mu1 * p.T) ** 2 / (2 * D1)
    l2 = math.log(p.a) + 0.5 * math.log(h2 / D2) - g * (m - p.mu2 * p.T) ** 2 / (2 * D2)
    return l1, l2, D1, D2


def v_hat(p: NesParams, g, m):
    l1, l2, _, _ = _component_logweights(p, g, m)
    m = np.asarray(m, dtype=float)
    return g * m * m / (2 * p.h ** 2) + np.logaddexp(l1, l2)


def renormalize_arrays(p: NesParams, g, m):
    """Vectorized barred parameters: (mu1, mu2, sigma1, sigma2, a, V_hat)."""
    if g < 0:
        raise ValueError("g must be non-negative")
    h2 = p.h ** 2
    l1, l2, D1, D2 = _component_logweights(p, g, m)
    m = np.asarray(m, dtype=float)
    mu1 = (h2 * p.mu1 + g * p.sigma1 ** 2 * m) / D1
    mu2 = (h2 * p.mu2 + g * p.sigma2 ** 2 * m) / D2
    s1 = p.sigma1 * math.sqrt(h2 / D1)
    s2 = p.sigma2 * math.sqrt(h2 / D2)
    abar = expit(l2 - l1)
    vh = g * m * m / (2 * h2) + np.logaddexp(l1, l2)
    return mu1, mu2, s1, s2, abar, vh


def renormalize(p: NesParams, g: float, m: float) -> RenormalizedParams:
    mu1, mu2, s1, s2, abar, vh = renormalize_arrays(p, g, float(m))
    return RenormalizedParams(float(mu1), float(mu2), float(s1), float(s2), float(abar),
                              float(vh), p.T, p.h)


def invert_renormalization(rp: RenormalizedParams, g: float, m: float, h: float, T: float) -> NesParams:
    h2 = h * h
    fac = []
    for sb in (rp.sigma1, rp.sigma2):
        f = 1.0 - g * sb * sb * T / h2
        if f <= 0:
            raise ConstraintViolation(
                f"g={g} must be below h^2/(sigma_bar^2 T)={h2 / (sb * sb * T)}")
        fac.append(f)
    s1 = rp.sigma1 / math.sqrt(fac[0])
    s2 = rp.sigma2 / math.sqrt(fac[1])
    mu1 = (rp.mu1 - g * rp.sigma1 ** 2 * m / h2) / fac[0]
    mu2 = (rp.mu2 - g * rp.sigma2 ** 2 * m / h2) / fac[1]
    D1 = h2 + g * s1 * s1 * T
    D2 = h2 + g * s2 * s2 * T
    # log of ((1-abar)/abar) sqrt(D1/D2) exp(...)
    log_odds = (math.log1p(-rp.a) - math.log(rp.a) + 0.5 * math.log(D1 / D2)
                + g * (m - mu1 * T) ** 2 / (2 * D1) - g * (m - mu2 * T) ** 2 / (2 * D2))
    a = float(expit(-log_odds))
    return NesParams(mu1, mu2, s1, s2, a, T, h)
