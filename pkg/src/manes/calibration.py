"""Option pricing under the stationary mixture and calibration of the
effective parameters to a quote chain."""

from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize
from scipy.special import ndtr
from scipy.stats import qmc

from .errors import ConstraintViolation, InsufficientQuotes, OptimizerFailure
from .gm_potential import NesParams, RenormalizedParams, invert_renormalization, stationary_density

QUOTE_HEADER = ("quote_date", "expiry_date", "type", "strike", "mid_price", "spot", "rate")
DEFAULT_BOUNDS = ((-3.0, 3.0), (-3.0, 3.0), (0.01, 3.0), (0.01, 3.0), (0.02, 0.98))


@dataclass(frozen=True)
class OptionQuote:
    quote_date: _dt.date
    expiry_date: _dt.date
    option_type: str
    strike: float
    mid_price: float
    spot: float
    rate: float

    def __post_init__(self):
        if self.option_type not in ("C", "P"):
            raise ValueError("option_type must be 'C' or 'P'")
        if self.expiry_date <= self.quote_date:
            raise ValueError("expiry must be after the quote date")
        if self.strike <= 0 or self.mid_price < 0 or self.spot <= 0:
            raise ValueError("need strike > 0, spot > 0 and mid_price >= 0")

    @property
    def T(self):
        return year_fraction(self.quote_date, self.expiry_date)


def year_fraction(start: _dt.date, end: _dt.date) -> float:
    """ACT/365."""
    return (end - start).days / 365.0


def read_quotes_csv(path) -> list[OptionQuote]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != QUOTE_HEADER:
            raise ValueError(f"quote CSV header must be {','.join(QUOTE_HEADER)}")
        out = []
        for row in reader:
            out.append(OptionQuote(
                _dt.date.fromisoformat(row["quote_date"]), _dt.date.fromisoformat(row["expiry_date"]),
                row["type"].strip().upper(), float(row["strike"]), float(row["mid_price"]),
                float(row["spot"]), float(row["rate"])))
    return out


def write_quotes_csv(path, quotes):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(QUOTE_HEADER)
        for q in quotes:
            w.writerow([q.quote_date.isoformat(), q.expiry_date.isoformat(), q.option_type,
                        repr(float(q.strike)), repr(float(q.mid_price)), repr(float(q.spot)), repr(float(q.rate))])


def _mixture_parts(params: NesParams):
    st = stationary_density(params)
    return np.asarray(st.weights), np.asarray(st.means), np.asarray(st.variances)


def mixture_forward(params: NesParams, spot: float) -> float:
    w, M, v = _mixture_parts(params)
    return float(spot * np.sum(w * np.exp(M + v / 2)))


def price_european(params: NesParams, spot, rate, strike, option_type):
    """Discounted expected payoff with log(S_T/S_0) drawn from the stationary
    mixture of ``params``; ``params.T`` is the time to expiry."""
    w, M, v = _mixture_parts(params)
    T = params.T
    K = np.asarray(strike, dtype=float)[..., None]
    sd = np.sqrt(v)
    fwd = spot * np.exp(M + v / 2)
    with np.errstate(divide="ignore"):
        d2 = (np.log(spot / K) + M) / sd
    d1 = d2 + sd
    call = np.sum(w * (fwd * ndtr(d1) - K * ndtr(d2)), axis=-1)
    if option_type == "C":
        out = call
    elif option_type == "P":
        put = np.sum(w * (K * ndtr(-d2) - fwd * ndtr(-d1)), axis=-1)
        out = put
    else:
        raise ValueError("option_type must be 'C' or 'P'")
    out = math.exp(-rate * T) * out
    return float(out) if out.ndim == 0 else out


def equilibrium_return(params: NesParams) -> float:
    """First moment of the effective stationary mixture."""
    s1, s2 = params.sigma1 ** 2, params.sigma2 ** 2
    w1, w2, w3 = stationary_density(params).weights
    return ((w1 + w3 * s2 / (s1 + s2)) * params.mu1 * params.T
            + (w2 + w3 * s1 / (s1 + s2)) * params.mu2 * params.T)


def estimate_coupling(sigma1, sigma2, h, T, delta_sigma2=0.05) -> float:
    """g = h^2 / (2 sigma_M^2 T), sigma_M^2 = max(sigma_k^2 / 2) + delta_sigma2."""
    sM2 = max(sigma1 ** 2, sigma2 ** 2) / 2 + delta_sigma2
    return h * h / (2 * sM2 * T)


@dataclass
class CalibrationResult:
    params: NesParams
    g: float
    g_valid: bool
    m: float
    mape: float
    bare: NesParams | None
    side: str
    n_quotes: int
    seed: int
    history: list = field(default_factory=list, repr=False)

    @property
    def mape_percent(self):
        return 100 * self.mape

    def to_dict(self):
        return {
            "params": self.params.to_dict(), "g": self.g, "g_valid": self.g_valid, "m": self.m,
            "mape": self.mape, "bare": None if self.bare is None else self.bare.to_dict(),
            "side": self.side, "n_quotes": self.n_quotes, "seed": self.seed,
        }


def _canonical(x):
    mu1, mu2, s1, s2, a = x
    if mu1 < mu2:
        return np.array([mu2, mu1, s2, s1, 1 - a])
    return np.asarray(x, dtype=float)


def _chain_arrays(quotes, side):
    code = {"calls": "C", "puts": "P", "C": "C", "P": "P"}.get(side)
    if code is None:
        raise ValueError("side must be 'calls' or 'puts'")
    sel = [q for q in quotes if q.option_type == code]
    if len(sel) < 6:
        raise InsufficientQuotes(f"{len(sel)} {side} quotes; at least 6 required")
    keys = {(q.quote_date, q.expiry_date, q.spot, q.rate) for q in sel}
    if len(keys) != 1:
        raise InsufficientQuotes("calibration needs a single quote date, expiry, spot and rate")
    if any(q.mid_price <= 0 for q in sel):
        raise InsufficientQuotes("percentage errors need strictly positive prices")
    q0 = sel[0]
    K = np.array([q.strike for q in sel])
    P = np.array([q.mid_price for q in sel])
    return code, q0.T, q0.spot, q0.rate, K, P


def calibrate(quotes, side, h, seed=0, n_starts=128, n_local=8, g=None, delta_sigma2=0.05,
              bounds=DEFAULT_BOUNDS) -> CalibrationResult:
    """Fit (mu1, mu2, sigma1, sigma2, a) of the effective potential by MAPE.

    ``h`` does not enter stationary prices, so it is an input; it sets g
    through the coupling estimate and the bare-parameter inversion.
    """
    code, T, spot, rate, K, P = _chain_arrays(quotes, side)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    history = []
    best = [math.inf]

    def loss(x):
        x = np.clip(x, lo, hi)
        try:
            prm = NesParams(x[0], x[1], x[2], x[3], x[4], T, h)
        except ValueError:
            return math.inf
        model = price_european(prm, spot, rate, K, code)
        val = float(np.mean(np.abs(model - P) / P))
        if not math.isfinite(val):
            return math.inf
        if val < best[0]:
            best[0] = val
            history.append(val)
        return val

    starts = qmc.scale(qmc.Sobol(d=5, scramble=True, seed=seed).random(n_starts), lo, hi)
    vals = np.array([loss(s) for s in starts])
    order = np.argsort(vals, kind="stable")[:n_local]
    candidates = []
    for idx in order:
        x = starts[idx]
        for _ in range(3):  # restarted simplex
            r = minimize(loss, x, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                         options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000, "adaptive": True})
            if np.allclose(r.x, x, atol=1e-12):
                break
            x = r.x
        x = _polish(x, lo, hi, T, h, spot, rate, K, P, code, loss)
        candidates.append((loss(x), int(idx), x))
    candidates.sort(key=lambda c: (c[0], c[1]))
    fval, _, xbest = candidates[0]
    if not math.isfinite(fval):
        raise OptimizerFailure("no finite loss found", best=xbest)
    x = _canonical(np.clip(xbest, lo, hi))
    params = NesParams(*(float(v) for v in x), T, h)
    model = price_european(params, spot, rate, K, code)
    mape = float(np.mean(np.abs(model - P) / P))
    m = equilibrium_return(params)
    g_est = estimate_coupling(params.sigma1, params.sigma2, h, T, delta_sigma2) if g is None else g
    rp = RenormalizedParams(params.mu1, params.mu2, params.sigma1, params.sigma2, params.a, 0.0, T, h)
    try:
        bare = invert_renormalization(rp, g_est, m, h, T)
        valid = True
    except ConstraintViolation:
        bare, valid = None, False
    return CalibrationResult(params, g_est, valid, m, mape, bare, "calls" if code == "C" else "puts",
                             len(K), seed, history)


def _polish(x, lo, hi, T, h, spot, rate, K, P, code, loss):
    """Smooth relative-error least squares from a simplex optimum; kept only
    if it lowers the percentage loss."""
    def resid(z):
        prm = NesParams(z[0], z[1], z[2], z[3], z[4], T, h)
        return (price_european(prm, spot, rate, K, code) - P) / P
    try:
        r = least_squares(resid, np.clip(x, lo + 1e-12, hi - 1e-12), bounds=(lo, hi),
                          xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    except ValueError:
        return x
    return r.x if loss(r.x) < loss(x) else x


def synthetic_chain(params: NesParams, spot=100.0, rate=0.02, option_type="P", n=20,
                    quote_date=_dt.date(2024, 1, 2), lo_q=0.05, hi_q=0.95):
    """Noiseless quotes at strikes spanning mixture quantiles. ``params.T`` is
    replaced by the ACT/365 tenor implied by the whole-day expiry."""
    days = max(1, round(params.T * 365))
    expiry = quote_date + _dt.timedelta(days=days)
    prm = params.with_(T=days / 365.0)
    st = stationary_density(prm)
    ys = np.linspace(*_quantile_range(st, lo_q, hi_q), n)
    K = spot * np.exp(ys)
    prices = price_european(prm, spot, rate, K, option_type)
    return prm, [OptionQuote(quote_date, expiry, option_type, float(k), float(pr), spot, rate)
                 for k, pr in zip(K, prices)]


def _quantile_range(st, lo_q, hi_q):
    from scipy.optimize import brentq
    M, v = np.asarray(st.means), np.asarray(st.variances)
    a, b = float(np.min(M - 10 * np.sqrt(v))), float(np.max(M + 10 * np.sqrt(v)))
    q = lambda p: brentq(lambda y: float(st.cdf(y)) - p, a, b)
    return q(lo_q), q(hi_q)
