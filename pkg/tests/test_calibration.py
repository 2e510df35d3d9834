import datetime as dt
import math
from importlib import resources

import numpy as np
import pytest

import oracles as O
from manes.calibration import (OptionQuote, calibrate, equilibrium_return, estimate_coupling, mixture_forward,
                               price_european, read_quotes_csv, synthetic_chain, write_quotes_csv, year_fraction)
from manes.errors import InsufficientQuotes
from manes.gm_potential import NesParams

FIXTURE = resources.files("manes") / "data" / "synthetic_chain.csv"
P = NesParams(0.35, -0.4, 0.2, 0.6, 0.55, 0.5, 0.3)


def test_year_fraction():
    assert year_fraction(dt.date(2020, 11, 6), dt.date(2021, 9, 21)) == pytest.approx(319 / 365)


def test_quote_validation():
    d = dt.date(2024, 1, 2)
    with pytest.raises(ValueError):
        OptionQuote(d, d, "C", 100, 1, 100, 0)
    with pytest.raises(ValueError):
        OptionQuote(d, d + dt.timedelta(1), "X", 100, 1, 100, 0)


def test_csv_round_trip(tmp_path):
    quotes = read_quotes_csv(FIXTURE)
    assert len(quotes) == 20
    path = tmp_path / "q.csv"
    write_quotes_csv(path, quotes)
    assert read_quotes_csv(path) == quotes
    assert path.read_text() == FIXTURE.read_text()


def test_csv_header_checked(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("date,strike\n2024-01-01,100\n")
    with pytest.raises(ValueError):
        read_quotes_csv(path)


@pytest.mark.parametrize("K,typ", [(70.0, "P"), (100.0, "P"), (100.0, "C"), (140.0, "C")])
def test_price_against_quadrature(K, typ):
    assert price_european(P, 100.0, 0.02, K, typ) == pytest.approx(O.price_by_quad(P, 100.0, 0.02, K, typ), rel=1e-8)


def test_parity_and_limits():
    K = np.linspace(50, 150, 11)
    c, q = price_european(P, 100, 0.03, K, "C"), price_european(P, 100, 0.03, K, "P")
    assert np.allclose(c - q, math.exp(-0.03 * P.T) * (mixture_forward(P, 100) - K), atol=1e-10)
    assert np.all(c >= 0) and np.all(q >= 0)
    assert np.all(np.diff(c) < 0) and np.all(np.diff(q) > 0)


@pytest.mark.parametrize("p", [P, NesParams(1.2, 0.269, 0.906, 0.303, 0.438, 319 / 365, 0.198)])
def test_equilibrium_return_is_first_moment(p):
    assert equilibrium_return(p) == pytest.approx(O.stationary_mean(p), abs=1e-10)


def test_equilibrium_return_symmetric():
    assert equilibrium_return(NesParams.symmetric(0.3, 0.2, 0.5, 0.2)) == pytest.approx(0.0, abs=1e-15)


def test_coupling_examples():
    assert estimate_coupling(0.229, 1.10, 0.630, 186 / 365) == pytest.approx(0.57, rel=0.10)
    assert estimate_coupling(0.168, 1.423, 0.221, 319 / 365) == pytest.approx(0.03, rel=0.20)
    assert estimate_coupling(0.2, 0.3, 0.3, 1.0, delta_sigma2=1e12) < 1e-12


def test_insufficient_quotes():
    _, quotes = synthetic_chain(P, n=5)
    with pytest.raises(InsufficientQuotes):
        calibrate(quotes, "puts", h=0.3)
    with pytest.raises(InsufficientQuotes):
        calibrate(read_quotes_csv(FIXTURE), "calls", h=0.3)
    with pytest.raises(ValueError):
        calibrate(read_quotes_csv(FIXTURE), "both", h=0.3)


def test_calibrate_bundled_chain():
    res = calibrate(read_quotes_csv(FIXTURE), "puts", h=0.3, seed=0, n_starts=64)
    assert res.mape < 1e-3
    assert res.m == pytest.approx(equilibrium_return(P.with_(T=182 / 365)), abs=1e-3)
    assert res.params.mu1 >= res.params.mu2
    assert all(b < a for a, b in zip(res.history, res.history[1:]))
    q = read_quotes_csv(FIXTURE)
    model = price_european(res.params, 100.0, 0.02, [x.strike for x in q], "P")
    assert res.mape == pytest.approx(np.mean(np.abs(model / [x.mid_price for x in q] - 1)), abs=1e-12)
    assert set(res.to_dict()) >= {"params", "g", "g_valid", "m", "mape", "bare"}
