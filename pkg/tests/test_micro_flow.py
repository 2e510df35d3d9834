import math

import numpy as np
import pytest

import oracles as O
from manes.micro_flow import FlowParams, combined_drift, drift_coeffs, impact, self_potential, soft_abs


def test_soft_abs_values():
    assert soft_abs(2.0, 0.1) == pytest.approx(0.009934036, rel=1e-8)
    assert soft_abs(50.0, 1.0) == pytest.approx(1 - math.log(2) / 50, rel=1e-12)
    assert soft_abs(1.0, 0.0) == 0.0


def test_soft_abs_branches_agree_at_switch():
    beta = 3.0
    z = 30 / beta
    lo = soft_abs(beta, z * (1 - 1e-12))
    hi = soft_abs(beta, z * (1 + 1e-12))
    assert hi == pytest.approx(lo, abs=1e-9)
    assert np.isfinite(soft_abs(1.0, 1e6))


def test_param_validation():
    with pytest.raises(ValueError):
        FlowParams(-1, 0, 0, 0.1, 1.0)
    with pytest.raises(ValueError):
        FlowParams(1, 0, 0, 0.1, 0.0)


def test_impact_vanishes_without_flow():
    fp = FlowParams(0.3, 0.1, 0.2, 0.5, 2.0, 0.3, 0.1)
    assert impact(fp, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_coefficients_match_numeric_expansion():
    # fit the drift along y with zero mean field, and along the mean field at y = 0
    fp = FlowParams(0.3, 0.1, 0.2, 0.5, 2.0, 0.3, 0.1)
    d = drift_coeffs(fp)
    c = O.impact_taylor(fp.eta, fp.beta_impact, fp.b)
    y = np.linspace(-1e-2, 1e-2, 41)
    poly = np.polynomial.polynomial.polyfit(y, combined_drift(fp, y, 0.0), 5)
    assert poly[1] == pytest.approx(c[1] * fp.phi, rel=1e-8)
    assert poly[2] == pytest.approx(d.rho, rel=1e-6)
    assert poly[3] == pytest.approx(d.zeta, rel=1e-5)
    slope = (combined_drift(fp, 0.0, 1e-6) - combined_drift(fp, 0.0, -1e-6)) / 2e-6
    assert slope == pytest.approx(d.g, rel=1e-8)
    assert d.xi == pytest.approx(poly[1] + slope, rel=1e-8)


def test_small_b_form_disagrees_in_cubic_term():
    fp = FlowParams(0.3, 0.1, 0.2, 0.5, 2.0, 0.05, 0.0)
    exact, small = drift_coeffs(fp), drift_coeffs(fp, form="small_b")
    assert small.xi == pytest.approx(exact.xi, rel=1e-3)
    assert np.sign(small.zeta - fp.lam * (1 + fp.eta * math.tanh(fp.beta_impact * fp.b))) != \
        np.sign(exact.zeta - fp.lam * (1 + fp.eta * math.tanh(fp.beta_impact * fp.b)))
    with pytest.raises(ValueError):
        drift_coeffs(fp, form="other")


def test_self_potential_derivative_is_drift_polynomial():
    dc = drift_coeffs(FlowParams(0.3, 0.1, 0.2, 0.5, 2.0, 0.3, 0.1))
    y = np.linspace(-0.5, 0.5, 11)
    e = 1e-6
    dU = (self_potential(dc, y + e, 0.1) - self_potential(dc, y - e, 0.1)) / (2 * e)
    assert np.allclose(-dU, 0.1 + dc.xi * y + dc.rho * y ** 2 + dc.zeta * y ** 3, atol=1e-8)
