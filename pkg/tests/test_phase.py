import math

import numpy as np
import pytest

from manes.errors import CriticalDivergence, NonCritical
from manes.gm_potential import NesParams
from manes.mean_field import solve_self_consistency, symmetric_b
from manes.phase import (beta_exponent, bifurcation_sweep, critical_amplitude, critical_volatility,
                         landau_coefficients, phase_diagnostics, specific_heat, susceptibility,
                         susceptibility_numeric)

P = NesParams.symmetric(0.4, 0.1, 1.0, 0.3)
HC = 0.24899797


def test_critical_volatility_is_a_fixed_point():
    hc = critical_volatility(0.4, 0.1, 1.0, 0.2)
    assert hc == pytest.approx(HC, abs=1e-7)
    b = symmetric_b(0.4, 0.1, 1.0, 0.2, hc)
    assert hc ** 2 == pytest.approx(2 * 0.2 * 0.16 / (1 + b) - 0.2 * 0.01, rel=1e-12)


def test_non_critical_parameters():
    with pytest.raises(NonCritical):
        critical_volatility(0.05, 0.3, 1.0, 0.5)
    with pytest.raises(ValueError):
        critical_volatility(0.4, 0.1, 1.0, 0.0)


def test_quadratic_landau_coefficient_changes_sign_at_hc():
    below = landau_coefficients(0.4, 0.1, 1.0, 0.2, 0.99 * HC).f2
    above = landau_coefficients(0.4, 0.1, 1.0, 0.2, 1.01 * HC).f2
    assert below < 0 < above


def test_sweep_branch_counts():
    pts = bifurcation_sweep(P, 0.2, [0.2, 0.248, 0.25, 0.3])
    assert [bp.n_roots for bp in pts] == [3, 3, 1, 1]
    assert all(bp.error is None for bp in pts)


def test_beta_amplitude():
    fit = beta_exponent(P, 0.2)
    assert fit.amplitude_numeric == pytest.approx(fit.amplitude_closed_form, rel=5e-3)


def test_amplitude_predicts_branch_near_hc():
    h = 0.999 * HC
    m = max(solve_self_consistency(P.with_(h=h), 0.2).values)
    assert m == pytest.approx(critical_amplitude(0.4, 0.1, 1.0, 0.2, h) * math.sqrt(HC ** 2 - h ** 2), rel=2e-3)


def test_specific_heat_sides():
    assert specific_heat(P, 0.2, 0.995 * HC) > 0.5
    assert specific_heat(P, 0.2, 1.005 * HC) < 0.05


def test_susceptibility_value_and_guards():
    assert susceptibility(P, 0.2) == pytest.approx(11.7936447, rel=1e-7)
    assert susceptibility_numeric(P, 0.2) == pytest.approx(11.7936447, rel=1e-5)
    with pytest.raises(CriticalDivergence):
        susceptibility(P, 0.2, h=math.sqrt(HC ** 2 + 1e-7))
    with pytest.raises(ValueError):
        susceptibility(P, 0.2, h=0.2)


def test_linear_response_to_field():
    chi = susceptibility(P, 0.2)
    m = solve_self_consistency(P, 0.2, 1e-3).values[0]
    assert m == pytest.approx(chi * 1e-3, rel=1e-2)


def test_asymmetric_parameters_rejected():
    with pytest.raises(ValueError):
        beta_exponent(NesParams(0.4, -0.3, 0.1, 0.1, 0.5, 1.0, 0.2), 0.2)


def test_diagnostics_bundle():
    d = phase_diagnostics(P, 0.2)
    assert d.h_c == pytest.approx(HC, abs=1e-7)
    assert abs(d.beta_exponent - 0.5) < 0.05
    assert d.delta_CH == pytest.approx(0.7038575, rel=1e-6)
    assert d.chi == pytest.approx(11.7936447, rel=1e-7)
    assert phase_diagnostics(P.with_(h=0.2), 0.2).chi is None
    assert np.isfinite(d.b) and 0 < d.b < 1
