import math

import numpy as np
import pytest

import oracles as O
from manes.errors import ConstraintViolation
from manes.gm_potential import (NesParams, field_from_asymmetry, invert_renormalization, potential,
                                potential_gradient, renormalize, stationary_density, symmetrize)


def test_params_validation():
    with pytest.raises(ValueError):
        NesParams(0.1, -0.1, 0.0, 0.1, 0.5, 1.0, 0.2)
    with pytest.raises(ValueError):
        NesParams(0.1, -0.1, 0.1, 0.1, 1.0, 1.0, 0.2)
    with pytest.raises(ValueError):
        NesParams(0.1, -0.1, 0.1, 0.1, 0.5, 0.0, 0.2)
    with pytest.raises(ValueError):
        NesParams.from_dict({"mu1": 0.1})
    d = NesParams(0.1, -0.1, 0.1, 0.1, 0.5, 1.0, 0.2).to_dict()
    with pytest.raises(ValueError):
        NesParams.from_dict({**d, "extra": 1})


def test_json_round_trip():
    p = NesParams(0.3, -0.2, 0.15, 0.4, 0.3, 0.7, 0.25)
    assert NesParams.from_json(p.to_json()) == p


def test_reference_weights():
    p = NesParams(1.200, 0.269, 0.906, 0.303, 0.438, 0.874, 0.2)
    assert np.allclose(stationary_density(p).weights, (0.238, 0.433, 0.329), atol=1e-3)


@pytest.mark.parametrize("p", [NesParams(0.4, -0.4, 0.1, 0.1, 0.5, 1.0, 0.2),
                               NesParams(0.3, -0.6, 0.2, 0.5, 0.3, 0.5, 0.3),
                               NesParams(1.2, 0.269, 0.906, 0.303, 0.438, 0.874, 0.198)])
def test_stationary_density_against_quadrature(p):
    st = stationary_density(p)
    ref = O.stationary_pdf(p)
    ys = np.linspace(min(st.means) - 1, max(st.means) + 1, 25)
    assert np.allclose(st.pdf(ys), [ref(y) for y in ys], rtol=1e-9, atol=1e-14)
    assert st.mean() == pytest.approx(O.stationary_mean(p), abs=1e-10)


def test_potential_shape():
    p = NesParams.symmetric(0.4, 0.1, 1.0, 0.2)
    y = np.linspace(-1, 1, 2001)
    V = potential(p, y)
    assert V.min() == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(V, V[::-1], atol=1e-12)  # even for symmetric parameters
    e = 1e-6
    fd = (potential(p, y + e) - potential(p, y - e)) / (2 * e)
    assert np.allclose(potential_gradient(p, y), fd, atol=1e-6)


def _slope_at_zero(p, p_sym):
    e = 1e-5
    d = lambda y: potential(p, y) - potential(p_sym, y)
    return (d(e) - d(-e)) / (2 * e)


def test_field_from_asymmetry_values():
    assert field_from_asymmetry(0.4, 0.1, 1.0, 0.2, eps_a=0.01) == pytest.approx(-0.032)


@pytest.mark.parametrize("eps", [dict(eps_a=0.004), dict(eps_mu=0.003), dict(eps_sigma=2e-4)])
def test_field_matches_potential_slope(eps):
    mu, sigma, T, h = 0.4, 0.1, 1.0, 0.2
    sym = NesParams.symmetric(mu, sigma, T, h)
    ea, em, es = eps.get("eps_a", 0.0), eps.get("eps_mu", 0.0), eps.get("eps_sigma", 0.0)
    s1, s2 = math.sqrt(sigma ** 2 + es), math.sqrt(sigma ** 2 - es)
    p = NesParams(mu + em, -mu + em, s1, s2, 0.5 + ea, T, h)
    # the potential difference's linear coefficient is the negative field
    slope = _slope_at_zero(p, sym)
    B0 = field_from_asymmetry(mu, sigma, T, h, ea, em, es)
    size = max(abs(ea), abs(em), abs(es))
    assert -slope == pytest.approx(B0, rel=50 * size)


def test_symmetrize_flags_large_asymmetry():
    assert symmetrize(NesParams(0.41, -0.4, 0.1, 0.1, 0.51, 1.0, 0.2)).linearization_ok
    assert not symmetrize(NesParams(0.4, -0.1, 0.1, 0.3, 0.8, 1.0, 0.2)).linearization_ok


def test_renormalized_potential_is_effective_potential():
    p = NesParams(0.3, -0.5, 0.2, 0.35, 0.4, 1.0, 0.3)
    g, m = 0.5, 0.1
    y = np.linspace(-1, 1, 101)
    diff = potential(renormalize(p, g, m).as_nes(), y) - (potential(p, y) + g * (y * y / 2 - m * y))
    assert np.ptp(diff) < 1e-10


def test_renormalization_round_trip():
    p = NesParams(0.3, -0.5, 0.2, 0.35, 0.4, 1.0, 0.3)
    g, m = 0.5, 0.1
    back = invert_renormalization(renormalize(p, g, m), g, m, p.h, p.T)
    assert np.allclose([back.mu1, back.mu2, back.sigma1, back.sigma2, back.a],
                       [p.mu1, p.mu2, p.sigma1, p.sigma2, p.a], atol=1e-12)


def test_inversion_constraint():
    rp = renormalize(NesParams(0.3, -0.5, 0.2, 0.35, 0.4, 1.0, 0.3), 0.5, 0.0)
    with pytest.raises(ConstraintViolation):
        invert_renormalization(rp, 50.0, 0.0, 0.3, 1.0)
