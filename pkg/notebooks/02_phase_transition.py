"""
Self-consistency and the phase transition
=========================================
"""

# %%
import numpy as np

from manes.gm_potential import NesParams
from manes.mean_field import solve_self_consistency
from manes.phase import (beta_exponent, critical_volatility, specific_heat_jump, specific_heat_jump_numeric,
                         susceptibility)

mu, sigma, T, g = 0.4, 0.1, 1.0, 0.2
hc = critical_volatility(mu, sigma, T, g)
print(f"critical volatility h_c = {hc:.6f}")

# %% [markdown]
# Below h_c the market mean has two ordered states and an unstable
# disordered one. Above it only m = 0 survives.

# %%
for h in (0.10, 0.20, 0.24, 0.26, 0.30):
    res = solve_self_consistency(NesParams.symmetric(mu, sigma, T, h), g)
    print(h, [(round(r.m, 5), r.stability) for r in res.roots])

# %%
p = NesParams.symmetric(mu, sigma, T, 0.2)
fit = beta_exponent(p, g)
print(f"beta = {fit.slope:.4f} (R^2 {fit.r2:.5f}); amplitude {fit.amplitude_numeric:.4f} "
      f"vs {fit.amplitude_closed_form:.4f}")

# %% [markdown]
# The free energy has a kink in its second derivative at h_c. The order
# parameter itself goes to zero like a square root, so a fixed h grid sees
# steps of order sqrt(spacing) next to the critical point.

# %%
print("specific-heat jump", specific_heat_jump(p, g), specific_heat_jump_numeric(p, g))
for h in np.linspace(1.05, 1.2, 4) * hc:
    chi = susceptibility(p, g, h)
    print(f"h={h:.4f} chi={chi:9.4f} chi*(h^2-hc^2)={chi * (h * h - hc * hc):.6f}")
