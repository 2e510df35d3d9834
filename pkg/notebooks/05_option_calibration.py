"""
Pricing and calibration
=======================

Options priced under the stationary mixture, then the five effective
parameters recovered from a noiseless quote chain.
"""

# %%
from importlib import resources

from manes.calibration import calibrate, equilibrium_return, estimate_coupling, price_european, read_quotes_csv
from manes.gm_potential import NesParams

p = NesParams(1.200, 0.269, 0.906, 0.303, 0.438, T=319 / 365, h=0.198)
print("m =", round(equilibrium_return(p), 5), " g =", round(estimate_coupling(p.sigma1, p.sigma2, p.h, p.T), 5))
print("puts", price_european(p, 100.0, 0.01, [80.0, 100.0, 120.0], "P"))

# %%
quotes = read_quotes_csv(resources.files("manes") / "data" / "synthetic_chain.csv")
res = calibrate(quotes, "puts", h=0.3, seed=0, n_starts=64)
print(res.params)
print(f"MAPE {res.mape_percent:.2e}%  m {res.m:.6f}  g {res.g:.4f}  bare params valid: {res.g_valid}")
