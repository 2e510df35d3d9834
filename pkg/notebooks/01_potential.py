"""
The two-Gaussian potential
==========================

A log-mixture potential with one or two wells, its stationary density and
the effective potential seen by one asset once the market mean is fixed.
"""

# %%
import numpy as np

from manes.gm_potential import NesParams, potential, renormalize, stationary_density, symmetrize

p = NesParams(mu1=0.4, mu2=-0.4, sigma1=0.1, sigma2=0.1, a=0.5, T=1.0, h=0.2)
y = np.linspace(-0.8, 0.8, 9)
print("V(y):", np.round(potential(p, y), 5))

# %% [markdown]
# The squared ground state is again a Gaussian mixture, now with a third
# component sitting between the two wells.

# %%
st = stationary_density(p)
print("weights", np.round(st.weights, 4), "means", st.means)
print("mean", st.mean(), "variance", round(st.variance(), 5))

# %% [markdown]
# Coupling to the market mean adds g (y^2/2 - m y). The result is another
# mixture potential with shifted, narrower components.

# %%
rp = renormalize(p, g=0.2, m=0.3)
print(rp)

# %% [markdown]
# A slightly lopsided potential behaves like a symmetric one plus a field.

# %%
dec = symmetrize(NesParams(0.41, -0.4, 0.1, 0.1, 0.51, 1.0, 0.2))
print(f"field B0 = {dec.B0:.5f}, linearization ok: {dec.linearization_ok}")
