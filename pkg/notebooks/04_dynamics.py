"""
Particles and densities
=======================
"""

# %%
import numpy as np

from manes.dynamics import (GridConfig, SimConfig, boltzmann_density, evolve_mckean_vlasov, gaussian_on_grid,
                            simulate_particles)
from manes.gm_potential import NesParams
from manes.mean_field import solve_self_consistency
from manes.phase import critical_volatility

# %% [markdown]
# Five hundred coupled assets, started together. Below h_c they stay in
# the ordered state they were released into.

# %%
for h, init in ((0.35, ("point", 0.0)), (0.15, ("point", 0.3))):
    p = NesParams.symmetric(0.4, 0.1, 1.0, h)
    r = simulate_particles(p, 0.2, SimConfig(N=500, steps=5000, seed=0, init=init))
    print(f"h={h}: time-averaged market mean {r.time_avg_m:+.4f}")

# %% [markdown]
# The density equation relaxes onto the Boltzmann state at the
# self-consistent mean. Lower barriers make that quick.

# %%
mu, sigma, g = 0.3, 0.2, 1.0
p = NesParams.symmetric(mu, sigma, 1.0, 0.8 * critical_volatility(mu, sigma, 1.0, g))
grid = GridConfig.default(p, 300)
res = evolve_mckean_vlasov(p, g, grid, gaussian_on_grid(grid, 0.1, 0.2), 20.0)
root = max(solve_self_consistency(p, g).values)
l1 = np.sum(np.abs(res.density - boltzmann_density(p, g, grid, root))) * grid.dx
print(f"final mean {res.means[-1]:.6f}, root {root:.6f}, L1 {l1:.2e}, mass error {res.max_mass_step_error:.1e}")
