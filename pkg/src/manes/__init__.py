"""Multi-asset mean-field market model: potentials, self-consistency, phase
diagnostics, heterogeneous linear response, particle and density dynamics,
and option calibration."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .gm_potential import NesParams, stationary_density, potential, symmetrize, renormalize, invert_renormalization  # noqa: F401
from .mean_field import partition_function, free_energy, self_consistency_rhs, solve_self_consistency  # noqa: F401
