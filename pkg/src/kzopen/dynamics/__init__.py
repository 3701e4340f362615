"""Open-system mode dynamics and excitation-density quadrature."""
from .core import (DensityResult, DynamicsOptions, FixedVelocityResult,
                   IntegrationError, ModeState, Trajectory, default_eps_max,
                   energy, evolve_mode, excitation_density,
                   excitation_trajectory, fixed_velocity_density,
                   initial_states, integrate_labels, make_grid, mode_rhs,
                   relax_at_fixed_point, thermal_density)
from .grids import ModeGrid, exact_grid, local_grid

__all__ = [
    "DensityResult", "DynamicsOptions", "FixedVelocityResult",
    "IntegrationError", "ModeState", "Trajectory", "ModeGrid",
    "default_eps_max", "energy", "evolve_mode", "excitation_density",
    "excitation_trajectory", "exact_grid", "fixed_velocity_density",
    "initial_states", "integrate_labels", "local_grid", "make_grid",
    "mode_rhs", "relax_at_fixed_point", "thermal_density",
]
