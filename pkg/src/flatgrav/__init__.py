"""Razor-thin self-gravitating disk equilibria.

Steady states of the flat (planar) collisionless system are built by
minimizing a reduced energy over surface densities, lifted back to
phase space, and probed for stability with a particle harness.  The
submodules split along those lines:

casimir  convex phase-space profiles, conjugates, velocity reduction
poisson  planar potentials (radial panels and FFT), energies, metrics
steady   the reduced minimizer, lift, equilibrium residuals, mass scans
dynamics particle sampling, perturbations, leapfrog evolution
verify   identity and inequality battery with serialized reports
cli      config-file driven command line front end
"""

__version__ = "0.1.0"

from .errors import (
    FlatgravError, ModelError, ExtrapolationError, GridError, BoxSizeError,
    AccuracyError, ConvergenceError, SamplingError, FormatError, ConfigError,
)
from .casimir import (
    ConvexModel, ConjugateModel, polytrope, tabulated, legendre_numeric,
    reduce_phi_to_psi, reduced_coefficient, pressure, d_reduced,
    tabulate, save_model, load_model,
)
from .poisson import (
    RadialField, PlanarField, RadialPoissonSolver, potential_radial,
    potential_planar, force_radial, force_planar, curl_residual, e_pot,
    pot_inner, pot_distance, best_shift_distance, rasterize_radial,
    radial_quadrature, same_grid, save_grid, load_grid, save_radial,
    load_radial,
)
from .steady import (
    SteadyState, LiftedState, solve_reduced, lift, cutoff_mass,
    casimir_integral, reduced_energy, equilibrium_checks, consistency_check,
    scan_mass, save_solution, load_solution,
)
from .dynamics import (
    ParticleEnsemble, SimConfig, SimResult, DIAG_COLUMNS, PERTURBATION_KINDS,
    sample_steady, perturb, deposit, gather, run, save_particles,
    load_particles,
)
from .verify import (
    CheckReport, check_reduction, check_scaling, check_inequalities,
    check_steady, check_mass_scan, full_report, generate_family,
)

__all__ = [name for name in dir() if not name.startswith("_")]
