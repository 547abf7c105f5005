"""Low regularity exponential integrators for Allen-Cahn type equations."""

from .diagnostics import (
    ConvergenceTable, EnergyReport, convergence_rates, discrete_energy, energy_report,
    error_norms, increment_bound, mbp_check, theoretical_error_bound,
)
from .expops import (
    Propagator, apply_exp, apply_phi, dense_expm, dense_expm_extended, dense_phi_action, phi,
    phi_scalar,
)
from .potential import (
    Potential, PotentialDomainError, StabilityBounds, compute_bounds, double_well,
    flory_huggins, stabilized_map,
)
from .schemes import IntegrationError, SchemeKind, Stepper, Trajectory, integrate
from .spatial import (
    GridSpec, LaplacianAxis, apply_laplacian, build_axis, dense_laplacian,
    dense_laplacian_1d, operator_inf_norm,
)

__version__ = "0.1.0"
