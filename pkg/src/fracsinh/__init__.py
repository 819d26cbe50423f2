"""Multi-peak sign-changing solutions of (-Delta)^{1/2} u = lambda (e^u - e^-u) on (-1, 1)."""

from .bubbles import (AnsatzSpec, BubbleParams, Configuration, ansatz, bubble, bubble_z,
                      delta_choice, interaction_energy, proj_bubble, proj_z1)
from .green_kernel import green, green_dx, poisson_kernel, robin, robin_diag, robin_dxi
from .mesh import Mesh, build_mesh
from .operator import KernelOperator, assemble_inverse
from .reduced import (EnergyReport, NoCriticalPoint, boundary_blowdown_probe, conjecture_probe,
                      maximize, reduced_grad, reduced_value)
from .solver import (GridFunction, NonConvergence, SingularJacobian, SolveReport,
                     ansatz_error_norms, continuation, energy, linearized_smallest_singulars,
                     newton_solve, residual, solve, solve_branch)
from .verify import (AmbiguousZero, MissingPeak, NodalReport, PeakReport, count_nodal_regions,
                     diagnose, limit_profile, limit_profile_monotonicity, peak_diagnostics,
                     profile_convergence, verify_solution)
from .estimators import ReducedEnergyMaximizer, SinhPoissonSolver

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
