"""Multi-bump solutions of Phi-Laplacian Dirichlet problems on balls.

Toolkit for generators of Orlicz N-functions (including families whose
Orlicz space is not reflexive), multi-bump nonlinearities with truncations,
box-projected energy minimization on radial grids, an independent shooting
oracle, and a parameter-sweep CLI that locates the multiplicity threshold.
"""

from ._kernels import backend_name, have_compiled
from .grid import GridFunction, RadialGrid
from .nfunction import Delta2Report, NFunctionSpec, big_phi, conjugate_eval, delta2_index, g_eval, g_inverse, luxemburg_norm
from .nonlinearity import BumpNonlinearity, PiecewiseLinear, TruncatedF, default_bump_builder, truncate, validate
from .energy import MinimizeOptions, MinimizeResult, clip_monotonicity_check, energy_gradient, energy_value, minimize, minimize_multistart
from .radial import BranchScan, BranchSolution, ShootResult, find_branches, integral_identity_residual, shoot, verify_claims

__version__ = "0.1.0"

__all__ = [
    "BranchScan", "BranchSolution", "BumpNonlinearity", "Delta2Report", "GridFunction",
    "MinimizeOptions", "MinimizeResult", "NFunctionSpec", "PiecewiseLinear", "RadialGrid",
    "ShootResult", "TruncatedF", "backend_name", "big_phi", "clip_monotonicity_check",
    "conjugate_eval", "default_bump_builder", "delta2_index", "energy_gradient",
    "energy_value", "find_branches", "g_eval", "g_inverse", "have_compiled",
    "integral_identity_residual", "luxemburg_norm", "minimize", "minimize_multistart",
    "shoot", "truncate", "validate", "verify_claims",
]
