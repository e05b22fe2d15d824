"""2D boundary-integral toolkit: Nystrom BVP solves, native trapezoid-rule
layer potentials, predicted evaluation-error fields, and accurate close
evaluation via surrogate local expansions with an O(N) near/far split."""

from .curves import (Curve, AnnulusSpec, BoxCover, builtin_curve,
                     build_box_cover, preimages, gamma_curve, in_bad_region,
                     distortion_gamma, cover_gammas, schwarz_singularities)
from .specfun import bessel_j, bessel_y, hankel1
from .potentials import (Kernel, Density, NystromContext, native_eval,
                         grf_residual, interpolate_density)
from .solver import (BVPSpec, NystromSystem, SolverError, assemble,
                     kress_log_weights, solve, solve_bvp)
from .prediction import (ErrorPrediction, BoundInputs, davis_bound,
                         pole_bound, branch_bound, predict_error,
                         predicted_contour, required_beta)
from .closeeval import (CloseEvalParams, LocalExpansion, form_expansion,
                        eval_expansion, close_evaluate, convergence_sweep)
from .fastsum import (SumKernel, SummationBackend, NearSet, direct_backend,
                      tree_backend_laplace, choose_cutoff, near_set,
                      split_evaluate)
from .boundary_data import BoundaryData, make_boundary_data
from .config import RunConfig, ConfigError
from .grid import GridSpec, FieldGrid, build_field_grid

__version__ = "0.1.0"
