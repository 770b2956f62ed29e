"""Minimal branches, extremal parameters and stability checks for coupled
semilinear elliptic systems on the unit ball (radial discretisation)."""
from .continuation import (ContinuationOptions, default_lambda0, extremal_estimate,
                           solve_minimal, tangent_predictor, trace_ray, trace_upsilon)
from .core import (Branch, BranchPoint, Fold, Nonlinearity, ParamPoint, RadialMesh, Ray,
                   SolutionPair, SystemSpec, TestFunctionPair, UpsilonCurve, UpsilonSample,
                   default_grading, make_mesh, nl_eval)
from .errors import (BadStart, ConfigError, DomainError, EigFailure, ExtremalError,
                     HypothesisNotMet, IncompleteBranch, NoRoot, NonConvergence,
                     NotMinimalCandidate, NotPrincipal, ShapeError, VariantError)
from .solver import (NewtonOptions, jacobian, laplacian, neg_laplacian, newton_result,
                     newton_solve, residual, scaled_residual, stiffness)
from .stability import (Eigenpair, check_gra, check_radialstab, check_twist, dirichlet_mu1,
                        default_eig_tol, inequality_sweep, principal_eigenpair,
                        random_test_pair, step3_bound, step3_constant, step3_testfn)
from .verify import (I_func, L_func, ThresholdReport, check_pointwise_G, check_pointwise_H,
                     check_power_integrals, check_shit_integrals, check_stabpol, find_T,
                     fit_blowup, t_plus, threshold_report)

__version__ = "0.1.0"
