"""Optimal dual kernel-SVM solutions on sums of kernels, with certified bounds."""

from .bounds import (BoundReport, many_kernel_bounds, psi_loss, rademacher_sum_bound,
                     rademacher_sum_bound_BR, risk_epsilon, subset_bound,
                     two_kernel_bounds, verify_sum_bound)
from .errors import (BoundViolation, ConfigError, KernelSumError, NoFeasibleSupport,
                     NotConverged, SolverError, Unbounded)
from .kernels import (Dataset, KernelSpec, eval_kernel, gram, labeled_gram, predict,
                      radius_squared, sum_matrices, trace)
from .qp_solver import (DualSolution, KktReport, brute_force_dual, kkt_residuals,
                        solve_dual_hard, solve_dual_slack)
from .rademacher_mc import (RademacherEstimate, estimate_sqrt_form, exact_sqrt_form,
                            moment_check, subset_chain_check)
from .synth_data import MixtureConfig, generate_mixture, read_dataset_csv, write_dataset_csv

__version__ = "0.1.0"
