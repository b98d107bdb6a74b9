"""Subspace Newton solver and baselines for smooth saddle-point problems."""

from .admm import (AdmmState, admm_direction, admm_run, admm_sweep,
                   admm_w_update, admm_x_update, make_admm_state,
                   make_boost_hook)
from .baselines import (FirstOrderConfig, VectorField, egda_run, gda_run,
                        ogda_run)
from .errors import (ConfigError, DegenerateDirectionError,
                     NoUniqueSolutionError, SaddleBenchError,
                     SingularSubspaceError, UndefinedMetricError)
from .harness import (ExperimentConfig, RunSummary, build_problem,
                      mean_convergence_rate, run_experiment, sweep)
from .inner import InnerResult, SubspaceSystem, build_system, inner_solve, newton_step
from .linesearch import (ACCEPTED, EXHAUSTED, LineSearchParams,
                         LineSearchResult, saddle_backtrack)
from .problems import (CountingOracle, DiracGan, PrimalDualPoint,
                       QuadraticSaddle, SaddleOracle, SmoothLassoSaddle,
                       conditioned_matrix, eval_oracle, load_matrix,
                       make_dirac, make_quadratic, make_smooth_lasso,
                       phi_s, phi_s_prime, phi_s_second, quadratic_solution,
                       save_matrix)
from .prox import ProxContext, prox_grad, prox_hvp, prox_value, recenter, shrink_tau
from .sesop import SesopConfig, onedim_joint_subspace_step, sesop_run
from .subspace import (BlockOperator, SubspaceBasis, block_operator,
                       push_step, refresh_gradient, sanitize)
from .trace import CONVERGED, DIVERGED, MAX_ITERS, TraceRecord, write_trace_csv

__version__ = "0.1.0"
