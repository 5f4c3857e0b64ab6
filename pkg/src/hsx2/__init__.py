"""Alpha-dissipative solutions of the two-component Hunter-Saxton system."""

from .functions import (AlphaFunction, CumulativeMeasure, PiecewiseLinear, StepFunction,
                        alpha_validate, measure_total, pl_eval, pl_norms, pushforward)
from .lagrangian import (BreakingSchedule, LagrangianState, broken_measure, check_F_alpha,
                         check_F_i, classify_omega, compute_tau)
from .maps import (EulerianState, L_map, M_map, Relabeling, check_D0, group_action,
                   pi_normalize)
from .evolution import (PicardConfig, evolve_event_driven, evolve_eulerian, evolve_picard,
                        dafermos_formula, weak_residual, solve_event_driven)
from .stability import (MetricContext, J_upper, compute_g, dM_upper, dtilde, lipschitz_constants,
                        lipschitz_verify)

__version__ = "0.1.0"
