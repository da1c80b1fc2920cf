"""Safeguarded deviation-based forward-backward splitting for monotone inclusions.

The package solves 0 in A x + C x for a maximally monotone A (accessed via
its metric resolvent) and a cocoercive C, with momentum terms and two freely
directed deviation vectors bounded by a per-iteration norm budget. It ships
the general loop, its closed-form special cases (constant-kappa momentum,
the rate-tunable interpolation, the anchored accelerated method), a
Lyapunov-based diagnostics layer that certifies the method's identities
numerically, and a benchmark CLI.
"""

from .errors import (ConfigurationError, DevsplitError, DimensionMismatchError,
                     MetricError, OperatorContractError, SafeguardViolationError)
from .metric import Metric, as_vector
from .operators import (AffineCocoerciveOp, BoxNormalConeOp, CocoerciveOp,
                        LinearMonotoneOp, MonotoneOp, NonexpansiveResidualOp,
                        ProblemInstance, ZeroCocoerciveOp, ZeroMonotoneOp,
                        check_cocoercivity, check_resolvent_contraction,
                        quad_cocoercivity_bound)
from .schedules import (DerivedParams, GrowthFunction, Schedule, constant_growth,
                        check_parameter_identities, linear_growth, log_growth,
                        power_growth, validate_growth, validate_schedule)
from .engine import (ClipPolicy, DeviationPolicy, ParallelDeviations,
                     RandomDeviations, SolverState, StepView, ZeroDeviations,
                     compute_ell, init, run, safeguard_lhs, step)
from .records import RunRecord, StoppingRule, SweepResult, Trace
from .variants import (VariantConfig, embed_to_general, fb_affine_map,
                       halpern_problem, run_accelerated_fb, run_constant_kappa,
                       run_halpern, run_parallel_x_form, run_parallel_y_form,
                       run_tunable, run_variant)
from .diagnostics import (LyapunovRecord, LyapunovTracker, correction_vector_forms,
                          phi_value, residual_envelope_slack)
from .problems import load_problem, problem_from_json, skew2d

__version__ = "0.1.0"
