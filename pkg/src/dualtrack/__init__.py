"""Decentralized dual gradient tracking for constraint-coupled quadratics.

Agents hold private strongly convex quadratics coupled by one global equality
constraint.  Each maintains a local dual variable and a tracker whose network
average equals the global dual gradient; mixing with a doubly stochastic
matrix lets the collective perform inexact dual ascent without any agent ever
seeing the full constraint residual.  Inner subproblems can be solved exactly,
with fixed gradient budgets, or to a certified geometric accuracy schedule.
"""

from .diagnostics import (
    LmiReport,
    RateConstants,
    RateMatrices,
    ZetaVector,
    build_rate_matrices,
    check_lmi,
    consensus_errors,
    perron_radius,
    rho_upper_bound,
    theoretical_theta,
    transition_violation,
)
from .errors import (
    ConfigError,
    DivergenceError,
    DualTrackError,
    GenerationError,
    InfeasibleProblemError,
    ToleranceError,
)
from .inner import (
    InnerResult,
    InnerStrategy,
    agd,
    agd_iteration_bound,
    gd,
    solve_exact,
    solve_to_tolerance,
    subproblem_gradient,
    subproblem_value,
)
from .network import (
    Graph,
    MixingTopology,
    build_directed_exponential,
    build_erdos_renyi,
    mixing_matrix,
    spectral_gap,
)
from .outer import (
    DualAscentTrace,
    OuterState,
    StepSizeReport,
    dual_ascent_eta,
    dual_ascent_run,
    initial_state,
    max_stepsize,
    practical_stepsize,
    run,
    tracking_step,
)
from .problem import (
    AgentProblem,
    KktSolution,
    ProblemInstance,
    build_instance,
    dual_gradient,
    generate_constraint_full_rank,
    generate_constraint_rank_deficient,
    generate_quadratic_agents,
    kkt_solve,
    minimizer_at,
)
from .trace import Trace, TraceRow, read_trace_csv, write_trace_csv

__version__ = "0.1.0"
