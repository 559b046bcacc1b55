"""Age-of-information scheduling under interference constraints.

A deterministic slotted-time simulator and policy library for wireless
networks where at most one cell of an activation family transmits per slot
and channel successes are i.i.d. with unknown probabilities. Ships the
stationary randomized schedule and its solver, a virtual-queue policy, an
age-based max-weight policy, round-robin, age estimators with built-in
property checks, analytic bound reports, and experiment orchestration with
delimited outputs and figure rendering.
"""

from .config import (
    ExperimentConfig,
    SweepConfig,
    canonical_json,
    config_hash,
    parse_experiment,
    parse_sweep,
    point_experiment,
)
from .engine import (
    RunConfig,
    channel_matrix,
    initial_ages,
    policy_label,
    run_simulation,
)
from .experiments import (
    SolverError,
    emit_plot_data,
    run_experiment,
    run_sweep,
)
from .figures import render_all, render_figure
from .metrics import (
    BOUND_NAMES,
    BoundReport,
    SimulationResult,
    avg_age_estimate,
    avg_age_identity_check,
    bound_reports,
    conservation_check,
    peak_age_estimate,
)
from .network import (
    Explicit,
    KofN,
    NetworkSpec,
    activation_frequencies,
    max_weight_set,
    mixed_success_probs,
    validate_network,
)
from .policies import (
    AgeBased,
    RoundRobin,
    SlotFeedback,
    Stationary,
    VirtualQueue,
    age_decide,
    round_robin_decide,
    stationary_decide,
    vq_decide,
    vq_update,
)
from .stationary import (
    StationarySolution,
    average_age_lower_bound,
    eval_peak_objective,
    solve_stationary,
    stationary_support_kofn,
    waterfill_kofn,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # network model
    "NetworkSpec",
    "KofN",
    "Explicit",
    "validate_network",
    "max_weight_set",
    "activation_frequencies",
    "mixed_success_probs",
    # policies
    "Stationary",
    "VirtualQueue",
    "AgeBased",
    "RoundRobin",
    "SlotFeedback",
    "stationary_decide",
    "vq_update",
    "vq_decide",
    "age_decide",
    "round_robin_decide",
    # stationary optimum
    "StationarySolution",
    "solve_stationary",
    "waterfill_kofn",
    "stationary_support_kofn",
    "eval_peak_objective",
    "average_age_lower_bound",
    # simulation
    "RunConfig",
    "run_simulation",
    "channel_matrix",
    "initial_ages",
    "policy_label",
    # metrics
    "SimulationResult",
    "BoundReport",
    "BOUND_NAMES",
    "peak_age_estimate",
    "avg_age_estimate",
    "conservation_check",
    "avg_age_identity_check",
    "bound_reports",
    # configuration
    "ExperimentConfig",
    "SweepConfig",
    "parse_experiment",
    "parse_sweep",
    "point_experiment",
    "canonical_json",
    "config_hash",
    # experiments
    "run_experiment",
    "run_sweep",
    "emit_plot_data",
    "SolverError",
    "render_figure",
    "render_all",
]
