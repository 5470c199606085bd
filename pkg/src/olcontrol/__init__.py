"""Online control of linear time-invariant systems under adversarial convex
costs, with best-in-hindsight benchmarks and a reproducible experiment
harness."""

from .benchmarks import (
    BenchmarkResult,
    adjoint_input_gradients,
    best_dac,
    best_fixed_input,
    best_steady_state,
    grid_oracle_fixed_input,
)
from .controllers import (
    DacController,
    OlcController,
    OlcXuState,
    estimate_disturbance,
    olcxu_update,
    project_steady_state,
    regret_optimal_step_size,
)
from .costs import (
    CostOracle,
    QuadraticCost,
    SmoothnessParams,
    finite_diff_grad,
    nominal_cost,
    smoothness_constant,
)
from .errors import (
    ConfigError,
    InvalidInputError,
    InvalidStateError,
    NotStronglyStableError,
    ProjectionFailureError,
    UnreachableTargetError,
    UnsupportedDimensionError,
)
from .harness import (
    ExperimentConfig,
    RegretReport,
    RunRecord,
    Trace,
    compute_regret,
    config_from_dict,
    default_config,
    default_system_matrices,
    generate_costs,
    generate_disturbances,
    load_config,
    make_rng,
    run_experiment,
    run_one_seed,
    run_single,
    solve_run_benchmarks,
)
from .linalg import solve_least_squares, spectral_norm, spectral_radius_estimate
from .system import (
    BoxSet,
    LtiSystem,
    StabilityCert,
    StateBound,
    certify_strong_stability,
    input_for_steady_state,
    simulate,
    simulate_decomposed,
    state_bound,
    steady_state_of_input,
    step,
)

__version__ = "0.1.0"
