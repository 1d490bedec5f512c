"""Adapted optimal transport between laws of one-dimensional diffusions.

The package estimates adapted (bicausal) Wasserstein-type distances between
SDE laws with the synchronous coupling, discretises drifts with jump
discontinuities through a monotone state-space transform, solves the
discrete-time bicausal problem exactly on finite trees in rational
arithmetic, and bounds optimal-stopping values through transport distances.
The ``awsde`` console script exposes the reproducible experiments.
"""

from .discrete_bicausal import (
    BicausalPlan,
    CostFunctional,
    FiniteAdaptedProcess,
    PlanNode,
    TreeNode,
    antitone_first_plan,
    check_quasi_monotone,
    check_stochastic_monotone,
    exact_bicausal_value,
    knothe_rosenblatt,
    kr_suboptimal_pair,
    node,
    perturbed_start_pair,
    plan_cost,
    power_cost,
    process,
    process_from_json,
    process_to_json,
    processes_equal,
)
from .errors import (
    AssumptionError,
    AwsdeError,
    BracketError,
    ConfigurationError,
    InstanceTooLargeError,
    StepSizeError,
)
from .estimator import (
    EstimateResult,
    MomentRow,
    MonotonicityWitness,
    RateCurve,
    SlopeFit,
    estimate_aw,
    estimate_vc,
    moment_diagnostic,
    monotonicity_witness,
    one_step_cdf,
    power_time_cost,
    strong_error_curve,
    write_aw_estimates_csv,
    write_moments_csv,
    write_rate_curve_csv,
)
from .models import (
    BUILTIN_MODELS,
    AssumptionReport,
    CoefficientSpec,
    builtin_model,
    validate_assumptions,
)
from .randomness import (
    IncrementBatch,
    TimeGrid,
    TruncationLevel,
    correlate,
    sample_increment_block,
    sample_increments,
    truncate_increments,
    truncation_level,
)
from .schemes import (
    SCHEME_ALIASES,
    SCHEME_KINDS,
    DiscretePath,
    StepperConfig,
    config_from_alias,
    em_step,
    guard_report,
    implicit_solve,
    semi_implicit_em_step,
    simulate_coupled,
    simulate_coupled_block,
    simulate_path,
    simulate_path_block,
    symmetrised_em_step,
    transformed_step,
)
from .stopping import (
    PathPayoff,
    asian_payoff,
    builtin_payoff,
    coordinate_payoff,
    enumerate_stopping_value,
    negated_payoff,
    snell_value,
    stopping_stability_gap,
    verify_payoff_lipschitz,
)
from .transform import (
    PiecewiseTransform,
    TransformedCoefficients,
    build_transform,
    invert_transform,
    transformed_coefficients,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "AwsdeError",
    "ConfigurationError",
    "AssumptionError",
    "StepSizeError",
    "BracketError",
    "InstanceTooLargeError",
    # models
    "CoefficientSpec",
    "AssumptionReport",
    "validate_assumptions",
    "builtin_model",
    "BUILTIN_MODELS",
    # randomness
    "TimeGrid",
    "TruncationLevel",
    "IncrementBatch",
    "sample_increments",
    "sample_increment_block",
    "truncation_level",
    "truncate_increments",
    "correlate",
    # transform
    "PiecewiseTransform",
    "TransformedCoefficients",
    "build_transform",
    "invert_transform",
    "transformed_coefficients",
    # schemes
    "SCHEME_KINDS",
    "SCHEME_ALIASES",
    "StepperConfig",
    "DiscretePath",
    "config_from_alias",
    "guard_report",
    "em_step",
    "implicit_solve",
    "semi_implicit_em_step",
    "transformed_step",
    "symmetrised_em_step",
    "simulate_path",
    "simulate_path_block",
    "simulate_coupled",
    "simulate_coupled_block",
    # trees and exact transport
    "TreeNode",
    "FiniteAdaptedProcess",
    "CostFunctional",
    "power_cost",
    "PlanNode",
    "BicausalPlan",
    "node",
    "process",
    "processes_equal",
    "knothe_rosenblatt",
    "antitone_first_plan",
    "plan_cost",
    "exact_bicausal_value",
    "check_stochastic_monotone",
    "check_quasi_monotone",
    "kr_suboptimal_pair",
    "perturbed_start_pair",
    "process_to_json",
    "process_from_json",
    # stopping
    "PathPayoff",
    "coordinate_payoff",
    "asian_payoff",
    "builtin_payoff",
    "negated_payoff",
    "snell_value",
    "enumerate_stopping_value",
    "verify_payoff_lipschitz",
    "stopping_stability_gap",
    # estimation
    "EstimateResult",
    "RateCurve",
    "SlopeFit",
    "MomentRow",
    "MonotonicityWitness",
    "power_time_cost",
    "estimate_vc",
    "estimate_aw",
    "strong_error_curve",
    "moment_diagnostic",
    "one_step_cdf",
    "monotonicity_witness",
    "write_aw_estimates_csv",
    "write_rate_curve_csv",
    "write_moments_csv",
]
