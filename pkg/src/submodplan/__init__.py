"""Planning toolkit for leveled tabular MDPs whose episode value is a
monotone submodular function of the visited state-action pairs."""

__version__ = "0.1.0"

from .baselines import dp_baseline, greedy_baseline
from .continuous_greedy import CgConfig, CgResult, run as continuous_greedy
from .dp import brute_force_plan, solve_linear
from .environments import (
    NavMap,
    SyntheticSpec,
    build_cardinality_mdp,
    build_grid,
    build_nav,
    build_synthetic,
    load_map,
    packaged_map,
    parse_map,
    visibility,
)
from .mdp import (
    DeterministicPolicy,
    GroundSet,
    LeveledMdp,
    MixturePolicy,
    Trajectory,
    load_mdp,
    mixture_marginals,
    policy_marginals,
    sample_trajectory,
    save_mdp,
    validate,
)
from .multilinear import (
    GradientEstimate,
    estimate_gradient,
    estimate_value,
    exact_value,
    sample_set,
)
from .objectives import (
    AdditiveObjective,
    CoverageObjective,
    LogDetObjective,
    Objective,
    OffsetObjective,
)
from .rounding import flow_violations, round_high, round_sub

__all__ = [
    "AdditiveObjective",
    "CgConfig",
    "CgResult",
    "CoverageObjective",
    "DeterministicPolicy",
    "GradientEstimate",
    "GroundSet",
    "LeveledMdp",
    "LogDetObjective",
    "MixturePolicy",
    "NavMap",
    "Objective",
    "OffsetObjective",
    "SyntheticSpec",
    "Trajectory",
    "brute_force_plan",
    "build_cardinality_mdp",
    "build_grid",
    "build_nav",
    "build_synthetic",
    "continuous_greedy",
    "dp_baseline",
    "estimate_gradient",
    "estimate_value",
    "exact_value",
    "flow_violations",
    "greedy_baseline",
    "load_map",
    "load_mdp",
    "mixture_marginals",
    "packaged_map",
    "parse_map",
    "policy_marginals",
    "round_high",
    "round_sub",
    "sample_set",
    "sample_trajectory",
    "save_mdp",
    "solve_linear",
    "validate",
    "visibility",
]
