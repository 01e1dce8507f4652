"""Finite-horizon leader-follower games against a privately typed opponent.

The defender commits to a mixed action per stage, the attacker best
responds by type, and a beta-binomial belief over the type closes the
loop. Backward induction over the expanded belief-state graph yields
exact piecewise-linear equilibrium values; a forward simulator and a
small CLI sit on top.
"""

from .belief import (
    BeliefParams,
    CategoryMap,
    DegenerateObservationError,
    GridBelief,
    band_moment,
    beta_pdf,
    binomial_likelihood,
    category_of,
    nonparametric_update,
    partial_moment,
    regularized_incomplete_beta,
    update_params,
)
from .equilibrium import (
    ExpandedState,
    PolicyCoverageError,
    SolveResult,
    StagePolicy,
    StateSolution,
    ThetaRegion,
    attacker_best_response,
    attacker_threshold,
    best_response_regions,
    compose_equivalent_utilities,
    defender_objective,
    enumerate_expanded_states,
    evaluate_policy_pair,
    policies_from_result,
    solve_game,
    solve_stage,
    successor,
    terminal_continuation,
)
from .game_model import AffineInType, Scenario, next_state, stage_payoff, validate_scenario
from .piecewise import PiecewiseLinearFn
from .scenario_io import (
    LoadedScenario,
    ScenarioFormatError,
    dump_scenario,
    load_scenario,
    parse_scenario,
    scenario_document,
)
from .simulate import (
    ReplayIntegrityError,
    SimulationSummary,
    StageStep,
    TrajectoryRecord,
    expected_attacker_value,
    replay_belief,
    run_simulation,
)
from .te_scenario import (
    TeConfig,
    build_te_scenario,
    bundled_scenario_path,
    default_config,
    full_range_config,
)

__version__ = "0.1.0"

__all__ = [
    "AffineInType",
    "BeliefParams",
    "CategoryMap",
    "DegenerateObservationError",
    "ExpandedState",
    "GridBelief",
    "LoadedScenario",
    "PiecewiseLinearFn",
    "PolicyCoverageError",
    "ReplayIntegrityError",
    "Scenario",
    "ScenarioFormatError",
    "SimulationSummary",
    "SolveResult",
    "StagePolicy",
    "StageStep",
    "StateSolution",
    "TeConfig",
    "ThetaRegion",
    "TrajectoryRecord",
    "attacker_best_response",
    "attacker_threshold",
    "band_moment",
    "best_response_regions",
    "beta_pdf",
    "binomial_likelihood",
    "build_te_scenario",
    "bundled_scenario_path",
    "category_of",
    "compose_equivalent_utilities",
    "default_config",
    "defender_objective",
    "dump_scenario",
    "enumerate_expanded_states",
    "evaluate_policy_pair",
    "expected_attacker_value",
    "full_range_config",
    "load_scenario",
    "next_state",
    "nonparametric_update",
    "parse_scenario",
    "partial_moment",
    "policies_from_result",
    "regularized_incomplete_beta",
    "replay_belief",
    "run_simulation",
    "scenario_document",
    "solve_game",
    "solve_stage",
    "stage_payoff",
    "successor",
    "terminal_continuation",
    "update_params",
    "validate_scenario",
]
