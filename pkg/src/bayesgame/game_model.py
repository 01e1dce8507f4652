"""Domain types for the leader-follower game.

A scenario describes a finite-horizon two-player game: per-stage state
sets, a deterministic transition kernel over (state, action pair), and
stage payoffs that are affine in the follower's scalar type. The leader
(player 1, the defender) moves with a mixed action in {0, 1}; the
follower (player 2, the attacker) picks one of finitely many actions,
each mapped to an observation category that drives the belief update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .belief import CategoryMap

TransitionKernel = Mapping[tuple[int, int, int, int], int]


@dataclass(frozen=True)
class AffineInType:
    """Payoff of the form intercept + slope * theta."""

    intercept: float
    slope: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "slope", float(self.slope))

    def __call__(self, theta: float) -> float:
        return self.intercept + self.slope * theta


@dataclass(frozen=True)
class Scenario:
    """Full game description.

    states[t] lists the system states available at stage t, for
    t = 0 .. horizon + 1 (the last entry is the terminal layer).
    transitions and payoffs are keyed by (t, x, a1, a2) and must be
    total over declared combinations for t = 0 .. horizon.
    prior holds the raw (alpha, beta) hyperparameters; positivity is a
    validation concern, not a construction-time one, so invalid files
    can still be loaded and reported on. terminal_values maps a
    terminal state to (defender value, attacker value as AffineInType);
    missing states default to zero.
    """

    horizon: int
    states: tuple[tuple[int, ...], ...]
    defender_actions: tuple[int, ...]
    attacker_actions: tuple[int, ...]
    transitions: dict[tuple[int, int, int, int], int]
    payoffs: dict[tuple[int, int, int, int], tuple[AffineInType, AffineInType]]
    category_map: CategoryMap
    prior: tuple[float, float]
    terminal_values: dict[int, tuple[float, AffineInType]] = field(default_factory=dict)

    @property
    def initial_state(self) -> int:
        return self.states[0][0]

    def terminal_value(self, x: int) -> tuple[float, AffineInType]:
        return self.terminal_values.get(x, (0.0, AffineInType(0.0, 0.0)))


def next_state(scenario: Scenario, t: int, x: int, a1: int, a2: int) -> int:
    try:
        return scenario.transitions[(t, x, a1, a2)]
    except KeyError:
        raise KeyError(f"no transition declared for (t={t}, x={x}, a1={a1}, a2={a2})") from None


def stage_payoff(scenario: Scenario, t: int, x: int, a1: int, a2: int) -> tuple[AffineInType, AffineInType]:
    try:
        return scenario.payoffs[(t, x, a1, a2)]
    except KeyError:
        raise KeyError(f"no payoff declared for (t={t}, x={x}, a1={a1}, a2={a2})") from None


def validate_scenario(scenario: Scenario) -> list[str]:
    """Check scenario consistency; returns a list of violations, empty if ok.

    Violations are human-readable strings, one per problem found. The
    checks cover structural totality (kernel and payoff tables), the
    belief prior, and the payoff shape restrictions the solver relies
    on: at the final stage the defender payoff may not increase with the
    attacker type and the attacker payoff may not decrease with it, and
    no attacker action may pay a type-0 user a positive amount.
    """
    problems: list[str] = []
    s = scenario

    if s.horizon < 0:
        problems.append(f"horizon must be nonnegative, got {s.horizon}")
        return problems
    if len(s.states) != s.horizon + 2:
        problems.append(
            f"expected {s.horizon + 2} stage state sets (stages 0..{s.horizon} plus terminal), got {len(s.states)}"
        )
        return problems
    for t, layer in enumerate(s.states):
        if not layer:
            problems.append(f"stage {t} has no states")
        if len(set(layer)) != len(layer):
            problems.append(f"stage {t} repeats a state id")
    if len(s.states[0]) != 1:
        problems.append(f"stage 0 must contain exactly one state, got {len(s.states[0])}")

    if tuple(s.defender_actions) != (0, 1):
        problems.append(f"defender actions must be exactly (0, 1), got {tuple(s.defender_actions)}")
    if not s.attacker_actions:
        problems.append("attacker action set is empty")
    if len(set(s.attacker_actions)) != len(s.attacker_actions):
        problems.append("attacker action ids repeat")

    for a2 in s.attacker_actions:
        if a2 not in s.category_map.mapping:
            problems.append(f"attacker action {a2} missing from the category map")

    alpha0, beta0 = s.prior
    if not (alpha0 > 0 and beta0 > 0) or not (math.isfinite(alpha0) and math.isfinite(beta0)):
        problems.append("prior hyperparameter nonpositive")

    if problems:
        return problems

    for t in range(s.horizon + 1):
        for x in s.states[t]:
            for a1 in s.defender_actions:
                for a2 in s.attacker_actions:
                    key = (t, x, a1, a2)
                    if key not in s.transitions:
                        problems.append(f"kernel not total: missing transition for {key}")
                    elif s.transitions[key] not in s.states[t + 1]:
                        problems.append(
                            f"kernel target {s.transitions[key]} for {key} is not a stage-{t + 1} state"
                        )
                    if key not in s.payoffs:
                        problems.append(f"payoff table not total: missing entry for {key}")
                        continue
                    p1, p2 = s.payoffs[key]
                    for name, fn in (("defender", p1), ("attacker", p2)):
                        if not (math.isfinite(fn.intercept) and math.isfinite(fn.slope)):
                            problems.append(f"{name} payoff for {key} has non-finite coefficients")
                    if p2.intercept > 0:
                        problems.append(
                            f"action cost negative: attacker payoff for {key} is positive at theta=0"
                        )
                    if t == s.horizon:
                        if p1.slope > 0 or p2.slope < 0:
                            problems.append(
                                f"reward exceeds normal operation: final-stage payoff for {key} "
                                "favors stronger attacker types"
                            )

    for key in s.transitions:
        t = key[0]
        if not 0 <= t <= s.horizon:
            problems.append(f"transition {key} declared outside stages 0..{s.horizon}")
    for x in s.terminal_values:
        if x not in s.states[-1]:
            problems.append(f"terminal value declared for unknown terminal state {x}")
        else:
            v1, v2 = s.terminal_values[x]
            if not math.isfinite(v1) or not (math.isfinite(v2.intercept) and math.isfinite(v2.slope)):
                problems.append(f"terminal value for state {x} has non-finite coefficients")

    return problems
