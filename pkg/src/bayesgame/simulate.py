"""Monte Carlo forward play of solved policies.

Each trajectory draws an attacker type from the prior, then walks the
stage policies forward: the defender mixes with an independent coin per
stage, the attacker plays the region containing the drawn type, and the
belief follows the same conjugate update the solver used. Trajectories
use independent counter-based substreams of one seed, so results are
reproducible and insensitive to evaluation order.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .belief import BeliefParams, band_moment, category_of, update_params
from .equilibrium import ExpandedState, SolveResult, successor
from .game_model import Scenario, stage_payoff
from .piecewise import PiecewiseLinearFn


class ReplayIntegrityError(ValueError):
    """A recorded trajectory contradicts the belief recursion."""


@dataclass(frozen=True)
class StageStep:
    """One stage of simulated play, recorded before the transition."""

    state: ExpandedState
    defender_action: int
    attacker_action: int
    category: int
    defender_payoff: float
    attacker_payoff: float


@dataclass(frozen=True)
class TrajectoryRecord:
    """Full record of one simulated game.

    terminal is the expanded state after the last transition; totals
    include terminal values. steps may be empty only for degenerate
    hand-built records, in which case terminal carries the prior.
    """

    theta: float
    category_total: int
    steps: tuple[StageStep, ...]
    terminal: ExpandedState
    defender_total: float
    attacker_total: float


@dataclass(frozen=True)
class SimulationSummary:
    """Aggregates over all simulated trajectories.

    attack_frequency[t] is the fraction of trajectories whose stage-t
    action fell in a nonzero observation category. visit_counts covers
    decision and terminal states. records is None unless requested.
    """

    trajectories: int
    defender_mean: float
    defender_stderr: float
    attacker_mean: float
    attacker_stderr: float
    attack_frequency: tuple[float, ...]
    visit_counts: dict[ExpandedState, int]
    records: tuple[TrajectoryRecord, ...] | None


def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(values.size))


def run_simulation(
    scenario: Scenario,
    result: SolveResult,
    n: int,
    seed: int,
    *,
    keep_records: bool = False,
) -> SimulationSummary:
    """Play the solved equilibrium forward n times.

    Substream i of the seeded counter-based generator drives trajectory
    i alone: one beta draw for the type, then one uniform per stage for
    the defender's coin. The attacker's action is the deterministic
    region lookup, with boundary types resolved toward the lower
    category exactly as the solver resolves ties.
    """
    if n < 1:
        raise ValueError("need at least one trajectory")
    horizon = scenario.horizon
    total = scenario.category_map.total
    alpha0, beta0 = scenario.prior

    defender_totals = np.empty(n)
    attacker_totals = np.empty(n)
    attack_counts = np.zeros(horizon + 1, dtype=np.int64)
    visits: Counter[ExpandedState] = Counter()
    records: list[TrajectoryRecord] = []

    base = np.random.Philox(key=seed)
    for i in range(n):
        rng = np.random.Generator(base.jumped(i))
        theta = float(rng.beta(alpha0, beta0))
        y = result.initial
        steps: list[StageStep] = []
        u1 = 0.0
        u2 = 0.0
        for t in range(horizon + 1):
            visits[y] += 1
            policy = result.policy(y)
            a1 = 1 if rng.random() < policy.defender_p else 0
            a2 = policy.action_for(theta)
            k = category_of(scenario.category_map, a2)
            j1, j2 = stage_payoff(scenario, y.t, y.x, a1, a2)
            g1 = j1(theta)
            g2 = j2(theta)
            u1 += g1
            u2 += g2
            if k > 0:
                attack_counts[t] += 1
            if keep_records:
                steps.append(StageStep(y, a1, a2, k, g1, g2))
            y = successor(scenario, y, a1, a2)
        visits[y] += 1
        tv1, tv2 = scenario.terminal_value(y.x)
        u1 += tv1
        u2 += tv2(theta)
        defender_totals[i] = u1
        attacker_totals[i] = u2
        if keep_records:
            records.append(TrajectoryRecord(theta, total, tuple(steps), y, u1, u2))

    return SimulationSummary(
        trajectories=n,
        defender_mean=float(np.mean(defender_totals)),
        defender_stderr=_stderr(defender_totals),
        attacker_mean=float(np.mean(attacker_totals)),
        attacker_stderr=_stderr(attacker_totals),
        attack_frequency=tuple((attack_counts / n).tolist()),
        visit_counts=dict(visits),
        records=tuple(records) if keep_records else None,
    )


def replay_belief(record: TrajectoryRecord) -> tuple[BeliefParams, ...]:
    """Recompute the belief chain of a recorded trajectory.

    Returns the hyperparameters before each stage plus the terminal
    pair. Raises ReplayIntegrityError when any recorded state disagrees
    with the conjugate update of its predecessor; updates add integer
    counts, so agreement is exact, not approximate.
    """
    start = record.steps[0].state if record.steps else record.terminal
    chain = [BeliefParams(start.alpha, start.beta)]
    for index, step in enumerate(record.steps):
        recorded = (step.state.alpha, step.state.beta)
        current = (chain[-1].alpha, chain[-1].beta)
        if recorded != current:
            raise ReplayIntegrityError(
                f"step {index} carries belief {recorded}, replay expects {current}"
            )
        if not 0 <= step.category <= record.category_total:
            raise ReplayIntegrityError(
                f"step {index} category {step.category} outside 0..{record.category_total}"
            )
        chain.append(update_params(chain[-1], step.category, record.category_total))
    terminal = (record.terminal.alpha, record.terminal.beta)
    if terminal != (chain[-1].alpha, chain[-1].beta):
        raise ReplayIntegrityError(
            f"terminal belief {terminal} does not close the replayed chain"
        )
    return tuple(chain)


def expected_attacker_value(scenario: Scenario, fn: PiecewiseLinearFn) -> float:
    """Expectation of a piecewise-linear type function under the prior."""
    params = BeliefParams(*scenario.prior)
    total = 0.0
    for index, (intercept, slope) in enumerate(fn.pieces):
        lo = fn.breakpoints[index]
        hi = fn.breakpoints[index + 1]
        total += intercept * band_moment(params, lo, hi, 0)
        total += slope * band_moment(params, lo, hi, 1)
    return total
