"""Equilibrium computation by backward induction over expanded states.

An expanded state bundles the stage, the system state, and the belief
hyperparameters; because category observations drive the belief by an
integer recursion, the reachable expanded states form a finite DAG.
Each stage game is solved leader-first: for a candidate defense
probability p the follower's best response partitions the type interval
into regions via an exact upper envelope, the leader's expected value
over those regions reduces to beta band moments in closed form, and the
leader's probability is optimized over a candidate set (region
structure-change points, endpoints, a uniform grid) with golden-section
refinement in between. Among near-optimal probabilities the smallest is
returned, and follower indifference resolves toward the lower category,
so repeated solves are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .belief import BeliefParams, band_moment, category_of, update_params
from .game_model import Scenario, next_state, stage_payoff
from .piecewise import PiecewiseLinearFn, combine, stitch, upper_envelope

# Defense probabilities within this value tolerance of the optimum count
# as maximizers; the smallest one is returned.
VALUE_TOL = 1e-9

# Interval width at which golden-section refinement stops.
REFINE_TOL = 1e-9

# Uniform candidate grid size for the defender optimization.
GRID_CANDIDATES = 129


class PolicyCoverageError(KeyError):
    """A policy left out a reachable expanded state."""


@dataclass(frozen=True)
class ExpandedState:
    """Dynamic-programming node: stage, system state, belief parameters."""

    t: int
    x: int
    alpha: float
    beta: float

    def belief(self) -> BeliefParams:
        return BeliefParams(self.alpha, self.beta)


@dataclass(frozen=True)
class ThetaRegion:
    """Type interval [lo, hi] on which `action` is the best response."""

    lo: float
    hi: float
    action: int
    category: int


@dataclass(frozen=True)
class StagePolicy:
    """One stage of behavior: defense probability and type regions.

    regions is an ordered partition of [0, 1]. A boundary type sits in
    two regions; lookups resolve it toward the lower category (then the
    lower action id), matching the solver's tie-break.
    """

    defender_p: float
    regions: tuple[ThetaRegion, ...]

    def action_for(self, theta: float) -> int:
        hits = [r for r in self.regions if r.lo <= theta <= r.hi]
        if not hits:
            raise ValueError(f"theta={theta} outside [0, 1]")
        return min(hits, key=lambda r: (r.category, r.action)).action

    def intervals_for(self, action: int) -> tuple[tuple[float, float], ...]:
        return tuple((r.lo, r.hi) for r in self.regions if r.action == action)


@dataclass(frozen=True)
class StateSolution:
    """Values and policy at one expanded state (policy None at terminal)."""

    v1: float
    v2: PiecewiseLinearFn
    policy: StagePolicy | None


@dataclass(frozen=True)
class SolveResult:
    """Backward-induction output over the whole expanded-state DAG."""

    stages: tuple[tuple[ExpandedState, ...], ...]
    solutions: dict[ExpandedState, StateSolution]

    @property
    def initial(self) -> ExpandedState:
        return self.stages[0][0]

    def v1(self, y: ExpandedState) -> float:
        return self.solutions[y].v1

    def v2(self, y: ExpandedState) -> PiecewiseLinearFn:
        return self.solutions[y].v2

    def policy(self, y: ExpandedState) -> StagePolicy:
        policy = self.solutions[y].policy
        if policy is None:
            raise ValueError(f"{y} is terminal and has no policy")
        return policy


def successor(scenario: Scenario, y: ExpandedState, a1: int, a2: int) -> ExpandedState:
    """Expanded-state transition: kernel step plus conjugate belief update."""
    k = category_of(scenario.category_map, a2)
    posterior = update_params(BeliefParams(y.alpha, y.beta), k, scenario.category_map.total)
    return ExpandedState(
        y.t + 1,
        next_state(scenario, y.t, y.x, a1, a2),
        posterior.alpha,
        posterior.beta,
    )


def enumerate_expanded_states(scenario: Scenario) -> tuple[tuple[ExpandedState, ...], ...]:
    """All expanded states reachable from the initial node, per stage.

    Stage lists preserve discovery order (defender action outer, attacker
    action inner), which fixes the row order of every downstream report.
    """
    alpha0, beta0 = scenario.prior
    layers = [(ExpandedState(0, scenario.initial_state, alpha0, beta0),)]
    for t in range(scenario.horizon + 1):
        seen: dict[ExpandedState, None] = {}
        for y in layers[t]:
            for a1 in scenario.defender_actions:
                for a2 in scenario.attacker_actions:
                    seen.setdefault(successor(scenario, y, a1, a2), None)
        layers.append(tuple(seen))
    return tuple(layers)


def attacker_threshold(p: float, r_n: float, r_a: float, c2: float) -> float | None:
    """Final-stage attack threshold, or None when every type is deterred.

    With defense probability p the attack surplus is
    (1 - p)(r_n - r_a) * theta - c2, so types above
    c2 / [(1 - p)(r_n - r_a)] attack. When that denominator does not
    exceed c2 (certain defense, no reward gap, or cost at least the
    maximal surplus) no type strictly profits and None is returned.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"defense probability {p} outside [0, 1]")
    if r_n < r_a:
        raise ValueError("attacked reward exceeds normal operation reward")
    if c2 < 0:
        raise ValueError("attack cost must be nonnegative")
    depth = (1.0 - p) * (r_n - r_a)
    if depth <= c2:
        return None
    return min(max(c2 / depth, 0.0), 1.0)


Continuation = Mapping[ExpandedState, StateSolution]


def _terminal_solution(scenario: Scenario, x: int) -> StateSolution:
    v1, v2 = scenario.terminal_value(x)
    return StateSolution(v1, PiecewiseLinearFn.affine(v2.intercept, v2.slope), None)


def terminal_continuation(
    scenario: Scenario, y: ExpandedState
) -> dict[ExpandedState, StateSolution]:
    """Terminal-value continuation for a state in the last decision stage.

    Convenience for solving a single final-stage game in isolation, e.g.
    under a belief that backward induction would never reach.
    """
    if y.t != scenario.horizon:
        raise ValueError(f"stage {y.t} is not the last decision stage {scenario.horizon}")
    continuation: dict[ExpandedState, StateSolution] = {}
    for a1 in scenario.defender_actions:
        for a2 in scenario.attacker_actions:
            y_next = successor(scenario, y, a1, a2)
            continuation[y_next] = _terminal_solution(scenario, y_next.x)
    return continuation


class _StageGame:
    """One expanded state's leader-follower game against fixed continuations.

    Precomputes, per action pair (a1, a2): the attacker's total payoff
    in theta (stage payoff plus successor value, piecewise linear) and
    the defender's total payoff coefficients (stage payoff plus scalar
    successor value, affine). Everything downstream only mixes these.
    """

    def __init__(self, scenario: Scenario, y: ExpandedState, continuation: Continuation):
        self.scenario = scenario
        self.y = y
        self.belief = y.belief()
        self.attacker_actions = scenario.attacker_actions
        self.attacker_fns: dict[tuple[int, int], PiecewiseLinearFn] = {}
        self.defender_coefs: dict[tuple[int, int], tuple[float, float]] = {}
        for a1 in scenario.defender_actions:
            for a2 in scenario.attacker_actions:
                y_next = successor(scenario, y, a1, a2)
                try:
                    cont = continuation[y_next]
                except KeyError:
                    raise PolicyCoverageError(f"no continuation for {y_next}") from None
                j1, j2 = stage_payoff(scenario, y.t, y.x, a1, a2)
                self.attacker_fns[(a1, a2)] = cont.v2.add_affine(j2.intercept, j2.slope)
                self.defender_coefs[(a1, a2)] = (j1.intercept + cont.v1, j1.slope)

    def _sort_key(self, a2: int) -> tuple[int, int]:
        return (category_of(self.scenario.category_map, a2), a2)

    def response(self, p: float) -> tuple[PiecewiseLinearFn, tuple[ThetaRegion, ...]]:
        """Attacker upper envelope and best-response regions at mix p."""
        candidates = []
        for a2 in self.attacker_actions:
            mixed = combine(
                [self.attacker_fns[(0, a2)], self.attacker_fns[(1, a2)]],
                [1.0 - p, p],
            )
            candidates.append((self._sort_key(a2), mixed))
        envelope, raw = upper_envelope(candidates)
        regions = tuple(ThetaRegion(lo, hi, key[1], key[0]) for lo, hi, key in raw)
        return envelope, regions

    def objective(self, p: float, regions: Sequence[ThetaRegion]) -> float:
        """Defender expected value at mix p against the given regions."""
        total = 0.0
        for region in regions:
            c0, s0 = self.defender_coefs[(0, region.action)]
            c1, s1 = self.defender_coefs[(1, region.action)]
            c = (1.0 - p) * c0 + p * c1
            s = (1.0 - p) * s0 + p * s1
            total += c * band_moment(self.belief, region.lo, region.hi, 0)
            total += s * band_moment(self.belief, region.lo, region.hi, 1)
        return total

    def value(self, p: float) -> float:
        return self.objective(p, self.response(p)[1])

    def structure_change_points(self) -> list[float]:
        """Defense probabilities where the best-response structure can change.

        For attacker actions b and c the indifference boundary solves
        (1-p) * [g0_b - g0_c](theta) + p * [g1_b - g1_c](theta) = 0.
        The boundary crosses a breakpoint of the underlying piecewise
        structure (including the type endpoints) at p values that are
        rational in the function values there; those are exactly the
        kinks of the defender objective that candidate enumeration must
        hit, the full-deterrence probability among them.
        """
        points: set[float] = set()
        actions = self.attacker_actions
        for i, b in enumerate(actions):
            for c in actions[i + 1 :]:
                breakpoints: set[float] = set()
                for a1 in (0, 1):
                    breakpoints.update(self.attacker_fns[(a1, b)].breakpoints)
                    breakpoints.update(self.attacker_fns[(a1, c)].breakpoints)
                for bp in breakpoints:
                    d0 = self.attacker_fns[(0, b)](bp) - self.attacker_fns[(0, c)](bp)
                    d1 = self.attacker_fns[(1, b)](bp) - self.attacker_fns[(1, c)](bp)
                    denom = d0 - d1
                    if denom == 0.0:
                        continue
                    p = d0 / denom
                    if 0.0 < p < 1.0:
                        points.add(p)
        return sorted(points)


def _golden_section_max(
    fn: Callable[[float], float], lo: float, hi: float, tol: float = REFINE_TOL
) -> tuple[float, float]:
    """Locate a maximum of fn on [lo, hi]; returns (argmax, value).

    Reports the smallest probe within VALUE_TOL of the best seen, so a
    flat stretch resolves to its left edge.
    """
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    probes = [(lo, fn(lo)), (hi, fn(hi))]
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    probes.append((c, fc))
    probes.append((d, fd))
    while d - c > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
            probes.append((c, fc))
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
            probes.append((d, fd))
    best = max(v for _, v in probes)
    arg = min(p for p, v in probes if v >= best - VALUE_TOL)
    return arg, best


def best_response_regions(
    scenario: Scenario, y: ExpandedState, p: float, continuation: Continuation
) -> tuple[ThetaRegion, ...]:
    """Follower best-response partition of the type interval at mix p."""
    return _StageGame(scenario, y, continuation).response(p)[1]


def attacker_envelope(
    scenario: Scenario, y: ExpandedState, p: float, continuation: Continuation
) -> tuple[PiecewiseLinearFn, tuple[ThetaRegion, ...]]:
    """Follower value function and regions at mix p."""
    return _StageGame(scenario, y, continuation).response(p)


def defender_objective(
    scenario: Scenario,
    y: ExpandedState,
    p: float,
    regions: Sequence[ThetaRegion],
    continuation: Continuation,
) -> float:
    """Leader expected value at mix p against fixed follower regions."""
    return _StageGame(scenario, y, continuation).objective(p, regions)


def compose_equivalent_utilities(
    scenario: Scenario, y: ExpandedState, continuation: Continuation
) -> dict[tuple[int, int], tuple[tuple[float, float], PiecewiseLinearFn]]:
    """Per action pair: total payoffs with continuation values folded in.

    Returns {(a1, a2): (defender (intercept, slope), attacker piecewise
    linear total)}; the stage game is fully described by these.
    """
    game = _StageGame(scenario, y, continuation)
    return {
        key: (game.defender_coefs[key], game.attacker_fns[key])
        for key in sorted(game.defender_coefs)
    }


def solve_stage(
    scenario: Scenario, y: ExpandedState, continuation: Continuation
) -> tuple[StagePolicy, float, PiecewiseLinearFn]:
    """Solve one expanded state's stage game.

    Candidate defense probabilities are the structure-change points, the
    endpoints, and a uniform grid; golden-section search refines every
    bracket between neighboring candidates. The returned probability is
    the smallest one whose value is within VALUE_TOL of the best found.
    """
    game = _StageGame(scenario, y, continuation)
    candidates = {0.0, 1.0}
    candidates.update(game.structure_change_points())
    candidates.update(i / (GRID_CANDIDATES - 1) for i in range(GRID_CANDIDATES))
    ordered = sorted(candidates)

    evaluated: list[tuple[float, float]] = [(p, game.value(p)) for p in ordered]
    for lo, hi in zip(ordered, ordered[1:]):
        if hi - lo > REFINE_TOL:
            evaluated.append(_golden_section_max(game.value, lo, hi))

    best = max(v for _, v in evaluated)
    p_star = min(p for p, v in evaluated if v >= best - VALUE_TOL)
    envelope, regions = game.response(p_star)
    policy = StagePolicy(p_star, regions)
    return policy, game.objective(p_star, regions), envelope


def solve_game(scenario: Scenario) -> SolveResult:
    """Backward induction over all reachable expanded states."""
    stages = enumerate_expanded_states(scenario)
    solutions: dict[ExpandedState, StateSolution] = {}
    for y in stages[-1]:
        solutions[y] = _terminal_solution(scenario, y.x)
    for t in range(scenario.horizon, -1, -1):
        for y in stages[t]:
            policy, v1, v2 = solve_stage(scenario, y, solutions)
            solutions[y] = StateSolution(v1, v2, policy)
    return SolveResult(stages, solutions)


PolicyMap = Mapping[ExpandedState, float]
RegionsMap = Mapping[ExpandedState, Sequence[ThetaRegion]]


def attacker_best_response(
    scenario: Scenario, defender_policy: PolicyMap
) -> dict[ExpandedState, tuple[tuple[ThetaRegion, ...], PiecewiseLinearFn]]:
    """Follower best response against an arbitrary leader policy.

    Backward pass with the leader's mix fixed at every expanded state;
    returns regions and the follower's value function per state.
    """
    stages = enumerate_expanded_states(scenario)
    solutions: dict[ExpandedState, StateSolution] = {}
    out: dict[ExpandedState, tuple[tuple[ThetaRegion, ...], PiecewiseLinearFn]] = {}
    for y in stages[-1]:
        solutions[y] = _terminal_solution(scenario, y.x)
    for t in range(scenario.horizon, -1, -1):
        for y in stages[t]:
            try:
                p = defender_policy[y]
            except KeyError:
                raise PolicyCoverageError(f"defender policy missing {y}") from None
            envelope, regions = attacker_envelope(scenario, y, p, solutions)
            solutions[y] = StateSolution(0.0, envelope, StagePolicy(p, regions))
            out[y] = (regions, envelope)
    return out


def evaluate_policy_pair(
    scenario: Scenario, defender_policy: PolicyMap, attacker_regions: RegionsMap
) -> tuple[float, PiecewiseLinearFn]:
    """Exact expected utilities of a policy pair at the initial state.

    Forward recursion over the expanded-state tree, no sampling. The
    defender number averages types with the belief held at each node,
    exactly as the solver's objective does; the attacker curve is the
    type-conditional total obtained by stitching region pieces.
    """
    stages = enumerate_expanded_states(scenario)
    u1: dict[ExpandedState, float] = {}
    u2: dict[ExpandedState, PiecewiseLinearFn] = {}
    for y in stages[-1]:
        sol = _terminal_solution(scenario, y.x)
        u1[y] = sol.v1
        u2[y] = sol.v2

    for t in range(scenario.horizon, -1, -1):
        for y in stages[t]:
            try:
                p = defender_policy[y]
            except KeyError:
                raise PolicyCoverageError(f"defender policy missing {y}") from None
            try:
                regions = attacker_regions[y]
            except KeyError:
                raise PolicyCoverageError(f"attacker policy missing {y}") from None

            belief = y.belief()
            total = 0.0
            curve_parts: list[PiecewiseLinearFn] = []
            for region in regions:
                weights = (1.0 - p, p)
                c = s = 0.0
                segs: list[PiecewiseLinearFn] = []
                for a1, w in zip((0, 1), weights):
                    j1, j2 = stage_payoff(scenario, y.t, y.x, a1, region.action)
                    y_next = successor(scenario, y, a1, region.action)
                    c += w * (j1.intercept + u1[y_next])
                    s += w * j1.slope
                    segs.append(
                        u2[y_next]
                        .restrict(region.lo, region.hi)
                        .add_affine(j2.intercept, j2.slope)
                        .scale(w)
                    )
                total += c * band_moment(belief, region.lo, region.hi, 0)
                total += s * band_moment(belief, region.lo, region.hi, 1)
                curve_parts.append(combine(segs, [1.0, 1.0]))
            u1[y] = total
            u2[y] = stitch(curve_parts)

    y0 = stages[0][0]
    return u1[y0], u2[y0]


def policies_from_result(result: SolveResult) -> tuple[dict[ExpandedState, float], dict[ExpandedState, tuple[ThetaRegion, ...]]]:
    """Split a solve result into the two policy maps evaluation expects."""
    defender: dict[ExpandedState, float] = {}
    attacker: dict[ExpandedState, tuple[ThetaRegion, ...]] = {}
    for stage in result.stages[:-1]:
        for y in stage:
            policy = result.policy(y)
            defender[y] = policy.defender_p
            attacker[y] = policy.regions
    return defender, attacker
