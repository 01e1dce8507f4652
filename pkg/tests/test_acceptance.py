"""End-to-end acceptance checks, one per shipped guarantee.

Run `pytest tests/test_acceptance.py -v -s` to get one printed line per
criterion. Each check prints its measured numbers, so a failing line
carries enough context to debug without rerunning.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import beta as beta_fn

from bayesgame.belief import (
    BeliefParams,
    GridBelief,
    binomial_likelihood,
    nonparametric_update,
    regularized_incomplete_beta,
    update_params,
)
from bayesgame.equilibrium import (
    ExpandedState,
    attacker_threshold,
    best_response_regions,
    defender_objective,
    solve_game,
    solve_stage,
    successor,
    terminal_continuation,
)
from bayesgame.game_model import stage_payoff
from bayesgame.simulate import run_simulation
from bayesgame.te_scenario import build_te_scenario, default_config


def report(number: int, label: str, ok: bool, detail: str) -> None:
    status = "pass" if ok else "FAIL"
    print(f"criterion {number:2d} [{status}] {label}: {detail}")


@pytest.fixture(scope="module")
def scenario():
    return build_te_scenario(default_config())


@pytest.fixture(scope="module")
def result(scenario):
    return solve_game(scenario)


def test_criterion_01_grid_update_matches_conjugate_posterior():
    started = time.perf_counter()
    worst = 0.0
    for a0, b0 in itertools.product((0.5, 1.0, 2.0, 9.0), repeat=2):
        prior = GridBelief.from_params(BeliefParams(a0, b0))
        for total in range(1, 6):
            for k in range(total + 1):
                updated = nonparametric_update(
                    prior, lambda t, k=k, total=total: binomial_likelihood(k, total, t)
                )
                exact = GridBelief.from_params(
                    update_params(BeliefParams(a0, b0), k, total)
                )
                worst = max(worst, updated.l1_distance(exact))
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-6 and elapsed < 10.0
    report(1, "grid update vs conjugate posterior", ok,
           f"max L1 {worst:.3e} (tol 1e-6), {elapsed:.1f}s (limit 10s)")
    assert ok


def test_criterion_02_incomplete_beta_matches_quadrature():
    xs = (0.02, 0.1, 0.3, 0.5, 0.62, 0.8, 0.95, 0.999)
    shapes = (0.5, 1.5, 2.0, 7.5, 20.0)
    worst = 0.0
    count = 0
    for x, a, b in itertools.product(xs, shapes, shapes):
        oracle, _ = quad(
            lambda t: (1.0 - t) ** (b - 1.0), 0.0, x,
            weight="alg", wvar=(a - 1.0, 0.0), epsabs=1e-13, epsrel=1e-12,
        )
        oracle /= beta_fn(a, b)
        worst = max(worst, abs(regularized_incomplete_beta(x, a, b) - oracle))
        count += 1
    ok = worst <= 1e-9 and count == 200
    report(2, "incomplete beta vs adaptive quadrature", ok,
           f"max abs err {worst:.3e} over {count} points (tol 1e-9)")
    assert ok


def test_criterion_03_deterrence_endpoints(scenario):
    y_hot = ExpandedState(2, 3, 9.0, 1.0)
    hot, _, _ = solve_stage(scenario, y_hot, terminal_continuation(scenario, y_hot))
    hot_regions = [r.category for r in hot.regions]
    y_cold = ExpandedState(2, 3, 1.0, 9.0)
    cold, _, _ = solve_stage(scenario, y_cold, terminal_continuation(scenario, y_cold))
    threshold = cold.regions[0].hi
    ok = (
        abs(hot.defender_p - 0.6667) <= 1e-3
        and hot_regions == [0]
        and cold.defender_p == 0.0
        and abs(threshold - 0.3333) <= 1e-3
    )
    report(3, "deterrence endpoints at the aggressive state", ok,
           f"confident-hostile p*={hot.defender_p:.4f} (want 0.6667±1e-3, no attackers), "
           f"confident-timid p*={cold.defender_p:g}, threshold {threshold:.4f} "
           f"(want 0.3333±1e-3)")
    assert ok


def test_criterion_04_belief_sweep_monotone(scenario):
    mixes = []
    thresholds = []
    for beta in range(1, 10):
        y = ExpandedState(2, 3, float(10 - beta), float(beta))
        policy, _, _ = solve_stage(scenario, y, terminal_continuation(scenario, y))
        mixes.append(policy.defender_p)
        attack = [r for r in policy.regions if r.category > 0]
        thresholds.append(attack[0].lo if attack else 1.0)
    mix_monotone = all(a >= b - 1e-9 for a, b in zip(mixes, mixes[1:]))
    thr_monotone = all(a >= b - 1e-9 for a, b in zip(thresholds, thresholds[1:]))
    ok = mix_monotone and thr_monotone and thresholds[-1] >= 1 / 3 - 1e-6
    report(4, "belief sweep monotonicity", ok,
           f"p* {mixes[0]:.4f}..{mixes[-1]:.4f} nonincreasing={mix_monotone}, "
           f"threshold {thresholds[0]:.4f}..{thresholds[-1]:.4f} "
           f"nonincreasing={thr_monotone}, limit >= 1/3-1e-6")
    assert ok


def test_criterion_05_state_sweep_monotone(scenario):
    values = []
    harmless = None
    for rank in range(1, 6):
        y = ExpandedState(2, rank, 1.0, 2.0)
        policy, v1, _ = solve_stage(scenario, y, terminal_continuation(scenario, y))
        values.append(v1)
        if rank == 1:
            harmless = (policy.defender_p, [r.category for r in policy.regions])
    monotone = all(a >= b - 1e-9 for a, b in zip(values, values[1:]))
    ok = monotone and harmless == (0.0, [0])
    report(5, "state sweep monotonicity", ok,
           f"V1 by rank {['%.3f' % v for v in values]} nonincreasing={monotone}; "
           f"no-gap rank: p*={harmless[0]:g}, attack-free={harmless[1] == [0]}")
    assert ok


def test_criterion_06_middle_stage_pools_on_passivity(result):
    rows = []
    ok = True
    for y in result.stages[1]:
        policy = result.policy(y)
        quiet = [r.category for r in policy.regions] == [0]
        ok = ok and policy.defender_p == 0.0 and quiet
        rows.append(f"x={y.x}: p*={policy.defender_p:g}, quiet={quiet}")
    report(6, "middle stage pools on passivity", ok, "; ".join(rows))
    assert ok


def test_criterion_07_monte_carlo_matches_dp(scenario, result):
    started = time.perf_counter()
    summary = run_simulation(scenario, result, 100_000, seed=123)
    elapsed = time.perf_counter() - started
    target = result.v1(result.initial)
    deviation = abs(summary.defender_mean - target)
    ok = deviation <= 3.0 * summary.defender_stderr and elapsed < 30.0
    report(7, "Monte Carlo mean vs solver value", ok,
           f"mean {summary.defender_mean:.6f} vs {target:.6f}, "
           f"|dev| {deviation:.2e} <= 3se {3 * summary.defender_stderr:.2e}, "
           f"{elapsed:.1f}s (limit 30s)")
    assert ok


def test_criterion_08_no_attacker_policy_beats_solver(scenario, result):
    states = [y for layer in result.stages[:-1] for y in layer]
    index = {y: i for i, y in enumerate(states)}
    terminal_offset = len(states)
    terminals = list(result.stages[-1])
    index.update({y: terminal_offset + i for i, y in enumerate(terminals)})

    # per state and action pair: attacker payoff coefficients + successor id
    pay = {}
    step = {}
    for y in states:
        for a1 in (0, 1):
            for a2 in (0, 1):
                _, j2 = stage_payoff(scenario, y.t, y.x, a1, a2)
                pay[(index[y], a1, a2)] = (j2.intercept, j2.slope)
                step[(index[y], a1, a2)] = index[successor(scenario, y, a1, a2)]
    mixes = [result.policy(y).defender_p for y in states]

    worst = -math.inf
    grid = [round(0.05 * i, 2) for i in range(21)]
    top = {index[y]: result.v2(y) for y in states}
    for theta in grid:
        terminal_vals = [scenario.terminal_value(y.x)[1](theta) for y in terminals]
        bound = top[0](theta)
        for policy in itertools.product((0, 1), repeat=len(states)):
            values = [0.0] * len(states) + terminal_vals
            for i in range(len(states) - 1, -1, -1):
                a2 = policy[i]
                p = mixes[i]
                total = 0.0
                for a1, weight in ((0, 1.0 - p), (1, p)):
                    if weight == 0.0:
                        continue
                    intercept, slope = pay[(i, a1, a2)]
                    total += weight * (intercept + slope * theta + values[step[(i, a1, a2)]])
                values[i] = total
            worst = max(worst, values[0] - bound)
    ok = worst <= 1e-7
    report(8, "brute-force follower optimality", ok,
           f"max excess over solver value {worst:.3e} across "
           f"{2 ** len(states)} policies x {len(grid)} types (tol 1e-7)")
    assert ok


def test_criterion_09_no_defense_mix_beats_solver(scenario, result):
    worst = -math.inf
    count = 0
    for layer in result.stages[:-1]:
        for y in layer:
            v1 = result.v1(y)
            for p in np.linspace(0.0, 1.0, 1000):
                regions = best_response_regions(scenario, y, float(p), result.solutions)
                value = defender_objective(scenario, y, float(p), regions, result.solutions)
                worst = max(worst, value - v1)
                count += 1
    ok = worst <= 1e-7
    report(9, "grid leader optimality", ok,
           f"max excess over solver value {worst:.3e} across {count} probes (tol 1e-7)")
    assert ok


def test_criterion_10_structural_invariants(scenario, result):
    problems = []

    alpha0, beta0 = scenario.prior
    for t, layer in enumerate(result.stages):
        for y in layer:
            if y.alpha + y.beta != alpha0 + beta0 + t * scenario.category_map.total:
                problems.append(f"belief mass drifts at {y}")

    for layer in result.stages:
        for y in layer:
            fn = result.v2(y)
            if abs(fn(0.0)) > 1e-12:
                problems.append(f"V2(0) != 0 at {y}")
            slopes = [piece[1] for piece in fn.pieces]
            if any(s < -1e-12 for s in slopes):
                problems.append(f"V2 decreasing at {y}")
            if any(b < a - 1e-9 for a, b in zip(slopes, slopes[1:])):
                problems.append(f"V2 not convex at {y}")

    for y in result.stages[scenario.horizon]:
        categories = [r.category for r in result.policy(y).regions]
        if categories not in ([0], [0, 1]):
            problems.append(f"final-stage regions not threshold-shaped at {y}")

    again = solve_game(scenario)
    for layer in result.stages:
        for y in layer:
            a, b = result.solutions[y], again.solutions[y]
            same = a.v1 == b.v1 and a.v2.breakpoints == b.v2.breakpoints
            if a.policy is not None:
                same = same and a.policy.defender_p == b.policy.defender_p
                same = same and a.policy.regions == b.policy.regions
            if not same:
                problems.append(f"repeat solve differs at {y}")

    ok = not problems
    report(10, "structural invariants", ok,
           "conservation, V2(·,0)=0, convex nondecreasing V2, threshold regions, "
           "deterministic repeat solve" if ok else "; ".join(problems[:4]))
    assert ok
