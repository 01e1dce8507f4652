import math

import numpy as np
import pytest
from scipy.special import betainc

from bayesgame.belief import CategoryMap
from bayesgame.equilibrium import (
    ExpandedState,
    PolicyCoverageError,
    StagePolicy,
    ThetaRegion,
    attacker_best_response,
    attacker_envelope,
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
from bayesgame.game_model import AffineInType, Scenario
from bayesgame.te_scenario import build_te_scenario, default_config


def zero_sum_free_scenario():
    """Single stage, two ranks, every payoff identically zero."""
    zero = AffineInType(0.0, 0.0)
    transitions = {(0, 0, a1, a2): 1 + a2 for a1 in (0, 1) for a2 in (0, 1)}
    payoffs = {key: (zero, zero) for key in transitions}
    return Scenario(
        horizon=0,
        states=((0,), (1, 2)),
        defender_actions=(0, 1),
        attacker_actions=(0, 1),
        transitions=transitions,
        payoffs=payoffs,
        category_map=CategoryMap(1, {0: 0, 1: 1}),
        prior=(1.0, 1.0),
    )


@pytest.fixture(scope="module")
def scenario():
    return build_te_scenario(default_config())


@pytest.fixture(scope="module")
def result(scenario):
    return solve_game(scenario)


class TestExpandedStates:
    def test_layer_sizes(self, scenario):
        layers = enumerate_expanded_states(scenario)
        assert [len(layer) for layer in layers] == [1, 3, 7, 12]

    def test_initial_state(self, scenario):
        layers = enumerate_expanded_states(scenario)
        assert layers[0][0] == ExpandedState(0, 0, 1.0, 2.0)

    def test_stage_one_layer(self, scenario):
        layers = enumerate_expanded_states(scenario)
        assert layers[1] == (
            ExpandedState(1, 1, 1.0, 3.0),
            ExpandedState(1, 3, 2.0, 2.0),
            ExpandedState(1, 2, 2.0, 2.0),
        )

    def test_belief_mass_conservation(self, scenario):
        for t, layer in enumerate(enumerate_expanded_states(scenario)):
            for y in layer:
                assert y.alpha + y.beta == 3.0 + t * scenario.category_map.total

    def test_successor_updates_belief(self, scenario):
        y = ExpandedState(0, 0, 1.0, 2.0)
        quiet = successor(scenario, y, 0, 0)
        attack = successor(scenario, y, 0, 1)
        assert (quiet.x, quiet.alpha, quiet.beta) == (1, 1.0, 3.0)
        assert (attack.x, attack.alpha, attack.beta) == (3, 2.0, 2.0)


class TestAttackerThreshold:
    def test_interior_threshold(self):
        np.testing.assert_allclose(attacker_threshold(0.0, 10.0, 4.0, 2.0), 1 / 3)
        np.testing.assert_allclose(attacker_threshold(0.5, 10.0, 4.0, 2.0), 2 / 3)

    def test_deterrence_is_inclusive(self):
        # depth (1 - p)(r_n - r_a) == c2 exactly: no type strictly gains
        assert attacker_threshold(0.5, 10.0, 6.0, 2.0) is None

    def test_certain_defense_deters(self):
        assert attacker_threshold(1.0, 10.0, 4.0, 0.5) is None

    def test_no_gap_deters(self):
        assert attacker_threshold(0.0, 10.0, 10.0, 0.0) is None

    def test_free_attack_threshold_zero(self):
        np.testing.assert_allclose(attacker_threshold(0.0, 10.0, 4.0, 0.0), 0.0)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            attacker_threshold(1.5, 10.0, 4.0, 2.0)
        with pytest.raises(ValueError):
            attacker_threshold(0.5, 4.0, 10.0, 2.0)
        with pytest.raises(ValueError):
            attacker_threshold(0.5, 10.0, 4.0, -1.0)


class TestFinalStageSolve:
    def test_confident_aggressive_belief_fully_deters(self, scenario):
        y = ExpandedState(2, 3, 9.0, 1.0)
        policy, v1, _ = solve_stage(scenario, y, terminal_continuation(scenario, y))
        np.testing.assert_allclose(policy.defender_p, 2 / 3, atol=1e-9)
        assert [r.action for r in policy.regions] == [0]
        np.testing.assert_allclose(v1, 10.0 - 2.0 * policy.defender_p, atol=1e-9)
        assert attacker_threshold(policy.defender_p, 10.0, 4.0, 2.0) is None

    def test_confident_timid_belief_skips_defense(self, scenario):
        y = ExpandedState(2, 3, 1.0, 9.0)
        policy, v1, _ = solve_stage(scenario, y, terminal_continuation(scenario, y))
        assert policy.defender_p == 0.0
        assert [r.action for r in policy.regions] == [0, 1]
        np.testing.assert_allclose(policy.regions[0].hi, 1 / 3, atol=1e-9)
        # expected loss is the gap times the tail mean of Beta(1, 9)
        tail = 0.1 * (1.0 - betainc(2.0, 9.0, 1 / 3))
        np.testing.assert_allclose(v1, 10.0 - 6.0 * tail, atol=1e-9)

    def test_objective_against_fixed_regions(self, scenario):
        y = ExpandedState(2, 3, 1.0, 2.0)
        continuation = terminal_continuation(scenario, y)
        regions = best_response_regions(scenario, y, 0.0, continuation)
        value = defender_objective(scenario, y, 0.0, regions, continuation)
        np.testing.assert_allclose(value, 10.0 - 120.0 / 81.0, atol=1e-12)

    def test_regions_partition_type_interval(self, scenario):
        y = ExpandedState(2, 3, 1.0, 2.0)
        continuation = terminal_continuation(scenario, y)
        for p in (0.0, 0.25, 0.5, 0.75, 1.0):
            regions = best_response_regions(scenario, y, p, continuation)
            assert regions[0].lo == 0.0
            assert regions[-1].hi == 1.0
            for left, right in zip(regions, regions[1:]):
                assert left.hi == right.lo

    def test_envelope_matches_regions(self, scenario):
        y = ExpandedState(2, 3, 1.0, 2.0)
        continuation = terminal_continuation(scenario, y)
        envelope, regions = attacker_envelope(scenario, y, 0.0, continuation)
        # attack surplus -2 + 6 theta under no defense, floor at zero
        np.testing.assert_allclose(envelope(0.2), 0.0, atol=1e-12)
        np.testing.assert_allclose(envelope(1 / 3), 0.0, atol=1e-12)
        np.testing.assert_allclose(envelope(0.9), -2.0 + 6.0 * 0.9, atol=1e-12)
        assert regions[0].category == 0
        assert regions[1].category == 1

    def test_unaffordable_attack_cost_deters_every_rank(self):
        # final-stage cost above the worst reward gap: nobody attacks, so
        # defense buys nothing anywhere
        from bayesgame.te_scenario import TeConfig

        scn = build_te_scenario(TeConfig(attack_costs=(2.0, 0.0, 11.0)))
        for rank in range(1, 6):
            y = ExpandedState(2, rank, 2.0, 2.0)
            policy, v1, _ = solve_stage(scn, y, terminal_continuation(scn, y))
            assert policy.defender_p == 0.0
            assert [r.action for r in policy.regions] == [0]
            np.testing.assert_allclose(v1, 10.0, atol=1e-12)

    def test_wrong_stage_rejected(self, scenario):
        with pytest.raises(ValueError):
            terminal_continuation(scenario, ExpandedState(1, 3, 2.0, 2.0))

    def test_missing_continuation_raises(self, scenario):
        y = ExpandedState(2, 3, 2.0, 3.0)
        with pytest.raises(PolicyCoverageError):
            solve_stage(scenario, y, {})


class TestComposedUtilities:
    def test_final_stage_tables(self, scenario):
        y = ExpandedState(2, 3, 1.0, 2.0)
        table = compose_equivalent_utilities(scenario, y, terminal_continuation(scenario, y))
        assert set(table) == {(0, 0), (0, 1), (1, 0), (1, 1)}
        coefs = {key: table[key][0] for key in table}
        assert coefs[(0, 0)] == (10.0, 0.0)
        assert coefs[(0, 1)] == (10.0, -6.0)
        assert coefs[(1, 0)] == (8.0, 0.0)
        assert coefs[(1, 1)] == (8.0, 0.0)
        for theta in (0.0, 0.4, 1.0):
            np.testing.assert_allclose(table[(0, 0)][1](theta), 0.0, atol=1e-12)
            np.testing.assert_allclose(table[(0, 1)][1](theta), -2.0 + 6.0 * theta, atol=1e-12)
            np.testing.assert_allclose(table[(1, 1)][1](theta), -2.0, atol=1e-12)

    def test_cyber_stage_folds_continuation(self, scenario, result):
        y = ExpandedState(1, 3, 2.0, 2.0)
        table = compose_equivalent_utilities(scenario, y, result.solutions)
        quiet_next = successor(scenario, y, 0, 0)
        np.testing.assert_allclose(table[(0, 0)][0][0], result.v1(quiet_next), atol=1e-12)
        # escalation at the middle stage is free for the attacker, so the
        # composed payoff is exactly the successor value
        attack_next = successor(scenario, y, 0, 1)
        v2_next = result.v2(attack_next)
        for theta in (0.5, 0.99, 1.0):
            np.testing.assert_allclose(table[(0, 1)][1](theta), v2_next(theta), atol=1e-12)
        assert v2_next(1.0) > 0.0


class TestSolveGame:
    # per-state equilibrium values confirmed by direct evaluation of the
    # defender objective on a fine grid (see optimality tests below)
    FINAL_STAGE = {
        (1, 1.0, 4.0): (0.0, 10.0),
        (1, 2.0, 3.0): (0.0, 10.0),
        (2, 2.0, 3.0): (0.2282404824, 9.2490334749),
        (3, 2.0, 3.0): (0.5638361174, 8.7790880862),
        (3, 3.0, 2.0): (0.6560016458, 8.6768144110),
        (4, 3.0, 2.0): (0.7442280701, 8.5055691288),
        (5, 3.0, 2.0): (0.7963867235, 8.4035140636),
    }

    def test_final_stage_values(self, result):
        for (x, alpha, beta), (p_star, v1) in self.FINAL_STAGE.items():
            sol = result.solutions[ExpandedState(2, x, alpha, beta)]
            np.testing.assert_allclose(sol.policy.defender_p, p_star, atol=1e-8)
            np.testing.assert_allclose(sol.v1, v1, atol=1e-8)

    def test_middle_stage_is_quiet_everywhere(self, result):
        for y in result.stages[1]:
            policy = result.policy(y)
            assert policy.defender_p == 0.0
            assert [r.action for r in policy.regions] == [0]

    def test_initial_stage_pools_on_quiet(self, result):
        policy = result.policy(result.initial)
        assert policy.defender_p == 0.0
        assert [r.action for r in policy.regions] == [0]
        assert result.v1(result.initial) == 10.0

    def test_initial_attacker_value_is_flat_zero(self, result):
        v2 = result.v2(result.initial)
        for theta in np.linspace(0.0, 1.0, 11):
            np.testing.assert_allclose(v2(theta), 0.0, atol=1e-12)

    def test_attacker_value_nonnegative_and_nondecreasing(self, result):
        grid = np.linspace(0.0, 1.0, 101)
        for layer in result.stages[:-1]:
            for y in layer:
                values = np.array([result.v2(y)(t) for t in grid])
                assert values.min() >= -1e-12
                assert np.all(np.diff(values) >= -1e-9)

    def test_deeper_compromise_costs_the_defender(self, result):
        # at the shared stage-2 belief (3, 2), value falls with rank
        v = {
            x: result.v1(ExpandedState(2, x, 3.0, 2.0))
            for x in (3, 4, 5)
        }
        assert v[3] > v[4] > v[5]

    def test_repeat_solve_is_bit_identical(self, scenario, result):
        again = solve_game(scenario)
        for layer in result.stages:
            for y in layer:
                a, b = result.solutions[y], again.solutions[y]
                assert a.v1 == b.v1
                if a.policy is not None:
                    assert a.policy.defender_p == b.policy.defender_p
                    assert a.policy.regions == b.policy.regions

    def test_zero_game_defaults_to_passive_quiet(self):
        scn = zero_sum_free_scenario()
        res = solve_game(scn)
        policy = res.policy(res.initial)
        assert policy.defender_p == 0.0
        assert [r.action for r in policy.regions] == [0]
        assert res.v1(res.initial) == 0.0


class TestOptimality:
    def test_defender_mix_beats_grid(self, scenario, result):
        rng = np.random.default_rng(7)
        for layer in result.stages[:-1]:
            for y in layer:
                sol = result.solutions[y]
                probs = np.concatenate([np.linspace(0.0, 1.0, 41), rng.random(8)])
                for p in probs:
                    regions = best_response_regions(scenario, y, float(p), result.solutions)
                    rival = defender_objective(scenario, y, float(p), regions, result.solutions)
                    assert rival <= sol.v1 + 1e-7

    def test_attacker_regions_maximize_pointwise(self, scenario, result):
        for layer in result.stages[:-1]:
            for y in layer:
                policy = result.policy(y)
                envelope, _ = attacker_envelope(
                    scenario, y, policy.defender_p, result.solutions
                )
                for theta in np.linspace(0.0, 1.0, 21):
                    chosen = policy.action_for(float(theta))
                    table = compose_equivalent_utilities(scenario, y, result.solutions)
                    p = policy.defender_p
                    payoff = (1 - p) * table[(0, chosen)][1](theta) + p * table[(1, chosen)][1](
                        theta
                    )
                    np.testing.assert_allclose(payoff, envelope(float(theta)), atol=1e-9)


class TestPolicyEvaluation:
    def test_forward_evaluation_matches_backward_values(self, scenario, result):
        defender, attacker = policies_from_result(result)
        u1, u2 = evaluate_policy_pair(scenario, defender, attacker)
        np.testing.assert_allclose(u1, result.v1(result.initial), atol=1e-9)
        for theta in np.linspace(0.0, 1.0, 21):
            np.testing.assert_allclose(
                u2(float(theta)), result.v2(result.initial)(float(theta)), atol=1e-9
            )

    def test_best_response_reproduces_solver_regions(self, scenario, result):
        defender, _ = policies_from_result(result)
        response = attacker_best_response(scenario, defender)
        for layer in result.stages[:-1]:
            for y in layer:
                regions, envelope = response[y]
                solver_regions = result.policy(y).regions
                assert [r.action for r in regions] == [r.action for r in solver_regions]
                for theta in np.linspace(0.0, 1.0, 11):
                    np.testing.assert_allclose(
                        envelope(float(theta)),
                        result.v2(y)(float(theta)),
                        atol=1e-9,
                    )

    def test_handcrafted_policy_loses_value(self, scenario, result):
        # always defend, never look at the belief: strictly worse here
        defender = {y: 1.0 for layer in result.stages[:-1] for y in layer}
        response = attacker_best_response(scenario, defender)
        attacker = {y: regions for y, (regions, _) in response.items()}
        u1, _ = evaluate_policy_pair(scenario, defender, attacker)
        assert u1 < result.v1(result.initial) - 1.0

    def test_policy_gaps_raise(self, scenario, result):
        defender, attacker = policies_from_result(result)
        defender = dict(defender)
        del defender[result.initial]
        with pytest.raises(PolicyCoverageError):
            evaluate_policy_pair(scenario, defender, attacker)


class TestStagePolicyLookup:
    def test_boundary_prefers_lower_category(self):
        regions = (
            ThetaRegion(0.0, 0.4, 0, 0),
            ThetaRegion(0.4, 1.0, 2, 1),
        )
        policy = StagePolicy(0.5, regions)
        assert policy.action_for(0.4) == 0
        assert policy.action_for(0.41) == 2
        assert policy.intervals_for(0) == ((0.0, 0.4),)

    def test_outside_domain_rejected(self):
        policy = StagePolicy(0.0, (ThetaRegion(0.0, 1.0, 0, 0),))
        with pytest.raises(ValueError):
            policy.action_for(1.5)
