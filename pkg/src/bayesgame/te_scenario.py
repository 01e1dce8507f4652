"""Bundled scenario: a staged intrusion against a monitored plant.

Three decision stages. At stage 0 an unknown user holds a cyber
foothold; escalating while undefended yields high privilege (state 3),
escalating against an active defense yields medium privilege (state 2),
and staying quiet keeps low privilege (state 1). Stage 1 turns
privilege into physical reach: the five stage-2 states are ranked by
the damage an attack could do, state 1 harmless through state 5 worst.
Stage 2 is the physical attack stage with reward/loss payoffs; earlier
stages carry action costs only.

Rewards are configuration, not constants, so the same builder covers
the calibrated default and variants used in sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .belief import CategoryMap
from .game_model import AffineInType, Scenario

_STAGES = 3  # decision stages 0..2, horizon T = 2


@dataclass(frozen=True)
class TeConfig:
    """Economic parameters of the bundled scenario.

    attacked_rewards maps each final-stage state to the defender's
    reward when an attack lands there; ranks must be ordered worst-last
    (nonincreasing) and never exceed normal_reward. defense_costs and
    attack_costs give the per-stage price of the active defense and of
    attacking.
    """

    normal_reward: float = 10.0
    attacked_rewards: tuple[float, float, float, float, float] = (10.0, 6.0, 4.0, 2.0, 0.0)
    defense_costs: tuple[float, float, float] = (0.1, 2.5, 2.0)
    attack_costs: tuple[float, float, float] = (2.0, 0.0, 2.0)
    prior: tuple[float, float] = (1.0, 2.0)
    category_total: int = 1

    def attacked_reward(self, x: int) -> float:
        return self.attacked_rewards[x - 1]

    def check(self) -> None:
        if len(self.attacked_rewards) != 5:
            raise ValueError("need one attacked reward per final state 1..5")
        for lo, hi in zip(self.attacked_rewards[1:], self.attacked_rewards):
            if lo > hi:
                raise ValueError("attacked rewards must be nonincreasing in state rank")
        if any(r > self.normal_reward for r in self.attacked_rewards):
            raise ValueError("attacked reward exceeds normal operation reward")
        if len(self.defense_costs) != _STAGES or len(self.attack_costs) != _STAGES:
            raise ValueError(f"need {_STAGES} per-stage costs")
        if any(c < 0 for c in self.defense_costs + self.attack_costs):
            raise ValueError("costs must be nonnegative")
        if self.category_total < 1:
            raise ValueError("category total must be >= 1")

    def to_dict(self) -> dict:
        return {
            "normal_reward": self.normal_reward,
            "attacked_rewards": list(self.attacked_rewards),
            "defense_costs": list(self.defense_costs),
            "attack_costs": list(self.attack_costs),
            "prior": list(self.prior),
            "category_total": self.category_total,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TeConfig":
        return cls(
            normal_reward=float(data["normal_reward"]),
            attacked_rewards=tuple(float(r) for r in data["attacked_rewards"]),
            defense_costs=tuple(float(c) for c in data["defense_costs"]),
            attack_costs=tuple(float(c) for c in data["attack_costs"]),
            prior=tuple(float(p) for p in data["prior"]),
            category_total=int(data["category_total"]),
        )


def default_config() -> TeConfig:
    """Calibrated default configuration."""
    return TeConfig()


def full_range_config() -> TeConfig:
    """Variant with strictly decreasing attacked rewards.

    Every final state leaves the attacker a positive surplus, so sweeps
    across states exercise a semi-separating solve at each rank.
    """
    return TeConfig(attacked_rewards=(7.0, 6.0, 4.0, 2.0, 0.0))


def build_te_scenario(config: TeConfig) -> Scenario:
    """Build the bundled scenario from its economic parameters.

    Stage-1 escalation from medium privilege mirrors the high-privilege
    pattern shifted down one rank: undefended escalation reaches the
    next-worse final state, defended escalation the intermediate one,
    and staying quiet preserves the rank. From the harmless rank all
    actions stay harmless.
    """
    config.check()
    nop, attack = 0, 1
    passive, active = 0, 1

    states = ((0,), (1, 2, 3), (1, 2, 3, 4, 5), (1, 2, 3, 4, 5))
    transitions: dict[tuple[int, int, int, int], int] = {}
    payoffs: dict[tuple[int, int, int, int], tuple[AffineInType, AffineInType]] = {}

    escalation = {
        (0, 0): {passive: 3, active: 2},
        (1, 3): {passive: 5, active: 4},
        (1, 2): {passive: 4, active: 3},
        (1, 1): {passive: 1, active: 1},
    }
    for t in (0, 1):
        quiet_target = {0: 1}  # staying quiet at stage 0 lands at the low rank
        for x in states[t]:
            stay = quiet_target.get(x, x)
            for a1 in (passive, active):
                transitions[(t, x, a1, nop)] = stay
                transitions[(t, x, a1, attack)] = escalation[(t, x)][a1]
                defense = AffineInType(-config.defense_costs[t] if a1 == active else 0.0, 0.0)
                for a2 in (nop, attack):
                    offense = AffineInType(-config.attack_costs[t] if a2 == attack else 0.0, 0.0)
                    payoffs[(t, x, a1, a2)] = (defense, offense)

    t_final = 2
    c1 = config.defense_costs[t_final]
    c2 = config.attack_costs[t_final]
    for x in states[t_final]:
        gap = config.normal_reward - config.attacked_reward(x)
        for a1 in (passive, active):
            for a2 in (nop, attack):
                transitions[(t_final, x, a1, a2)] = x
        payoffs[(t_final, x, passive, nop)] = (AffineInType(config.normal_reward, 0.0), AffineInType(0.0, 0.0))
        payoffs[(t_final, x, active, nop)] = (AffineInType(config.normal_reward - c1, 0.0), AffineInType(0.0, 0.0))
        payoffs[(t_final, x, passive, attack)] = (
            AffineInType(config.normal_reward, -gap),
            AffineInType(-c2, gap),
        )
        payoffs[(t_final, x, active, attack)] = (
            AffineInType(config.normal_reward - c1, 0.0),
            AffineInType(-c2, 0.0),
        )

    return Scenario(
        horizon=_STAGES - 1,
        states=states,
        defender_actions=(passive, active),
        attacker_actions=(nop, attack),
        transitions=transitions,
        payoffs=payoffs,
        category_map=CategoryMap(config.category_total, {nop: 0, attack: config.category_total}),
        prior=tuple(config.prior),
    )


def bundled_scenario_path(name: str = "te_default") -> Path:
    """Filesystem path of a bundled scenario, "te_default" or "te_full_range"."""
    path = resources.files("bayesgame") / "data" / f"{name}.json"
    return Path(str(path))
