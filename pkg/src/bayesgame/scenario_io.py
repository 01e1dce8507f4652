"""Scenario file format: a single JSON document.

Top-level keys: horizon, states, actions {defender, attacker},
categories {K, map}, prior {alpha, beta}, transitions (array of
{t, x, a1, a2, next}), payoffs (array of {t, x, a1, a2, p1_intercept,
p1_slope, p2_intercept, p2_slope}), optional terminal_values (array of
{x, v1, v2_intercept, v2_slope}), and an optional te_config block that
lets tooling rebuild the bundled scenario with modified economics.

Malformed JSON and schema problems raise ScenarioFormatError with a
location (line/column for syntax, key path otherwise); semantic
problems are left to validate_scenario.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .belief import CategoryMap
from .game_model import AffineInType, Scenario
from .te_scenario import TeConfig


class ScenarioFormatError(ValueError):
    """Scenario file cannot be parsed into a Scenario."""


@dataclass(frozen=True)
class LoadedScenario:
    scenario: Scenario
    config: TeConfig | None


def _fail(path: str, message: str) -> None:
    raise ScenarioFormatError(f"{path}: {message}")


def _get(obj: Any, key: str, path: str) -> Any:
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    if key not in obj:
        _fail(path, f"missing key {key!r}")
    return obj[key]


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    return value


def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    return float(value)


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        _fail(path, "expected an array")
    return value


def _action_key(entry: Any, path: str) -> tuple[int, int, int, int]:
    return (
        _as_int(_get(entry, "t", path), f"{path}.t"),
        _as_int(_get(entry, "x", path), f"{path}.x"),
        _as_int(_get(entry, "a1", path), f"{path}.a1"),
        _as_int(_get(entry, "a2", path), f"{path}.a2"),
    )


def parse_scenario(document: dict) -> LoadedScenario:
    """Build a Scenario from a decoded JSON document."""
    horizon = _as_int(_get(document, "horizon", "scenario"), "horizon")

    states_raw = _as_list(_get(document, "states", "scenario"), "states")
    states = tuple(
        tuple(_as_int(x, f"states[{t}][{i}]") for i, x in enumerate(_as_list(layer, f"states[{t}]")))
        for t, layer in enumerate(states_raw)
    )

    actions = _get(document, "actions", "scenario")
    defender = tuple(
        _as_int(a, f"actions.defender[{i}]")
        for i, a in enumerate(_as_list(_get(actions, "defender", "actions"), "actions.defender"))
    )
    attacker = tuple(
        _as_int(a, f"actions.attacker[{i}]")
        for i, a in enumerate(_as_list(_get(actions, "attacker", "actions"), "actions.attacker"))
    )

    categories = _get(document, "categories", "scenario")
    total = _as_int(_get(categories, "K", "categories"), "categories.K")
    mapping_raw = _get(categories, "map", "categories")
    if not isinstance(mapping_raw, dict):
        _fail("categories.map", "expected an object")
    mapping: dict[int, int] = {}
    for action_str, k in mapping_raw.items():
        try:
            action = int(action_str)
        except ValueError:
            _fail("categories.map", f"action id {action_str!r} is not an integer")
        mapping[action] = _as_int(k, f"categories.map[{action_str}]")
    try:
        category_map = CategoryMap(total, mapping)
    except ValueError as exc:
        _fail("categories", str(exc))

    prior_obj = _get(document, "prior", "scenario")
    prior = (
        _as_number(_get(prior_obj, "alpha", "prior"), "prior.alpha"),
        _as_number(_get(prior_obj, "beta", "prior"), "prior.beta"),
    )

    transitions: dict[tuple[int, int, int, int], int] = {}
    for i, entry in enumerate(_as_list(_get(document, "transitions", "scenario"), "transitions")):
        path = f"transitions[{i}]"
        key = _action_key(entry, path)
        if key in transitions:
            _fail(path, f"duplicate transition for {key}")
        transitions[key] = _as_int(_get(entry, "next", path), f"{path}.next")

    payoffs: dict[tuple[int, int, int, int], tuple[AffineInType, AffineInType]] = {}
    for i, entry in enumerate(_as_list(_get(document, "payoffs", "scenario"), "payoffs")):
        path = f"payoffs[{i}]"
        key = _action_key(entry, path)
        if key in payoffs:
            _fail(path, f"duplicate payoff for {key}")
        payoffs[key] = (
            AffineInType(
                _as_number(_get(entry, "p1_intercept", path), f"{path}.p1_intercept"),
                _as_number(_get(entry, "p1_slope", path), f"{path}.p1_slope"),
            ),
            AffineInType(
                _as_number(_get(entry, "p2_intercept", path), f"{path}.p2_intercept"),
                _as_number(_get(entry, "p2_slope", path), f"{path}.p2_slope"),
            ),
        )

    terminal_values: dict[int, tuple[float, AffineInType]] = {}
    if "terminal_values" in document:
        for i, entry in enumerate(_as_list(document["terminal_values"], "terminal_values")):
            path = f"terminal_values[{i}]"
            x = _as_int(_get(entry, "x", path), f"{path}.x")
            if x in terminal_values:
                _fail(path, f"duplicate terminal value for state {x}")
            terminal_values[x] = (
                _as_number(_get(entry, "v1", path), f"{path}.v1"),
                AffineInType(
                    _as_number(_get(entry, "v2_intercept", path), f"{path}.v2_intercept"),
                    _as_number(_get(entry, "v2_slope", path), f"{path}.v2_slope"),
                ),
            )

    config: TeConfig | None = None
    if "te_config" in document:
        try:
            config = TeConfig.from_dict(document["te_config"])
        except (KeyError, TypeError, ValueError) as exc:
            _fail("te_config", str(exc))

    scenario = Scenario(
        horizon=horizon,
        states=states,
        defender_actions=defender,
        attacker_actions=attacker,
        transitions=transitions,
        payoffs=payoffs,
        category_map=category_map,
        prior=prior,
        terminal_values=terminal_values,
    )
    return LoadedScenario(scenario, config)


def load_scenario(path: str | Path) -> LoadedScenario:
    """Load a scenario file; raises ScenarioFormatError on any format problem."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(document, dict):
        raise ScenarioFormatError(f"{path}: top level must be an object")
    return parse_scenario(document)


def scenario_document(scenario: Scenario, config: TeConfig | None = None) -> dict:
    """Scenario as a JSON-ready dict with deterministic ordering."""
    doc: dict[str, Any] = {
        "horizon": scenario.horizon,
        "states": [list(layer) for layer in scenario.states],
        "actions": {
            "defender": list(scenario.defender_actions),
            "attacker": list(scenario.attacker_actions),
        },
        "categories": {
            "K": scenario.category_map.total,
            "map": {str(a): k for a, k in sorted(scenario.category_map.mapping.items())},
        },
        "prior": {"alpha": scenario.prior[0], "beta": scenario.prior[1]},
        "transitions": [
            {"t": t, "x": x, "a1": a1, "a2": a2, "next": nxt}
            for (t, x, a1, a2), nxt in sorted(scenario.transitions.items())
        ],
        "payoffs": [
            {
                "t": t,
                "x": x,
                "a1": a1,
                "a2": a2,
                "p1_intercept": p1.intercept,
                "p1_slope": p1.slope,
                "p2_intercept": p2.intercept,
                "p2_slope": p2.slope,
            }
            for (t, x, a1, a2), (p1, p2) in sorted(scenario.payoffs.items())
        ],
    }
    if scenario.terminal_values:
        doc["terminal_values"] = [
            {"x": x, "v1": v1, "v2_intercept": v2.intercept, "v2_slope": v2.slope}
            for x, (v1, v2) in sorted(scenario.terminal_values.items())
        ]
    if config is not None:
        doc["te_config"] = config.to_dict()
    return doc


def dump_scenario(scenario: Scenario, path: str | Path, config: TeConfig | None = None) -> None:
    """Write a scenario file (UTF-8, LF line endings)."""
    text = json.dumps(scenario_document(scenario, config), indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")
