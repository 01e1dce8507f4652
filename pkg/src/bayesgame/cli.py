"""Command-line front end: solve, simulate, and sweep reports.

Each command ingests a scenario file (or a bundled scenario by name),
solves it, and writes delimited reports plus rendered figures into the
output directory. Exit codes: 0 success, 1 usage error, 2 unreadable or
malformed scenario file, 3 scenario validation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Sequence

from .equilibrium import (
    ExpandedState,
    SolveResult,
    StagePolicy,
    solve_game,
    solve_stage,
    terminal_continuation,
)
from .game_model import Scenario, validate_scenario
from .plotting import render_simulation_figure, render_solve_figures, render_sweep_figure
from .scenario_io import LoadedScenario, ScenarioFormatError, load_scenario
from .simulate import SimulationSummary, expected_attacker_value, run_simulation
from .te_scenario import TeConfig, build_te_scenario, bundled_scenario_path

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3

BUNDLED_NAMES = ("te_default", "te_full_range")
SWEEP_RANGE_TOL = 1e-9


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures exit with code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(value: float) -> str:
    """12 significant digits, compact form."""
    return format(float(value), ".12g")


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _resolve_scenario_path(text: str) -> Path:
    if text in BUNDLED_NAMES:
        return bundled_scenario_path(text)
    return Path(text)


def _load_validated(text: str) -> LoadedScenario | int:
    """Load and validate; returns the scenario or an exit code."""
    try:
        loaded = load_scenario(_resolve_scenario_path(text))
    except ScenarioFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    violations = validate_scenario(loaded.scenario)
    if violations:
        for violation in violations:
            print(f"invalid scenario: {violation}", file=sys.stderr)
        return EXIT_VALIDATION
    return loaded


def _attack_threshold(policy: StagePolicy) -> float:
    """Onset of the first observable-category region, 1.0 if none."""
    for region in policy.regions:
        if region.category > 0:
            return region.lo
    return 1.0


def _regions_text(policy: StagePolicy) -> str:
    return "|".join(
        f"{region.action}:[{_fmt(region.lo)}..{_fmt(region.hi)}]"
        for region in policy.regions
    )


def _ensure_out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- solve


def _values_rows(result: SolveResult) -> list[list[str]]:
    rows = []
    for layer in result.stages:
        for y in layer:
            solution = result.solutions[y]
            if solution.policy is None:
                policy_cells = ["", "", ""]
            else:
                policy_cells = [
                    _fmt(solution.policy.defender_p),
                    _fmt(_attack_threshold(solution.policy)),
                    _regions_text(solution.policy),
                ]
            rows.append(
                [str(y.t), str(y.x), _fmt(y.alpha), _fmt(y.beta), _fmt(solution.v1)]
                + policy_cells
            )
    return rows


def _segment_rows(result: SolveResult) -> list[list[str]]:
    rows = []
    for layer in result.stages:
        for y in layer:
            fn = result.solutions[y].v2
            for index, (intercept, slope) in enumerate(fn.pieces):
                rows.append(
                    [
                        str(y.t),
                        str(y.x),
                        _fmt(y.alpha),
                        _fmt(y.beta),
                        _fmt(fn.breakpoints[index]),
                        _fmt(fn.breakpoints[index + 1]),
                        _fmt(intercept),
                        _fmt(slope),
                    ]
                )
    return rows


def write_solve_reports(result: SolveResult, out: Path, *, plots: bool = True) -> list[Path]:
    """values.csv, v2_segments.csv, and figures for a solved game."""
    values_path = out / "values.csv"
    _write_csv(
        values_path,
        ["t", "x", "alpha", "beta", "v1", "defender_p", "attack_threshold", "attack_regions"],
        _values_rows(result),
    )
    segments_path = out / "v2_segments.csv"
    _write_csv(
        segments_path,
        ["t", "x", "alpha", "beta", "seg_lo", "seg_hi", "intercept", "slope"],
        _segment_rows(result),
    )
    written = [values_path, segments_path]
    if plots:
        written.extend(render_solve_figures(result, out))
    return written


def cmd_solve(args: argparse.Namespace) -> int:
    loaded = _load_validated(args.scenario)
    if isinstance(loaded, int):
        return loaded
    result = solve_game(loaded.scenario)
    out = _ensure_out_dir(args)
    written = write_solve_reports(result, out, plots=not args.no_plots)
    decision_states = sum(len(layer) for layer in result.stages[:-1])
    print(f"solved {decision_states} decision states over horizon {loaded.scenario.horizon}")
    print(f"initial-state defender value: {_fmt(result.v1(result.initial))}")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ------------------------------------------------------------- simulate


def _summary_rows(
    summary: SimulationSummary, seed: int, dp_defender: float, dp_attacker: float
) -> list[list[str]]:
    rows = [
        ["trajectories", str(summary.trajectories)],
        ["seed", str(seed)],
        ["defender_mean", _fmt(summary.defender_mean)],
        ["defender_stderr", _fmt(summary.defender_stderr)],
        ["attacker_mean", _fmt(summary.attacker_mean)],
        ["attacker_stderr", _fmt(summary.attacker_stderr)],
        ["defender_value_dp", _fmt(dp_defender)],
        ["attacker_value_dp", _fmt(dp_attacker)],
    ]
    for t, frequency in enumerate(summary.attack_frequency):
        rows.append([f"attack_frequency_t{t}", _fmt(frequency)])
    return rows


def _trajectory_rows(summary: SimulationSummary) -> list[list[str]]:
    rows = []
    for index, record in enumerate(summary.records or ()):
        for step in record.steps:
            rows.append(
                [
                    str(index),
                    _fmt(record.theta),
                    str(step.state.t),
                    str(step.state.x),
                    _fmt(step.state.alpha),
                    _fmt(step.state.beta),
                    str(step.defender_action),
                    str(step.attacker_action),
                    str(step.category),
                    _fmt(step.defender_payoff),
                    _fmt(step.attacker_payoff),
                ]
            )
    return rows


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.trajectories < 1:
        return _usage_error("need at least one trajectory (-n >= 1)")
    loaded = _load_validated(args.scenario)
    if isinstance(loaded, int):
        return loaded
    scenario = loaded.scenario
    result = solve_game(scenario)
    summary = run_simulation(
        scenario, result, args.trajectories, args.seed, keep_records=args.log_trajectories
    )
    dp_defender = result.v1(result.initial)
    dp_attacker = expected_attacker_value(scenario, result.v2(result.initial))

    out = _ensure_out_dir(args)
    written = [out / "summary.csv"]
    _write_csv(
        written[0], ["metric", "value"], _summary_rows(summary, args.seed, dp_defender, dp_attacker)
    )
    if args.log_trajectories:
        trajectories_path = out / "trajectories.csv"
        _write_csv(
            trajectories_path,
            [
                "trajectory",
                "theta",
                "t",
                "x",
                "alpha",
                "beta",
                "defender_action",
                "attacker_action",
                "category",
                "defender_payoff",
                "attacker_payoff",
            ],
            _trajectory_rows(summary),
        )
        written.append(trajectories_path)
    if not args.no_plots:
        written.append(render_simulation_figure(summary, dp_defender, dp_attacker, out))

    print(f"{'':<16}{'simulated':>18}{'solver':>18}")
    print(f"{'defender mean':<16}{_fmt(summary.defender_mean):>18}{_fmt(dp_defender):>18}")
    print(f"{'attacker mean':<16}{_fmt(summary.attacker_mean):>18}{_fmt(dp_attacker):>18}")
    frequencies = " ".join(_fmt(f) for f in summary.attack_frequency)
    print(f"attack frequency by stage: {frequencies}")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------- sweep


def _sweep_values(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise ValueError("step must be positive")
    direction = 1.0 if stop >= start else -1.0
    values = [start]
    while True:
        candidate = start + len(values) * step * direction
        if direction * (candidate - stop) > SWEEP_RANGE_TOL * max(1.0, abs(stop)):
            break
        values.append(candidate)
    return values


@dataclasses.dataclass(frozen=True)
class SweepRow:
    value: float
    defender_p: float
    attack_threshold: float
    v1: float
    v2_at_theta1: float


def _stage_solve_row(scenario: Scenario, y: ExpandedState, value: float) -> SweepRow:
    policy, v1, envelope = solve_stage(scenario, y, terminal_continuation(scenario, y))
    return SweepRow(value, policy.defender_p, _attack_threshold(policy), v1, envelope(1.0))


def _full_solve_row(scenario: Scenario, value: float) -> SweepRow:
    result = solve_game(scenario)
    policy = result.policy(result.initial)
    v2 = result.v2(result.initial)
    return SweepRow(
        value, policy.defender_p, _attack_threshold(policy), result.v1(result.initial), v2(1.0)
    )


def _rebuild_config(config: TeConfig, target: str, value: float) -> TeConfig:
    kind, field, index_text = target.split(".")
    index = int(index_text)
    if kind == "cost":
        name = {"c1": "defense_costs", "c2": "attack_costs"}[field]
        costs = list(getattr(config, name))
        costs[index] = value
        return dataclasses.replace(config, **{name: tuple(costs)})
    rewards = list(config.attacked_rewards)
    rewards[index - 1] = value
    return dataclasses.replace(config, attacked_rewards=tuple(rewards))


def _parse_config_target(target: str, config: TeConfig | None) -> str | None:
    """Validate a cost/reward target; returns an error message or None."""
    parts = target.split(".")
    if len(parts) != 3 or not parts[2].lstrip("-").isdigit():
        return f"unknown sweep target '{target}'"
    kind, field, index_text = parts
    index = int(index_text)
    if (kind, field) == ("cost", "c1") or (kind, field) == ("cost", "c2"):
        limit = 3
        label = f"stage index {index} outside 0..{limit - 1}"
        ok = 0 <= index < limit
    elif (kind, field) == ("reward", "ra"):
        limit = 5
        label = f"state rank {index} outside 1..{limit}"
        ok = 1 <= index <= limit
    else:
        return f"unknown sweep target '{target}'"
    if not ok:
        return f"bad sweep target '{target}': {label}"
    if config is None:
        return f"target '{target}' needs a scenario with an embedded te_config block"
    return None


def _sweep_rows(args: argparse.Namespace, loaded: LoadedScenario) -> list[SweepRow] | int:
    scenario = loaded.scenario
    target = args.target
    values = _sweep_values(args.sweep_from, args.sweep_to, args.step)
    horizon_states = scenario.states[scenario.horizon]

    if target == "beta":
        if args.state is None:
            return _usage_error("target 'beta' requires --state")
        if args.state not in horizon_states:
            return _usage_error(f"state {args.state} not in the last decision stage")
        total = args.sweep_from + args.sweep_to
        rows = []
        for beta in values:
            alpha = total - beta
            if alpha <= 0 or beta <= 0:
                return _usage_error(
                    f"belief pair ({_fmt(alpha)}, {_fmt(beta)}) leaves the positive range"
                )
            y = ExpandedState(scenario.horizon, args.state, alpha, beta)
            rows.append(_stage_solve_row(scenario, y, beta))
        return rows

    if target == "state":
        if args.state is not None:
            return _usage_error("target 'state' sweeps the state; drop --state")
        alpha, beta = scenario.prior
        rows = []
        for value in values:
            rank = round(value)
            if abs(value - rank) > SWEEP_RANGE_TOL:
                return _usage_error(f"state sweep needs integer ranks, got {_fmt(value)}")
            if rank not in horizon_states:
                return _usage_error(f"state {rank} not in the last decision stage")
            y = ExpandedState(scenario.horizon, rank, alpha, beta)
            rows.append(_stage_solve_row(scenario, y, float(rank)))
        return rows

    message = _parse_config_target(target, loaded.config)
    if message is not None:
        return _usage_error(message)
    if args.state is not None:
        return _usage_error(f"target '{target}' re-solves the whole game; drop --state")
    rows = []
    for value in values:
        try:
            rebuilt = build_te_scenario(_rebuild_config(loaded.config, target, value))
        except ValueError as exc:
            print(f"invalid scenario: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        violations = validate_scenario(rebuilt)
        if violations:
            for violation in violations:
                print(f"invalid scenario: {violation}", file=sys.stderr)
            return EXIT_VALIDATION
        rows.append(_full_solve_row(rebuilt, value))
    return rows


def _normalized(values: list[float]) -> list[float]:
    peak = max(abs(v) for v in values)
    if peak == 0.0:
        return [0.0 for _ in values]
    return [v / peak for v in values]


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.step <= 0:
        return _usage_error("--step must be positive")
    loaded = _load_validated(args.scenario)
    if isinstance(loaded, int):
        return loaded
    rows = _sweep_rows(args, loaded)
    if isinstance(rows, int):
        return rows

    v1_normalized = _normalized([row.v1 for row in rows])
    v2_normalized = _normalized([row.v2_at_theta1 for row in rows])
    out = _ensure_out_dir(args)
    sweep_path = out / "sweep.csv"
    _write_csv(
        sweep_path,
        ["value", "defender_p", "attack_threshold", "v1_normalized", "v2_at_theta1_normalized"],
        [
            [_fmt(row.value), _fmt(row.defender_p), _fmt(row.attack_threshold), _fmt(n1), _fmt(n2)]
            for row, n1, n2 in zip(rows, v1_normalized, v2_normalized)
        ],
    )
    written = [sweep_path]
    if not args.no_plots:
        plot_rows = [
            {
                "value": row.value,
                "defender_p": row.defender_p,
                "attack_threshold": row.attack_threshold,
                "v1_normalized": n1,
                "v2_at_theta1_normalized": n2,
            }
            for row, n1, n2 in zip(rows, v1_normalized, v2_normalized)
        ]
        written.append(render_sweep_figure(plot_rows, args.target, out))
    print(f"swept {args.target} over {len(rows)} points")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ----------------------------------------------------------------- main


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        default="te_default",
        help="scenario file path, or a bundled name: " + ", ".join(BUNDLED_NAMES),
    )
    parser.add_argument("--out", required=True, help="output directory for reports")
    parser.add_argument(
        "--no-plots", action="store_true", help="skip figure rendering, write delimited files only"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="bayesgame",
        description="Solve, simulate, and sweep leader-follower intrusion games.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="solve a scenario and export values")
    _add_common(solve)
    solve.set_defaults(func=cmd_solve)

    simulate = commands.add_parser("simulate", help="Monte Carlo playout of the solved game")
    _add_common(simulate)
    simulate.add_argument(
        "-n", "--trajectories", type=int, required=True, help="number of trajectories"
    )
    simulate.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    simulate.add_argument(
        "--log-trajectories", action="store_true", help="also write trajectories.csv"
    )
    simulate.set_defaults(func=cmd_simulate)

    sweep = commands.add_parser("sweep", help="re-solve while sweeping one quantity")
    _add_common(sweep)
    sweep.add_argument(
        "--target",
        required=True,
        help="beta | state | cost.c1.<stage> | cost.c2.<stage> | reward.ra.<state>",
    )
    sweep.add_argument("--from", dest="sweep_from", type=float, required=True, metavar="START")
    sweep.add_argument("--to", dest="sweep_to", type=float, required=True, metavar="STOP")
    sweep.add_argument("--step", type=float, required=True)
    sweep.add_argument(
        "--state", type=int, default=None, help="system state for belief sweeps (target 'beta')"
    )
    sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
