"""Figure rendering for solve, simulate, and sweep reports.

Figures land next to the delimited outputs and share their data, so a
report directory is self-contained. matplotlib is imported lazily and
forced onto the Agg backend; nothing here needs a display.
"""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence

if TYPE_CHECKING:
    from .equilibrium import SolveResult
    from .simulate import SimulationSummary

DPI = 150


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_solve_figures(result: SolveResult, out_dir: Path) -> list[Path]:
    """Equilibrium value and policy figures; returns written paths."""
    plt = _pyplot()
    import numpy as np

    paths = []
    decision_stages = result.stages[:-1]

    fig, (ax_value, ax_policy) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    for t, layer in enumerate(decision_stages):
        ranks = [y.x for y in layer]
        values = [result.v1(y) for y in layer]
        mixes = [result.policy(y).defender_p for y in layer]
        offsets = np.linspace(-0.18, 0.18, len(layer)) if len(layer) > 1 else [0.0]
        xs = [t + o for o in offsets]
        ax_value.scatter(xs, values, s=30)
        ax_policy.scatter(xs, mixes, s=30)
        for x_pos, v, m, rank in zip(xs, values, mixes, ranks):
            ax_value.annotate(str(rank), (x_pos, v), fontsize=7,
                              textcoords="offset points", xytext=(0, 5))
            ax_policy.annotate(str(rank), (x_pos, m), fontsize=7,
                               textcoords="offset points", xytext=(0, 5))
    ax_value.set_ylabel("defender value")
    ax_policy.set_ylabel("defense probability")
    ax_policy.set_ylim(-0.05, 1.05)
    ax_policy.set_xlabel("stage (markers labeled by system state)")
    ax_policy.set_xticks(range(len(decision_stages)))
    fig.tight_layout()
    path = out_dir / "values.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    grid = np.linspace(0.0, 1.0, 401)
    cmap = plt.get_cmap("viridis")
    for t, layer in enumerate(decision_stages):
        color = cmap(t / max(len(decision_stages) - 1, 1))
        for y in layer:
            fn = result.v2(y)
            ax.plot(grid, [fn(g) for g in grid], color=color, linewidth=1.0,
                    label=f"t={y.t} x={y.x} ({y.alpha:g},{y.beta:g})")
    ax.set_xlabel("attacker type")
    ax.set_ylabel("attacker value")
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    path = out_dir / "attacker_value.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    paths.append(path)
    return paths


def render_simulation_figure(
    summary: SimulationSummary,
    dp_defender: float,
    dp_attacker: float,
    out_dir: Path,
) -> Path:
    """Attack frequencies and empirical means against solver values."""
    plt = _pyplot()

    fig, (ax_freq, ax_mean) = plt.subplots(1, 2, figsize=(8, 3.8))
    stages = range(len(summary.attack_frequency))
    ax_freq.bar(stages, summary.attack_frequency, color="#b3443c")
    ax_freq.set_xlabel("stage")
    ax_freq.set_ylabel("attack frequency")
    ax_freq.set_xticks(list(stages))
    ax_freq.set_ylim(0.0, 1.0)

    labels = ["defender", "attacker"]
    means = [summary.defender_mean, summary.attacker_mean]
    errors = [3 * summary.defender_stderr, 3 * summary.attacker_stderr]
    targets = [dp_defender, dp_attacker]
    positions = range(len(labels))
    ax_mean.errorbar(positions, means, yerr=errors, fmt="o", capsize=4,
                     label="simulated mean (3 se)")
    ax_mean.scatter(positions, targets, marker="_", s=400, color="#2a6f3c",
                    label="solver value")
    ax_mean.set_xticks(list(positions))
    ax_mean.set_xticklabels(labels)
    ax_mean.legend(fontsize=7)
    fig.tight_layout()
    path = out_dir / "simulation.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_sweep_figure(
    rows: Sequence[Mapping[str, float]], target: str, out_dir: Path
) -> Path:
    """Policy and normalized-value curves along the swept quantity."""
    plt = _pyplot()

    values = [row["value"] for row in rows]
    fig, (ax_policy, ax_value) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    ax_policy.plot(values, [row["defender_p"] for row in rows],
                   marker="o", label="defense probability")
    ax_policy.plot(values, [row["attack_threshold"] for row in rows],
                   marker="s", label="attack threshold")
    ax_policy.set_ylabel("probability / type")
    ax_policy.set_ylim(-0.05, 1.05)
    ax_policy.legend(fontsize=8)
    ax_value.plot(values, [row["v1_normalized"] for row in rows],
                  marker="o", label="defender value (normalized)")
    ax_value.plot(values, [row["v2_at_theta1_normalized"] for row in rows],
                  marker="s", label="attacker value at type 1 (normalized)")
    ax_value.set_xlabel(target)
    ax_value.set_ylabel("normalized value")
    ax_value.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "sweep.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path
