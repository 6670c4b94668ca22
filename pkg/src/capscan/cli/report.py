"""Figure rendering for the CLI report paths.

Every command that writes delimited output also drops a PNG next to it:
sweep runs get the three-panel reward/policy-loss/value-loss board, replay
and compare get coverage-versus-time charts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

PANEL_KEYS = [("mean_cumulative_reward", "cumulative reward"),
              ("policy_loss", "policy loss"),
              ("value_loss", "value loss")]


def plot_sweep(series: dict, out_png, title: str) -> Path:
    """series: label -> list of stats-row dicts (step + metric columns)."""
    fig, axes = plt.subplots(1, 3, figsize=(13, 3.6))
    for ax, (key, label) in zip(axes, PANEL_KEYS):
        for name, rows in series.items():
            steps = [r["step"] for r in rows]
            vals = [r[key] for r in rows]
            ax.plot(steps, vals, label=f"lr {name}", linewidth=1.2)
        ax.set_xlabel("environment steps")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    out_png = Path(out_png)
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return out_png


def plot_coverage_curves(curves: dict, out_png, title: str,
                         marks=(60.0, 120.0, 150.0)) -> Path:
    """curves: label -> (sim_times, coverages)."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for label, (times, covs) in curves.items():
        ax.plot(times, covs, label=label, linewidth=1.4)
    for mark in marks:
        ax.axvline(mark, color="gray", linestyle=":", linewidth=0.8)
    ax.set_xlabel("simulated time (s)")
    ax.set_ylabel("coverage (%)")
    ax.set_ylim(0, 100)
    ax.grid(True, alpha=0.3)
    ax.legend()
    ax.set_title(title)
    fig.tight_layout()
    out_png = Path(out_png)
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return out_png


def plot_training_stats(rows: list, out_png, title: str) -> Path:
    """Single-run board: reward, episode length, losses, entropy."""
    fig, axes = plt.subplots(1, 4, figsize=(16, 3.4))
    keys = [("mean_cumulative_reward", "cumulative reward"),
            ("mean_episode_length", "episode length"),
            ("policy_loss", "policy loss"),
            ("value_loss", "value loss")]
    steps = [r["step"] for r in rows]
    for ax, (key, label) in zip(axes, keys):
        ax.plot(steps, [r[key] for r in rows], linewidth=1.2)
        ax.set_xlabel("environment steps")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    fig.suptitle(title)
    fig.tight_layout()
    out_png = Path(out_png)
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return out_png
