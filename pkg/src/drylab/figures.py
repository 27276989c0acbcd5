"""Figure rendering for simulation and evaluation reports.

All functions write PNG files next to the delimited outputs; nothing is
shown interactively (the Agg backend is forced so headless runs work).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .simulate import Trajectory  # noqa: E402

__all__ = ["plot_trajectory", "plot_trajectory_comparison", "plot_robustness_curve"]


def plot_trajectory(trajectory: Trajectory, path: str | Path,
                    title: str = "Simulated trajectory") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for sid in trajectory.species_ids:
        ax.plot(trajectory.times, trajectory.columns[sid], label=sid, lw=1.5)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("concentration")
    ax.set_title(title)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_trajectory_comparison(reference: Trajectory, predicted: Trajectory,
                               path: str | Path) -> Path:
    """Reference (solid) vs predicted (dashed) per species, shared axes."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, sid in enumerate(reference.species_ids):
        color = colors[i % len(colors)]
        ax.plot(reference.times, reference.columns[sid], color=color, lw=1.5, label=sid)
        if sid in predicted.columns:
            ax.plot(predicted.times, predicted.columns[sid], color=color, lw=1.2, ls="--")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("concentration")
    ax.set_title("Reference (solid) vs candidate (dashed)")
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_robustness_curve(curve: list[tuple[float, float]], path: str | Path) -> Path:
    levels = [level for level, _ in curve]
    errors = [ste for _, ste in curve]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(levels, errors, marker="o", lw=1.5)
    ax.set_xlabel("noise level")
    ax.set_ylabel("trajectory error")
    ax.set_ylim(0.0, 1.0)
    ax.set_title("Robustness to perturbed initial conditions")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
