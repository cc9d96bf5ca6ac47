"""Matplotlib figure rendering for simulation and training reports."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .sim import ExperimentReport  # noqa: E402
from .traindemo import TrainingResult  # noqa: E402


def plot_iteration_times(report: ExperimentReport, path) -> None:
    """Mean iteration time vs K, one line per scheme, 2-SE error bars."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_label: dict[str, tuple[list, list, list]] = {}
    for run in report.ok_runs():
        ks, means, ses = by_label.setdefault(run.label, ([], [], []))
        ks.append(run.K)
        means.append(run.mean_ms)
        ses.append(2.0 * run.mean_se)
    for label, (ks, means, ses) in by_label.items():
        ax.errorbar(ks, means, yerr=ses, marker="o", capsize=3, label=label)
    ax.set_xlabel("number of sub-datasets K")
    ax.set_ylabel("mean iteration time (ms)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_comm_loads(report: ExperimentReport, path, K: int | None = None) -> None:
    """Master communication load per scheme at one K (bar chart)."""
    K = report.config.K_values[0] if K is None else K
    runs = [r for r in report.ok_runs() if r.K == K]
    labels = [r.label for r in runs]
    loads = [r.scheme.master_comm_load for r in runs]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(labels, loads, color="tab:blue")
    ax.set_ylabel("results received by the master / iteration")
    ax.set_title(f"master communication load (K={K})")
    ax.tick_params(axis="x", rotation=30)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_training(result: TrainingResult, centralized: TrainingResult, path) -> None:
    """Loss curves (scheme vs centralized oracle) and recovery residuals."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    iters = range(1, len(result.losses) + 1)
    ax1.semilogy(iters, result.losses, label="coded distributed GD")
    ax1.semilogy(iters, centralized.losses, "--", label="centralized GD")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("loss")
    ax1.grid(alpha=0.3)
    ax1.legend(fontsize=8)
    positive = [max(r, 1e-18) for r in result.residuals]
    ax2.semilogy(iters, positive)
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("gradient recovery residual (relative)")
    ax2.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
