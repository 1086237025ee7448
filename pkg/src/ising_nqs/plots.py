"""Figure rendering for the CLI report paths. Every figure sits alongside the
CSV/JSON it visualizes; the delimited files remain the canonical outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .estimators import ErrorCurve, SqrtFit
from .trainer import TrainHistory

__all__ = ["plot_history", "plot_curves", "plot_projection", "plot_barrier"]


def plot_history(history: TrainHistory, path, reference_energy: float | None = None) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    iters = np.arange(len(history))
    ax1.plot(iters, history.energy, lw=1)
    if reference_energy is not None:
        ax1.axhline(reference_energy, color="k", ls="--", lw=0.8, label="exact")
        ax1.legend()
    ax1.set_ylabel("variational energy")
    ax2.semilogy(iters, history.variance, lw=1)
    ax2.set_ylabel("Var(E_loc)")
    ax2.set_xlabel("iteration")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_curves(mh_curve: ErrorCurve, sim_curve: ErrorCurve, predicted: ErrorCurve,
                fit: SqrtFit, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    ax.loglog(mh_curve.N, mh_curve.eps_rel, "o-", ms=3, lw=0.8, label="MH measured")
    ax.loglog(sim_curve.N, sim_curve.eps_rel, "s-", ms=3, lw=0.8, label="sIM measured")
    ax.loglog(mh_curve.N, fit.a / np.sqrt(mh_curve.N.astype(float)), "k--", lw=1,
              label=f"fit {fit.a:.3g}/sqrt(N)")
    ax.loglog(predicted.N, predicted.eps_rel, "r:", lw=1.5, label="sIM predicted")
    ax.set_xlabel("N sweeps")
    ax.set_ylabel("relative error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_projection(rows: list[dict], path) -> None:
    """Horizontal bars of projected seconds per profile, one group per size."""
    sizes = sorted(k for k in rows[0] if isinstance(k, int))
    fig, ax = plt.subplots(figsize=(7, 1.2 + 0.6 * len(rows)))
    y = np.arange(len(rows))
    height = 0.8 / max(len(sizes), 1)
    for s_i, n_spins in enumerate(sizes):
        vals = [row[n_spins] for row in rows]
        ax.barh(y + s_i * height, vals, height=height, label=f"n = {n_spins}")
    ax.set_yticks(y + 0.4 - height / 2)
    ax.set_yticklabels([row["profile"] for row in rows])
    ax.set_xscale("log")
    ax.set_xlabel("projected seconds per independent MH-sweep equivalent")
    if sizes:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_barrier(rows: list[dict], path) -> None:
    """Barrier statistics and log tau against alpha."""
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.5))
    alphas = [row["alpha"] for row in rows]
    axes[0].plot(alphas, [row["mean_barrier"] for row in rows], "o")
    axes[0].set_ylabel("mean visible barrier")
    axes[1].plot(alphas, [row["approx_barrier"] for row in rows], "o")
    axes[1].set_ylabel("|W| barrier approximation")
    axes[2].plot(alphas, [row["log_tau_sim"] for row in rows], "o")
    axes[2].set_ylabel("log10 tau_sIM (sweeps)")
    for ax in axes:
        ax.set_xlabel("alpha")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
