"""Variational-energy estimation, the high-statistics baseline, relative-error
curves, and the 1/sqrt(N) error model that ties accuracy to autocorrelation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autocorr import detect_stuck
from .errors import ExclusionThresholdError
from .heisenberg import SquareLattice, local_energy_batch
from .rbm import RbmModel
from .samplers import ChainConfig, SpinChain, run_chains

__all__ = [
    "EnergyEstimate",
    "ErrorCurve",
    "variational_energy",
    "baseline_energy",
    "relative_error_curve",
    "fit_inverse_sqrt",
    "predicted_sim_curve",
    "log_grid",
    "write_curve_csv",
    "write_estimate_json",
]


@dataclass(frozen=True)
class EnergyEstimate:
    """Mean and variance of E_loc over a chain; stderr via the autocorrelation
    error model sigma = sqrt(2 tau / (N dt) * Var(E)) when tau is known."""

    mean: float
    variance: float
    n_samples: int
    tau: float | None = None  # in sweeps
    stderr: float | None = None

    @classmethod
    def from_series(cls, energies: np.ndarray, interval: float = 1.0,
                    tau_sweeps: float | None = None) -> "EnergyEstimate":
        e = np.asarray(energies, dtype=np.float64)
        if e.size == 0:
            raise ValueError("empty energy series")
        mean = float(e.mean())
        var = float(e.var())
        stderr = None
        if tau_sweeps is not None:
            total_sweeps = e.size * interval
            stderr = float(np.sqrt(2.0 * tau_sweeps * var / total_sweeps))
        return cls(mean=mean, variance=var, n_samples=e.size, tau=tau_sweeps, stderr=stderr)


@dataclass(frozen=True)
class ErrorCurve:
    """eps_rel(N) on a logarithmic sweep grid, averaged over chains."""

    N: np.ndarray
    eps_rel: np.ndarray
    eps_rel_stderr: np.ndarray | None
    baseline_energy: float

    def __post_init__(self):
        if np.any(np.diff(self.N) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(self.eps_rel < 0):
            raise ValueError("relative errors must be nonnegative")


def variational_energy(chain: SpinChain, model: RbmModel, lattice: SquareLattice,
                       J: float = 1.0, tau_sweeps: float | None = None) -> EnergyEstimate:
    """Mean E_loc over the stored samples. sIM chains must already be
    magnetization-filtered."""
    if len(chain) == 0:
        raise ValueError("empty chain")
    energies = local_energy_batch(chain.samples, model, lattice, J)
    return EnergyEstimate.from_series(energies, interval=chain.interval, tau_sweeps=tau_sweeps)


def baseline_energy(model: RbmModel, lattice: SquareLattice, J: float, seed: int,
                    n_chains: int = 32, n_sweeps: int = 10000, thermalization: int = 200,
                    threads: int = 1, run_fraction: float = 0.5) -> tuple[float, dict]:
    """E_b: grand mean over independent MH chains (paper protocol: 32 x 10000
    sweeps). Stuck chains are excluded; more than half excluded is an error."""
    cfg = ChainConfig(n_sweeps=n_sweeps, thermalization=thermalization, interval=1, seed=seed)
    chains = run_chains("mh", model, lattice, cfg, n_chains, threads=threads)
    kept_energies = []
    excluded = []
    for k, chain in enumerate(chains):
        e = local_energy_batch(chain.samples, model, lattice, J)
        stuck, reason = detect_stuck(e, run_fraction=run_fraction)
        if stuck:
            excluded.append({"chain": k, "reason": reason})
        else:
            kept_energies.append(e)
    if len(kept_energies) <= n_chains // 2:
        raise ExclusionThresholdError(
            f"{len(excluded)} of {n_chains} baseline chains stuck; baseline untrustworthy"
        )
    all_e = np.concatenate(kept_energies)
    grand = float(all_e.mean())
    per_chain_means = [float(e.mean()) for e in kept_energies]
    stderr = float(np.std(per_chain_means, ddof=1) / np.sqrt(len(per_chain_means)))
    details = {
        "n_chains": n_chains,
        "n_sweeps": n_sweeps,
        "per_chain_means": per_chain_means,
        "excluded": excluded,
        "stderr": stderr,
        "variance": float(all_e.var()),
    }
    return grand, details


def log_grid(n_min: int, n_max: int, per_decade: int = 20) -> np.ndarray:
    """Logarithmic N grid with per_decade points per decade, deduplicated
    after rounding to integers."""
    if not 1 <= n_min < n_max:
        raise ValueError(f"need 1 <= n_min < n_max, got {n_min}, {n_max}")
    count = int(np.ceil(np.log10(n_max / n_min) * per_decade)) + 1
    grid = np.unique(np.round(np.logspace(np.log10(n_min), np.log10(n_max), count)).astype(np.int64))
    return grid[(grid >= n_min) & (grid <= n_max)]


def relative_error_curve(chain_series: list[tuple[np.ndarray, np.ndarray]], E_b: float,
                         grid: np.ndarray) -> ErrorCurve:
    """eps_rel(N) = |(E(N) - E_b)/E_b| per chain, averaged over chains.

    chain_series holds (sweep_positions, energies) per chain; E(N) is the
    prefix mean over samples taken at sweeps <= N. Chains without samples
    below some N are left out of that grid point's average.
    """
    if E_b == 0.0:
        raise ZeroDivisionError("baseline energy is zero")
    grid = np.asarray(grid, dtype=np.int64)
    per_chain = np.full((len(chain_series), grid.size), np.nan)
    for c, (positions, energies) in enumerate(chain_series):
        order = np.argsort(positions, kind="stable")
        pos = np.asarray(positions)[order]
        e = np.asarray(energies, dtype=np.float64)[order]
        csum = np.cumsum(e)
        counts = np.searchsorted(pos, grid, side="right")
        valid = counts > 0
        prefix_mean = np.full(grid.size, np.nan)
        prefix_mean[valid] = csum[counts[valid] - 1] / counts[valid]
        per_chain[c] = np.abs((prefix_mean - E_b) / E_b)
    with np.errstate(invalid="ignore"):
        eps = np.nanmean(per_chain, axis=0)
        n_used = np.sum(~np.isnan(per_chain), axis=0)
        spread = np.nanstd(per_chain, axis=0, ddof=1)
    stderr = np.where(n_used > 1, spread / np.sqrt(np.maximum(n_used, 1)), np.nan)
    keep = n_used > 0
    return ErrorCurve(N=grid[keep], eps_rel=eps[keep], eps_rel_stderr=stderr[keep],
                      baseline_energy=E_b)


@dataclass(frozen=True)
class SqrtFit:
    a: float
    window: np.ndarray = field(repr=False)  # mask over curve points
    residual_rms: float = 0.0
    free_slope: float = 0.0
    poor_fit: bool = False


def fit_inverse_sqrt(curve: ErrorCurve, baseline_stderr: float | None = None,
                     window_mult: float = 5.0) -> SqrtFit:
    """Least squares of log eps against log N with the slope fixed at -1/2;
    a = exp(intercept).

    The window keeps points with eps_rel above window_mult times the baseline
    stderr ratio (the curve must stop before the noise floor). A free-slope
    refit far from -1/2 or a large residual flags a poor fit.
    """
    eps = curve.eps_rel
    N = curve.N.astype(np.float64)
    mask = eps > 0
    if baseline_stderr is not None and curve.baseline_energy != 0:
        floor = window_mult * abs(baseline_stderr / curve.baseline_energy)
        mask &= eps > floor
    if int(mask.sum()) < 3:
        raise ValueError(f"fit window has {int(mask.sum())} points; need >= 3")
    logN = np.log(N[mask])
    logE = np.log(eps[mask])
    intercept = float(np.mean(logE + 0.5 * logN))
    a = float(np.exp(intercept))
    resid = logE - (intercept - 0.5 * logN)
    rms = float(np.sqrt(np.mean(resid**2)))
    free_slope = float(np.polyfit(logN, logE, 1)[0])
    poor = rms > 0.5 or abs(free_slope + 0.5) > 0.25
    return SqrtFit(a=a, window=mask, residual_rms=rms, free_slope=free_slope, poor_fit=poor)


def predicted_sim_curve(a: float, tau_sim: float, tau_mh: float, grid: np.ndarray,
                        baseline_energy: float) -> ErrorCurve:
    """Scale the MH fit by sqrt(tau_sim / tau_mh)."""
    if tau_sim <= 0 or tau_mh <= 0:
        raise ValueError("autocorrelation times must be positive")
    grid = np.asarray(grid, dtype=np.int64)
    eps = np.sqrt(tau_sim / tau_mh) * a / np.sqrt(grid.astype(np.float64))
    return ErrorCurve(N=grid, eps_rel=eps, eps_rel_stderr=None, baseline_energy=baseline_energy)


def write_curve_csv(curve: ErrorCurve, path, extra_comments: dict | None = None) -> None:
    lines = []
    if extra_comments:
        for k, v in extra_comments.items():
            lines.append(f"# {k}={v}")
    lines.append("N,eps_rel,eps_rel_stderr")
    for i in range(curve.N.size):
        se = curve.eps_rel_stderr[i] if curve.eps_rel_stderr is not None else float("nan")
        se_txt = "" if not np.isfinite(se) else repr(float(se))
        lines.append(f"{int(curve.N[i])},{float(curve.eps_rel[i])!r},{se_txt}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_estimate_json(estimate: EnergyEstimate, path, extra: dict | None = None) -> None:
    doc = {
        "mean": estimate.mean,
        "variance": estimate.variance,
        "tau": estimate.tau,
        "stderr": estimate.stderr,
        "n_samples": estimate.n_samples,
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
