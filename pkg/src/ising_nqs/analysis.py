"""End-to-end analysis of one trained model: baseline energy, autocorrelation
times for both samplers, relative-error curves, the 1/sqrt(N) fit, and the
predicted sIM curve. The CLI `analyze` subcommand and the acceptance checks
both drive this module.

Chain seeding: every purpose gets a disjoint chain_index block on the sampler
stream (baseline 0.., tau 100.., curves 200..), so one master seed yields
independent yet reproducible chains everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autocorr import multi_chain_tau, select_mh_interval, select_sim_interval
from .estimators import (
    ErrorCurve,
    SqrtFit,
    baseline_energy,
    fit_inverse_sqrt,
    log_grid,
    predicted_sim_curve,
    relative_error_curve,
)
from .heisenberg import SquareLattice, local_energy_batch
from .rbm import RbmModel
from .samplers import ChainConfig, filter_magnetization_zero, run_chains

TAU_INDEX = 100
CURVE_INDEX = 200

__all__ = ["TauReport", "AnalysisResult", "measure_tau_mh", "measure_tau_sim", "analyze_model"]


@dataclass(frozen=True)
class TauReport:
    tau_sweeps: float
    spread: float
    per_chain: list[float]
    excluded: list[dict]
    interval: int
    n_chains: int
    n_samples: int


def measure_tau_mh(model: RbmModel, lattice: SquareLattice, J: float, seed: int,
                   n_chains: int = 10, n_samples: int = 32768, thermalization: int = 200,
                   threads: int = 1, run_fraction: float = 0.5) -> TauReport:
    """Paper protocol: 10 chains of 32768 samples, interval max(0.01 n, 1)."""
    interval = select_mh_interval(model.n)
    cfg = ChainConfig(n_sweeps=n_samples * interval, thermalization=thermalization,
                      interval=interval, seed=seed)
    chains = run_chains("mh", model, lattice, cfg, n_chains, threads=threads,
                        index_offset=TAU_INDEX)
    series = [local_energy_batch(c.samples, model, lattice, J) for c in chains]
    mean_tau, spread, per_chain, excluded = multi_chain_tau(
        series, [float(interval)] * n_chains, run_fraction=run_fraction)
    return TauReport(tau_sweeps=mean_tau, spread=spread, per_chain=per_chain,
                     excluded=excluded, interval=interval, n_chains=n_chains,
                     n_samples=n_samples)


def measure_tau_sim(model: RbmModel, lattice: SquareLattice, J: float, alpha: int,
                    seed: int, n_chains: int = 5, n_samples: int = 32768,
                    thermalization: int = 200, threads: int = 1,
                    run_fraction: float = 0.5, interval: int | None = None) -> TauReport:
    """Paper protocol: 5 chains of 32768 stored samples at a pilot-selected
    interval; tau is computed on the magnetization-0 series and converted to
    sweeps with the mean spacing of the retained samples."""
    if interval is None:
        interval = select_sim_interval(model, lattice, J, alpha, seed,
                                       n_samples=n_samples, thermalization=thermalization)
    cfg = ChainConfig(n_sweeps=n_samples * interval, thermalization=thermalization,
                      interval=interval, seed=seed)
    chains = run_chains("sim", model, lattice, cfg, n_chains, threads=threads,
                        index_offset=TAU_INDEX)
    series = []
    spacings = []
    for chain in chains:
        filtered, _ = filter_magnetization_zero(chain)
        series.append(local_energy_batch(filtered.samples, model, lattice, J))
        if len(filtered) > 1:
            spacings.append(float(np.diff(filtered.sweep_indices).mean()))
        else:
            spacings.append(float(interval))
    mean_tau, spread, per_chain, excluded = multi_chain_tau(series, spacings,
                                                            run_fraction=run_fraction)
    return TauReport(tau_sweeps=mean_tau, spread=spread, per_chain=per_chain,
                     excluded=excluded, interval=interval, n_chains=n_chains,
                     n_samples=n_samples)


@dataclass(frozen=True)
class AnalysisResult:
    baseline: float
    baseline_stderr: float
    baseline_details: dict
    tau_mh: TauReport
    tau_sim: TauReport
    ratio: float
    mh_curve: ErrorCurve
    sim_curve: ErrorCurve
    predicted_curve: ErrorCurve
    fit: SqrtFit


def analyze_model(model: RbmModel, lattice: SquareLattice, J: float, alpha: int,
                  seed: int, *, threads: int = 1,
                  baseline_chains: int = 32, baseline_sweeps: int = 10000,
                  tau_chains_mh: int = 10, tau_chains_sim: int = 5,
                  tau_samples: int = 32768,
                  curve_chains: int = 10, curve_sweeps: int = 10000,
                  thermalization: int = 200, fit_window_mult: float = 5.0,
                  per_decade: int = 20, run_fraction: float = 0.5) -> AnalysisResult:
    """Full error-curve and autocorrelation analysis of one model."""
    E_b, details = baseline_energy(model, lattice, J, seed, n_chains=baseline_chains,
                                   n_sweeps=baseline_sweeps, thermalization=thermalization,
                                   threads=threads, run_fraction=run_fraction)
    tau_mh = measure_tau_mh(model, lattice, J, seed, n_chains=tau_chains_mh,
                            n_samples=tau_samples, thermalization=thermalization,
                            threads=threads, run_fraction=run_fraction)
    tau_sim = measure_tau_sim(model, lattice, J, alpha, seed, n_chains=tau_chains_sim,
                              n_samples=tau_samples, thermalization=thermalization,
                              threads=threads, run_fraction=run_fraction)
    ratio = tau_sim.tau_sweeps / tau_mh.tau_sweeps

    grid = log_grid(10, curve_sweeps, per_decade=per_decade)
    cfg = ChainConfig(n_sweeps=curve_sweeps, thermalization=thermalization,
                      interval=1, seed=seed)
    mh_chains = run_chains("mh", model, lattice, cfg, curve_chains, threads=threads,
                           index_offset=CURVE_INDEX)
    mh_series = [(c.sweep_indices, local_energy_batch(c.samples, model, lattice, J))
                 for c in mh_chains]
    mh_curve = relative_error_curve(mh_series, E_b, grid)

    sim_chains = run_chains("sim", model, None, cfg, curve_chains, threads=threads,
                            index_offset=CURVE_INDEX)
    sim_series = []
    for chain in sim_chains:
        filtered, _ = filter_magnetization_zero(chain)
        sim_series.append((filtered.sweep_indices,
                           local_energy_batch(filtered.samples, model, lattice, J)))
    sim_curve = relative_error_curve(sim_series, E_b, grid)

    fit = fit_inverse_sqrt(mh_curve, baseline_stderr=details["stderr"],
                           window_mult=fit_window_mult)
    predicted = predicted_sim_curve(fit.a, tau_sim.tau_sweeps, tau_mh.tau_sweeps,
                                    sim_curve.N, E_b)
    return AnalysisResult(
        baseline=E_b,
        baseline_stderr=details["stderr"],
        baseline_details=details,
        tau_mh=tau_mh,
        tau_sim=tau_sim,
        ratio=ratio,
        mh_curve=mh_curve,
        sim_curve=sim_curve,
        predicted_curve=predicted,
        fit=fit,
    )
