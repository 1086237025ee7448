"""Autocovariance, the integrated autocorrelation time with a self-consistent
cutoff, stuck-chain detection, and the sampling-interval selection rules.

The observable series is always the local energy per stored sample, restricted
to magnetization-0 samples for both samplers. The cutoff is the smallest M
with M >= 4 tau_int(M) + 1; tau in sweep units is tau_int times the sampling
interval, where filtered sIM chains use the mean spacing of retained samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChainTooShortError,
    ExclusionThresholdError,
    IntervalSelectionError,
    StuckChainError,
)

__all__ = [
    "ChainStatistics",
    "autocovariance",
    "autocovariance_series",
    "integrated_autocorr_time",
    "detect_stuck",
    "select_mh_interval",
    "select_sim_interval",
    "multi_chain_tau",
]


@dataclass(frozen=True)
class ChainStatistics:
    n_samples: int
    variance: float  # Gamma_0
    rho: np.ndarray  # rho_c for c = 0 .. cutoff_m
    tau_int: float
    cutoff_m: int
    interval: float  # sweeps per sample (mean spacing for filtered chains)
    tau_sweeps: float


def autocovariance(series: np.ndarray, c: int) -> float:
    """Gamma_c = (1/(N-c)) sum_i (O_i - Obar)(O_{i+c} - Obar), full-series mean."""
    x = np.asarray(series, dtype=np.float64)
    N = x.size
    if not 0 <= c < N:
        raise ValueError(f"lag {c} out of range for series of length {N}")
    d = x - x.mean()
    return float(np.dot(d[: N - c], d[c:]) / (N - c))


def autocovariance_series(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Gamma_c for c = 0 .. max_lag via FFT; identical to the direct formula."""
    x = np.asarray(series, dtype=np.float64)
    N = x.size
    d = x - x.mean()
    f = np.fft.rfft(d, 2 * N)
    raw = np.fft.irfft(f * np.conj(f), 2 * N)[: max_lag + 1]
    return raw / (N - np.arange(max_lag + 1))


def detect_stuck(series: np.ndarray, run_fraction: float = 0.5) -> tuple[bool, str]:
    """A chain is stuck when its series is constant, or when one constant run
    covers more than run_fraction of it. The run rule is a heuristic; the
    threshold is configurable."""
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty series")
    if np.var(x) == 0.0:
        return True, "zero variance"
    changes = np.flatnonzero(np.diff(x) != 0.0)
    boundaries = np.concatenate(([0], changes + 1, [x.size]))
    longest = int(np.max(np.diff(boundaries)))
    if longest > run_fraction * x.size:
        return True, f"constant run of {longest}/{x.size} samples"
    return False, ""


def integrated_autocorr_time(series: np.ndarray, interval: float = 1.0) -> ChainStatistics:
    """Self-consistent windowing: scan M upward and stop at the smallest M
    with M >= 4 tau_int(M) + 1."""
    x = np.asarray(series, dtype=np.float64)
    N = x.size
    if N < 8:
        raise ChainTooShortError(f"series of {N} samples is too short for windowing")
    if np.var(x) == 0.0:
        raise StuckChainError("zero variance")
    max_lag = N // 2
    gamma = autocovariance_series(x, max_lag)
    gamma0 = float(np.var(x))
    rho = gamma / gamma0
    tau = 0.5
    csum = 0.5
    for M in range(1, max_lag + 1):
        csum += rho[M]
        if M >= 4 * csum + 1:
            tau = csum
            return ChainStatistics(
                n_samples=N,
                variance=gamma0,
                rho=rho[: M + 1],
                tau_int=float(tau),
                cutoff_m=M,
                interval=float(interval),
                tau_sweeps=float(tau * interval),
            )
    raise ChainTooShortError(
        f"no self-consistent window within N/2 = {max_lag} lags; chain too short"
    )


def select_mh_interval(n_spins: int) -> int:
    """ceil(max(0.01 * n_spins, 1)) sweeps between stored MH samples."""
    return math.ceil(max(0.01 * n_spins, 1.0))


def select_sim_interval(model, lattice, J: float, alpha: int, seed: int,
                        n_samples: int = 32768, thermalization: int = 200,
                        max_rounds: int = 8, min_taus: float = 1500.0,
                        threads: int = 1) -> int:
    """Pilot-chain search for the sIM storage interval.

    Conditions: the filtered chain spans at least min_taus autocorrelation
    times, and tau measured in samples exceeds 2 (1.5 for alpha <= 2). The two
    pull in opposite directions, so the interval is doubled while the chain is
    too short and halved while tau is under-resolved. Interval 1 is maximal
    resolution, so an under-resolved tau there counts as satisfied-at-floor.
    """
    from .heisenberg import local_energy_batch
    from .samplers import ChainConfig, STREAM_PILOT, filter_magnetization_zero, run_sim_chain

    tau_floor = 1.5 if alpha <= 2 else 2.0
    interval = 1
    tried: set[int] = set()
    for round_no in range(max_rounds):
        cfg = ChainConfig(n_sweeps=n_samples * interval, thermalization=thermalization,
                          interval=interval, seed=seed)
        chain = run_sim_chain(model, cfg, chain_index=round_no)
        filtered, _ = filter_magnetization_zero(chain)
        energies = local_energy_batch(filtered.samples, model, lattice, J)
        stats = integrated_autocorr_time(energies)
        tried.add(interval)
        n_taus = stats.n_samples / stats.tau_int
        if stats.tau_int <= tau_floor and interval > 1:
            interval = max(1, interval // 2)
        elif n_taus < min_taus:
            interval *= 2
        else:
            return interval
        if interval in tried:
            # oscillation between neighbors: keep the finer interval
            return min(interval, max(tried))
    raise IntervalSelectionError(
        f"no admissible sIM interval within {max_rounds} pilot rounds (last tried {interval})"
    )


def multi_chain_tau(series_list: list[np.ndarray], intervals: list[float],
                    run_fraction: float = 0.5) -> tuple[float, float, list[float], list[dict]]:
    """Per-chain tau in sweeps, averaged over unstuck chains.

    Returns (mean tau_sweeps, standard error over chains, per-chain values,
    excluded chains with reasons)."""
    if len(series_list) != len(intervals):
        raise ValueError("one interval per chain required")
    per_chain: list[float] = []
    excluded: list[dict] = []
    for k, (series, interval) in enumerate(zip(series_list, intervals)):
        stuck, reason = detect_stuck(series, run_fraction=run_fraction)
        if stuck:
            excluded.append({"chain": k, "reason": reason})
            continue
        stats = integrated_autocorr_time(series, interval=interval)
        per_chain.append(stats.tau_sweeps)
    if len(per_chain) < 2:
        raise ExclusionThresholdError(
            f"fewer than 2 unstuck chains ({len(per_chain)} usable, {len(excluded)} excluded)"
        )
    arr = np.array(per_chain)
    spread = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), spread, per_chain, excluded
