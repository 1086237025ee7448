"""Iso-accuracy step ratios and hardware runtime / energy projections.

The ratio N_sIM / N_MH = tau_sIM / tau_MH is the number of sIM sweeps needed
to match the independent information in one MH sweep. Projected times compare
per-sweep latencies and that ratio only, single-chain semantics; hardware I/O
and weight loading are out of the model, as in the projections this follows.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .heisenberg import SquareLattice
from .rbm import RbmModel

__all__ = [
    "HardwareProfile",
    "BUILTIN_PROFILES",
    "AdvantageReport",
    "iso_accuracy_ratio",
    "project_runtime",
    "energy_comparison",
    "check_advantage",
    "measure_cpu_profiles",
    "projection_rows",
]


@dataclass(frozen=True)
class HardwareProfile:
    """Named per-sweep latency in seconds."""

    name: str
    t_sweep: float
    note: str = ""

    def __post_init__(self):
        if self.t_sweep <= 0:
            raise ValueError(f"t_sweep must be positive, got {self.t_sweep}")


BUILTIN_PROFILES = {
    "fpga": HardwareProfile("fpga", 14.3e-9, "FPGA p-bit fabric at 70 MHz"),
    "conservative": HardwareProfile("conservative", 400e-9, "conservative IM sweep assumption"),
    "optimistic": HardwareProfile("optimistic", 4e-9, "optimistic sIM latency projection"),
}


@dataclass(frozen=True)
class AdvantageReport:
    tau_sim: float
    tau_mh: float
    ratio: float
    projections: dict  # profile name -> {"seconds": ..., "speedup": ...}
    energy_factor: float | None = None


def iso_accuracy_ratio(tau_sim: float, tau_mh: float) -> float:
    """N_sIM / N_MH at equal relative error."""
    if tau_sim <= 0 or tau_mh <= 0:
        raise ValueError("autocorrelation times must be positive")
    return tau_sim / tau_mh


def project_runtime(ratio: float, profile: HardwareProfile,
                    mh_profile: HardwareProfile) -> tuple[float, float]:
    """(projected seconds to match one MH sweep, speedup over the MH side)."""
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    projected = ratio * profile.t_sweep
    return projected, mh_profile.t_sweep / projected


def energy_comparison(ratio: float, sim_power_watts: float, sim_t_sweep: float,
                      mh_power_watts: float, mh_t_sweep: float) -> float:
    """(MH energy per independent sample) / (sIM energy per independent sample)."""
    if min(ratio, sim_power_watts, sim_t_sweep, mh_power_watts, mh_t_sweep) <= 0:
        raise ValueError("all inputs must be positive")
    return (mh_power_watts * mh_t_sweep) / (sim_power_watts * ratio * sim_t_sweep)


def check_advantage(n_sim: float, t_sim: float, n_mh: float, t_mh: float) -> bool:
    """Strict inequality N_sIM * t_sIM < N_MH * t_MH."""
    return n_sim * t_sim < n_mh * t_mh


def measure_cpu_profiles(model: RbmModel, lattice: SquareLattice, seed: int = 0,
                         n_sweeps: int = 2000, repeats: int = 3) -> dict[str, HardwareProfile]:
    """Wall-clock per-sweep cost of both samplers on this machine.

    Runs are warmed up first so kernel compilation does not pollute the
    timing; the best of `repeats` batches is kept.
    """
    from .samplers import ChainConfig, run_mh_chain, run_sim_chain

    out = {}
    for kind in ("mh", "sim"):
        def run(sweeps: int, rep: int) -> float:
            cfg = ChainConfig(n_sweeps=sweeps, thermalization=1, interval=sweeps, seed=seed)
            t0 = time.perf_counter()
            if kind == "mh":
                run_mh_chain(model, lattice, cfg, chain_index=1000 + rep)
            else:
                run_sim_chain(model, cfg, chain_index=1000 + rep)
            return time.perf_counter() - t0

        run(32, 0)  # warmup / JIT
        best = min(run(n_sweeps, 1 + r) for r in range(repeats))
        name = f"cpu_{kind}"
        out[name] = HardwareProfile(name, best / n_sweeps, "measured on this machine")
    return out


def projection_rows(ratios_by_size: dict[int, float],
                    profiles: dict[str, HardwareProfile]) -> list[dict]:
    """Rows = profiles, columns = n_spins, values = projected seconds."""
    rows = []
    for name in sorted(profiles):
        profile = profiles[name]
        row = {"profile": name, "t_sweep": profile.t_sweep}
        for n_spins in sorted(ratios_by_size):
            row[n_spins] = ratios_by_size[n_spins] * profile.t_sweep
        rows.append(row)
    return rows
