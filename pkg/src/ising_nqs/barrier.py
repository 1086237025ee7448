"""Energy-barrier diagnostics: why autocorrelation grows with alpha.

The barrier for flipping spin i of the joint Ising configuration is the exact
energy difference Delta E_i = H(m with m_i negated) - H(m) = 2 m_i (sum_j
J_ij m_j + h_i). For a visible spin this reduces to 2 s_i sum_j W_ij x_j.
Setting x_j = s_i = 1 and taking |W| gives the state-independent approximation
(1/n) sum_ij |W_ij|.
"""
from __future__ import annotations

import numpy as np

from .ising import IsingModel, local_field
from .rbm import RbmModel
from .samplers import SpinChain

__all__ = [
    "energy_barrier",
    "mean_visible_barrier",
    "approx_barrier",
    "mean_connection_strength",
    "flip_rate",
    "barrier_csv_row",
    "BARRIER_CSV_HEADER",
]


def energy_barrier(ising: IsingModel, m: np.ndarray, i: int) -> float:
    """Exact cost of flipping joint spin i: 2 m_i (h_i + sum_j J_ij m_j)."""
    return 2.0 * float(m[i]) * local_field(ising, m, i)


def mean_visible_barrier(model: RbmModel, chain: SpinChain) -> float:
    """(1/(n N)) sum over samples and visible spins of Delta E_{s_i}.

    Needs joint snapshots (hidden recorded): the visible barrier depends on
    the hidden state, 2 s_i sum_j W_ij x_j."""
    if chain.hidden is None:
        raise ValueError("barrier analysis needs a chain recorded with hidden spins")
    S = chain.samples.astype(np.float64)
    X = chain.hidden.astype(np.float64)
    fields = X @ model.W.T  # (N, n): sum_j W_ij x_j per visible i
    return float(np.mean(2.0 * S * fields))


def approx_barrier(model: RbmModel) -> float:
    """(1/n) sum_ij |W_ij|: the x = s = 1 absolute-value approximation."""
    return float(np.sum(np.abs(model.W)) / model.n)


def mean_connection_strength(model: RbmModel) -> float:
    """(1/(alpha n^2)) sum_ij |W_ij|."""
    return float(np.sum(np.abs(model.W)) / (model.alpha * model.n**2))


def flip_rate(chain: SpinChain) -> tuple[float, float]:
    """Fraction of spins changed per sweep, (visible, hidden) blocks.

    Chains must be stored at interval 1 so consecutive samples are consecutive
    sweeps."""
    if chain.interval != 1:
        raise ValueError(f"flip rates need interval 1 chains, got interval {chain.interval}")
    if chain.hidden is None:
        raise ValueError("flip rates need hidden spins recorded")
    if len(chain) < 2:
        raise ValueError("need at least 2 samples")
    visible = float(np.mean(chain.samples[1:] != chain.samples[:-1]))
    hidden = float(np.mean(chain.hidden[1:] != chain.hidden[:-1]))
    return visible, hidden


BARRIER_CSV_HEADER = ("n_spins,alpha,model_id,mean_barrier,approx_barrier,"
                      "mean_connection,visible_flip_rate,hidden_flip_rate,log_tau_sim")


def barrier_csv_row(n_spins: int, alpha: int, model_id: str, mean_barrier: float,
                    approx: float, connection: float, visible_rate: float,
                    hidden_rate: float, tau_sim_sweeps: float) -> str:
    """One report row; log_tau_sim is log10 of tau_sIM in sweeps."""
    return ",".join([
        str(n_spins),
        str(alpha),
        model_id,
        repr(float(mean_barrier)),
        repr(float(approx)),
        repr(float(connection)),
        repr(float(visible_rate)),
        repr(float(hidden_rate)),
        repr(float(np.log10(tau_sim_sweeps))),
    ])
