"""The classical Ising model whose Boltzmann distribution carries psi^2 as its
visible marginal.

Joint spins are ordered m = [x_1 .. x_M, s_1 .. s_n]: hidden block first.
H(m) = -sum_i h_i m_i - sum_{i<j} J_ij m_i m_j at fixed temperature beta = 1;
the distribution P(m) = exp(-H(m)) has no temperature knob.

W is kept separately and the dense (M+n)^2 coupling matrix is materialized
only for small-instance tests and file export: a sweep costs two rectangular
matrix-vector products, not one square one.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rbm import RbmModel

__all__ = [
    "IsingModel",
    "map_rbm_to_ising",
    "ising_energy",
    "local_field",
    "export_ising",
]


@dataclass(frozen=True)
class IsingModel:
    """Bipartite couplings between the hidden and visible blocks only."""

    M: int  # hidden count, first block
    n: int  # visible count, second block
    W: np.ndarray  # (n, M); J[hidden j, visible M+i] = W_ij
    h: np.ndarray  # (M + n,), zero on the visible block

    @property
    def total(self) -> int:
        return self.M + self.n

    def coupling_matrix(self) -> np.ndarray:
        """Dense symmetric zero-diagonal view; small instances only."""
        N = self.total
        J = np.zeros((N, N))
        J[: self.M, self.M :] = self.W.T
        J[self.M :, : self.M] = self.W
        return J


def map_rbm_to_ising(model: RbmModel) -> IsingModel:
    """J couples hidden j to visible i with weight W_ij; h = [b, 0...0]."""
    h = np.zeros(model.M + model.n)
    h[: model.M] = model.b
    h.setflags(write=False)
    return IsingModel(M=model.M, n=model.n, W=model.W, h=h)


def ising_energy(ising: IsingModel, m: np.ndarray) -> float:
    """-sum h_i m_i - sum_{i<j} J_ij m_i m_j for a joint configuration."""
    if m.shape != (ising.total,):
        raise ValueError(f"m must have length {ising.total}, got {m.shape}")
    x = m[: ising.M].astype(np.float64)
    s = m[ising.M :].astype(np.float64)
    return float(-ising.h[: ising.M] @ x - s @ ising.W @ x)


def local_field(ising: IsingModel, m: np.ndarray, i: int) -> float:
    """I_i = h_i + sum_j J_ij m_j; flipping m_i from +1 to -1 costs 2 I_i."""
    if not 0 <= i < ising.total:
        raise IndexError(f"spin index {i} out of range for {ising.total} spins")
    x = m[: ising.M].astype(np.float64)
    s = m[ising.M :].astype(np.float64)
    if i < ising.M:
        return float(ising.h[i] + ising.W[:, i] @ s)
    return float(ising.W[i - ising.M] @ x)


def export_ising(ising: IsingModel, path) -> None:
    """Text export for external Ising-machine toolchains.

    Header `N M n`, then one `i value` line per bias, then `i j value` lines
    (0-based, i < j) for the nonzero couplings.
    """
    lines = [f"{ising.total} {ising.M} {ising.n}"]
    for i in range(ising.total):
        lines.append(f"{i} {float(ising.h[i])!r}")
    for j in range(ising.M):
        for i in range(ising.n):
            w = float(ising.W[i, j])
            if w != 0.0:
                lines.append(f"{j} {ising.M + i} {w!r}")
    Path(path).write_text("\n".join(lines) + "\n")
