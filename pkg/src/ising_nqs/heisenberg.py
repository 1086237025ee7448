"""Square-lattice geometry and the Heisenberg local-energy estimator.

Site ordering is row-major: site index = row * L + col. The ordering is part
of the file-format contract, so it must never change.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = [
    "SquareLattice",
    "build_lattice",
    "neel_state",
    "local_energy",
    "local_energy_batch",
    "magnetization",
]


@dataclass(frozen=True)
class SquareLattice:
    """Periodic square lattice; bonds hold each nearest-neighbor pair once."""

    L: int
    n: int
    bonds: np.ndarray  # (2n, 2) int64, each unordered pair once
    neighbors: np.ndarray = field(repr=False, default=None)  # (n, 4) int64


def build_lattice(L: int) -> SquareLattice:
    """Build the L x L torus. L must be even and at least 4.

    Odd L breaks the bipartite Neel structure; L = 2 would double-count the
    periodic bonds.
    """
    if L < 4 or L % 2 != 0:
        raise ValueError(f"L must be an even integer >= 4, got {L}")
    n = L * L
    bonds = np.empty((2 * n, 2), dtype=np.int64)
    neighbors = np.empty((n, 4), dtype=np.int64)
    k = 0
    for r in range(L):
        for c in range(L):
            s = r * L + c
            right = r * L + (c + 1) % L
            down = ((r + 1) % L) * L + c
            bonds[k] = (s, right)
            bonds[k + 1] = (s, down)
            k += 2
            left = r * L + (c - 1) % L
            up = ((r - 1) % L) * L + c
            neighbors[s] = (right, down, left, up)
    bonds.setflags(write=False)
    neighbors.setflags(write=False)
    return SquareLattice(L=L, n=n, bonds=bonds, neighbors=neighbors)


def neel_state(lattice: SquareLattice) -> np.ndarray:
    """Alternating +1/-1 by sublattice; magnetization exactly 0."""
    L = lattice.L
    spins = np.empty(lattice.n, dtype=np.int8)
    for r in range(L):
        for c in range(L):
            spins[r * L + c] = 1 if (r + c) % 2 == 0 else -1
    return spins


def magnetization(spins: np.ndarray) -> int:
    return int(np.sum(spins, dtype=np.int64))


def local_energy(spins: np.ndarray, model, lattice: SquareLattice, J: float = 1.0) -> float:
    """E_loc(s) = J * sum over bonds of [s_i s_j / 4 - (1/2) 1[s_i != s_j] psi(s^(ij))/psi(s)].

    s^(ij) is s with the antiparallel pair exchanged. The minus sign on the
    off-diagonal term is the sublattice basis rotation that makes the
    ground-state amplitudes real and nonnegative on the bipartite lattice.
    """
    if spins.shape[0] != model.n:
        raise ValueError(f"config length {spins.shape[0]} != model n {model.n}")
    out = _kernels.local_energy_batch(
        model.W, model.b, spins.reshape(1, -1).astype(np.int8), lattice.bonds, float(J)
    )
    e = float(out[0])
    if not np.isfinite(e):
        raise FloatingPointError("non-finite amplitude ratio in local energy")
    return e


def local_energy_batch(samples: np.ndarray, model, lattice: SquareLattice, J: float = 1.0) -> np.ndarray:
    """Vectorized E_loc over a (B, n) batch of configurations."""
    if samples.ndim != 2 or samples.shape[1] != model.n:
        raise ValueError(f"samples must be (B, {model.n}), got {samples.shape}")
    out = _kernels.local_energy_batch(
        model.W, model.b, np.ascontiguousarray(samples, dtype=np.int8), lattice.bonds, float(J)
    )
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite amplitude ratio in local energy batch")
    return out
