"""Brute-force references for tests and acceptance runs: exhaustive
enumeration of the wavefunction and joint Boltzmann distributions, and exact
diagonalization of small lattices in the magnetization-0 sector.

State indexing convention, shared with the packed_spins file format: site 0 is
the most significant bit, bit 1 means spin +1. A visible index v therefore
decodes as s_i = +1 iff bit (n-1-i) of v is set. Joint states put the hidden
block in the high bits: joint = x_index * 2^n + s_index.

Size guards are hard errors; these oracles must never silently attempt an
enumeration of 2^48 states.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh

from .errors import EnumerationSizeError, NumericalError
from .heisenberg import SquareLattice, local_energy_batch
from .ising import IsingModel
from .rbm import RbmModel, log2cosh

MAX_VISIBLE_ENUM = 20
MAX_JOINT_ENUM = 20
MAX_VARIATIONAL = 16
_CHUNK = 1 << 14

__all__ = [
    "ExactSpectrumResult",
    "state_to_spins",
    "spins_to_state",
    "all_states",
    "sector_states",
    "enumerate_visible_distribution",
    "enumerate_joint_boltzmann",
    "ground_energy_from_bonds",
    "exact_ground_energy",
    "exact_variational_energy",
    "ring_bonds",
]


@dataclass(frozen=True)
class ExactSpectrumResult:
    ground_energy: float
    sector_dimension: int
    residual: float


def state_to_spins(index: int, n: int) -> np.ndarray:
    """Decode a state index to a +-1 array, site 0 = MSB."""
    spins = np.empty(n, dtype=np.int8)
    for i in range(n):
        spins[i] = 1 if (index >> (n - 1 - i)) & 1 else -1
    return spins


def spins_to_state(spins: np.ndarray) -> int:
    n = len(spins)
    v = 0
    for i in range(n):
        if spins[i] > 0:
            v |= 1 << (n - 1 - i)
    return v


def all_states(n: int) -> np.ndarray:
    """(2^n, n) matrix of +-1 rows in index order."""
    idx = np.arange(1 << n, dtype=np.uint64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    return np.where(bits == 1, 1, -1).astype(np.int8)


def sector_states(n: int) -> np.ndarray:
    """Sorted indices of all magnetization-0 states; dimension C(n, n/2)."""
    states = []
    for ups in combinations(range(n), n // 2):
        v = 0
        for i in ups:
            v |= 1 << (n - 1 - i)
        states.append(v)
    return np.array(sorted(states), dtype=np.int64)


def enumerate_visible_distribution(model: RbmModel) -> tuple[np.ndarray, np.ndarray]:
    """Normalized psi(s)^2 over all 2^n states, and the magnetization-0
    restricted renormalized table (zero outside the sector)."""
    n = model.n
    if n > MAX_VISIBLE_ENUM:
        raise EnumerationSizeError(f"visible enumeration capped at n = {MAX_VISIBLE_ENUM}, got {n}")
    total = 1 << n
    log_w = np.empty(total)
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.uint64)
        bits = (idx[:, None] >> shifts[None, :]) & 1
        S = np.where(bits == 1, 1.0, -1.0)
        theta = S @ model.W + model.b
        log_w[start : start + len(idx)] = np.sum(log2cosh(theta), axis=1)
    log_w -= log_w.max()
    p = np.exp(log_w)
    p /= p.sum()
    mags = _state_magnetizations(n)
    sector = np.where(mags == 0, p, 0.0)
    sector_sum = sector.sum()
    if sector_sum == 0:
        raise NumericalError("wavefunction has zero weight on the magnetization-0 sector")
    return p, sector / sector_sum


def _state_magnetizations(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint64)
    shifts = np.arange(n, dtype=np.uint64)
    ones = ((idx[:, None] >> shifts[None, :]) & 1).sum(axis=1).astype(np.int64)
    return 2 * ones - n


def enumerate_joint_boltzmann(ising: IsingModel) -> tuple[np.ndarray, np.ndarray]:
    """Normalized exp(-H) over all 2^(M+n) joint states, plus the visible
    marginal. Joint index = hidden index * 2^n + visible index."""
    N = ising.total
    if N > MAX_JOINT_ENUM:
        raise EnumerationSizeError(f"joint enumeration capped at M + n = {MAX_JOINT_ENUM}, got {N}")
    M, n = ising.M, ising.n
    X = all_states(M).astype(np.float64)  # (2^M, M)
    S = all_states(n).astype(np.float64)  # (2^n, n)
    # H = -b.x - s.W.x over the hidden-visible grid
    bx = X @ ising.h[:M]  # (2^M,)
    cross = (S @ ising.W) @ X.T  # (2^n, 2^M)
    logp = bx[None, :] + cross  # -H, hidden axis last
    logp = logp.T.reshape(-1)  # joint index = x * 2^n + s
    logp -= logp.max()
    p = np.exp(logp)
    p /= p.sum()
    marginal = p.reshape(1 << M, 1 << n).sum(axis=0)
    return p, marginal


def ring_bonds(n: int) -> np.ndarray:
    """Periodic 1D chain bonds; test-fixture geometry only, the public lattice
    API stays square with L >= 4."""
    return np.array([(i, (i + 1) % n) for i in range(n)], dtype=np.int64)


def _sector_hamiltonian(n: int, bonds: np.ndarray, J: float) -> tuple[sp.csr_matrix, np.ndarray]:
    """Heisenberg matrix in the magnetization-0 sector after the sublattice
    rotation: diagonal J s_i s_j / 4 per bond, off-diagonal -J/2 on each
    antiparallel pair exchange. The rotated matrix has nonpositive
    off-diagonal entries, so the ground vector can be chosen nonnegative."""
    states = sector_states(n)
    index_of = {int(v): k for k, v in enumerate(states)}
    dim = len(states)
    rows, cols, vals = [], [], []
    diag = np.zeros(dim)
    for k, v in enumerate(states):
        v = int(v)
        for i, j in bonds:
            bi = (v >> (n - 1 - int(i))) & 1
            bj = (v >> (n - 1 - int(j))) & 1
            if bi == bj:
                diag[k] += 0.25 * J
            else:
                diag[k] -= 0.25 * J
                w = v ^ ((1 << (n - 1 - int(i))) | (1 << (n - 1 - int(j))))
                rows.append(k)
                cols.append(index_of[w])
                vals.append(-0.5 * J)
    H = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    H = H + sp.diags(diag)
    return H.tocsr(), states


def ground_energy_from_bonds(n: int, bonds: np.ndarray, J: float = 1.0) -> ExactSpectrumResult:
    """Lowest eigenvalue of the magnetization-0 sector for any bond list;
    n <= 20. Used directly only by test fixtures such as the 1x4 ring."""
    if n > MAX_VISIBLE_ENUM:
        raise EnumerationSizeError(f"diagonalization capped at n = {MAX_VISIBLE_ENUM}, got {n}")
    if J == 0.0:
        from math import comb

        return ExactSpectrumResult(0.0, comb(n, n // 2), 0.0)
    H, states = _sector_hamiltonian(n, bonds, J)
    dim = H.shape[0]
    if dim <= 512:
        w, v = eigh(H.toarray())
        e0 = w[0]
        vec = v[:, 0]
    else:
        w, v = eigsh(H, k=1, which="SA")
        e0 = w[0]
        vec = v[:, 0]
    residual = float(np.linalg.norm(H @ vec - e0 * vec))
    if residual > 1e-8:
        raise NumericalError(f"eigenpair residual {residual:.2e} exceeds 1e-8")
    return ExactSpectrumResult(float(e0), dim, residual)


def exact_ground_energy(lattice: SquareLattice, J: float = 1.0) -> ExactSpectrumResult:
    return ground_energy_from_bonds(lattice.n, np.asarray(lattice.bonds), J)


def exact_variational_energy(model: RbmModel, lattice: SquareLattice, J: float = 1.0) -> float:
    """Sector-restricted exact expectation sum_s P(s) E_loc(s); n <= 16."""
    n = model.n
    if n > MAX_VARIATIONAL:
        raise EnumerationSizeError(f"exact variational energy capped at n = {MAX_VARIATIONAL}, got {n}")
    states = sector_states(n)
    spins = np.empty((len(states), n), dtype=np.int8)
    for k, v in enumerate(states):
        spins[k] = state_to_spins(int(v), n)
    theta = spins.astype(np.float64) @ model.W + model.b
    log_w = np.sum(log2cosh(theta), axis=1)
    log_w -= log_w.max()
    p = np.exp(log_w)
    p /= p.sum()
    e = local_energy_batch(spins, model, lattice, J)
    return float(p @ e)
