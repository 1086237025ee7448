"""Numba sweep kernels. Internal module.

All kernels consume pre-generated uniforms in a fixed order so that chains are
pure functions of their seed: 3 draws per MH proposal step, M + n draws per
sIM sweep. Reductions and updates run in a fixed index order.
"""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def log2cosh(t):
    # log(2 cosh t) = |t| + log1p(exp(-2|t|)); never overflows
    a = abs(t)
    return a + np.log1p(np.exp(-2.0 * a))


@njit(cache=True, nogil=True)
def mh_sweeps(W, b, spins, theta, up_idx, down_idx, pos, u, store_every, out_spins, out_mag, row0):
    """Run u.shape[0] MH sweeps of n pair-exchange proposals each.

    up_idx/down_idx list the sites with spin +1/-1; pos[i] is site i's slot in
    its list. The lists are maintained in place so partner picks are O(1).
    Snapshots go to out_spins/out_mag every store_every sweeps (0 disables).
    Returns (accept count, next output row).
    """
    n, M = W.shape
    half = n // 2
    n_acc = 0
    row = row0
    for t in range(u.shape[0]):
        for step in range(n):
            i = int(u[t, step, 0] * n)
            if i >= n:
                i = n - 1
            si = spins[i]
            r = int(u[t, step, 1] * half)
            if r >= half:
                r = half - 1
            k = down_idx[r] if si > 0 else up_idx[r]
            sk = spins[k]
            # exchange flips both spins; acceptance is |psi'/psi|^2, and the
            # square cancels the 1/2 in log psi, so the log-ratio is a plain
            # sum of log2cosh differences
            dlog = 0.0
            for j in range(M):
                tj = theta[j]
                tj2 = tj - 2.0 * (W[i, j] * si + W[k, j] * sk)
                dlog += log2cosh(tj2) - log2cosh(tj)
            if dlog >= 0.0 or u[t, step, 2] < np.exp(dlog):
                n_acc += 1
                for j in range(M):
                    theta[j] -= 2.0 * (W[i, j] * si + W[k, j] * sk)
                spins[i] = -si
                spins[k] = -sk
                pi = pos[i]
                pk = pos[k]
                if si > 0:
                    up_idx[pi] = k
                    down_idx[pk] = i
                else:
                    down_idx[pi] = k
                    up_idx[pk] = i
                pos[i] = pk
                pos[k] = pi
        if store_every > 0 and (t + 1) % store_every == 0:
            mag = 0
            for q in range(n):
                out_spins[row, q] = spins[q]
                mag += spins[q]
            out_mag[row] = mag
            row += 1
    return n_acc, row


@njit(cache=True, nogil=True)
def mh_sweeps_neighbor(W, b, spins, theta, up_idx, down_idx, pos, neighbors, u,
                       store_every, out_spins, out_mag, row0):
    """Nearest-neighbor proposal variant: partner drawn among the 4 neighbors.

    A parallel partner makes the proposal invalid and counts as a rejection,
    which keeps the proposal symmetric.
    """
    n, M = W.shape
    n_acc = 0
    row = row0
    for t in range(u.shape[0]):
        for step in range(n):
            i = int(u[t, step, 0] * n)
            if i >= n:
                i = n - 1
            si = spins[i]
            r = int(u[t, step, 1] * 4)
            if r >= 4:
                r = 3
            k = neighbors[i, r]
            sk = spins[k]
            if sk == si:
                continue
            dlog = 0.0
            for j in range(M):
                tj = theta[j]
                tj2 = tj - 2.0 * (W[i, j] * si + W[k, j] * sk)
                dlog += log2cosh(tj2) - log2cosh(tj)
            if dlog >= 0.0 or u[t, step, 2] < np.exp(dlog):
                n_acc += 1
                for j in range(M):
                    theta[j] -= 2.0 * (W[i, j] * si + W[k, j] * sk)
                spins[i] = -si
                spins[k] = -sk
                pi = pos[i]
                pk = pos[k]
                if si > 0:
                    up_idx[pi] = k
                    down_idx[pk] = i
                else:
                    down_idx[pi] = k
                    up_idx[pk] = i
                pos[i] = pk
                pos[k] = pi
        if store_every > 0 and (t + 1) % store_every == 0:
            mag = 0
            for q in range(n):
                out_spins[row, q] = spins[q]
                mag += spins[q]
            out_mag[row] = mag
            row += 1
    return n_acc, row


@njit(cache=True, nogil=True)
def sim_sweeps(W, b, x, s, u, store_every, out_s, out_mag, out_x, record_hidden, row0):
    """Chromatic Gibbs sweeps: all hidden spins from the visibles, then all
    visibles from the fresh hiddens. P(m_i = +1) = 1 / (1 + exp(-2 I_i)).

    Returns (flip count hidden, flip count visible, next output row).
    """
    n, M = W.shape
    row = row0
    flips_h = 0
    flips_v = 0
    for t in range(u.shape[0]):
        for j in range(M):
            I = b[j]
            for i in range(n):
                I += W[i, j] * s[i]
            p = 1.0 / (1.0 + np.exp(-2.0 * I))
            new = 1 if u[t, j] < p else -1
            if new != x[j]:
                flips_h += 1
            x[j] = new
        for i in range(n):
            I = 0.0
            for j in range(M):
                I += W[i, j] * x[j]
            p = 1.0 / (1.0 + np.exp(-2.0 * I))
            new = 1 if u[t, M + i] < p else -1
            if new != s[i]:
                flips_v += 1
            s[i] = new
        if store_every > 0 and (t + 1) % store_every == 0:
            mag = 0
            for q in range(n):
                out_s[row, q] = s[q]
                mag += s[q]
            out_mag[row] = mag
            if record_hidden:
                for q in range(M):
                    out_x[row, q] = x[q]
            row += 1
    return flips_h, flips_v, row


@njit(cache=True, nogil=True)
def local_energy_batch(W, b, samples, bonds, J):
    """E_loc for each row of samples; theta rebuilt per row."""
    B = samples.shape[0]
    n, M = W.shape
    nb = bonds.shape[0]
    out = np.empty(B)
    theta = np.empty(M)
    for m in range(B):
        for j in range(M):
            acc = b[j]
            for i in range(n):
                acc += W[i, j] * samples[m, i]
            theta[j] = acc
        e = 0.0
        for q in range(nb):
            i = bonds[q, 0]
            k = bonds[q, 1]
            si = samples[m, i]
            sk = samples[m, k]
            if si == sk:
                e += 0.25
            else:
                dlog = 0.0
                for j in range(M):
                    tj = theta[j]
                    tj2 = tj - 2.0 * (W[i, j] * si + W[k, j] * sk)
                    dlog += log2cosh(tj2) - log2cosh(tj)
                e += -0.25 - 0.5 * np.exp(0.5 * dlog)
        out[m] = J * e
    return out
