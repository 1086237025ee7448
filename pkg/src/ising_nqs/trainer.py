"""Stochastic-reconfiguration ground-state optimization of the RBM.

Each iteration samples the current model with MH (200 thermalization sweeps,
samples one sweep apart), accumulates the log-derivatives O_k and local
energies, builds S = <O O> - <O><O> and F = <E O> - <E><O>, regularizes
S' = S + eps(p) I with eps(p) = max(eps, eps0 * b^p), solves S' delta = F,
and steps parameters by -eta * delta.

Presets: LOW = 2000 samples per iteration, eps = 1e-4, b = 0.9, eps0 = 100;
HIGH = 10000 samples, eps = 1e-3, b = 0.85, eps0 = 10. The (n_spins, alpha)
preset table is reproduced verbatim in PRESET_TABLE; combos outside it need
an explicit preset override.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import _kernels
from .errors import NumericalError
from .heisenberg import SquareLattice, local_energy_batch, neel_state
from .rbm import RbmModel, log_derivatives_batch, random_model, unpack_parameters
from .samplers import STREAM_TRAIN, MhState, chain_rng

__all__ = [
    "PRESETS",
    "PRESET_TABLE",
    "preset_for",
    "TrainConfig",
    "TrainHistory",
    "sr_matrix",
    "force_vector",
    "regularize",
    "solve_shift",
    "sr_step",
    "train",
    "write_history_csv",
]

PRESETS = {
    "low": {"n_samples": 2000, "eps": 1e-4, "eps0": 100.0, "decay_b": 0.9},
    "high": {"n_samples": 10000, "eps": 1e-3, "eps0": 10.0, "decay_b": 0.85},
}

# preset per (n_spins, alpha); missing entries were not trained
PRESET_TABLE = {
    16: {1: "low", 2: "low", 3: "low", 4: "low", 8: "low"},
    36: {1: "low", 2: "low", 3: "low", 4: "low", 8: "low"},
    64: {1: "low", 2: "low", 3: "low", 4: "low", 8: "low"},
    100: {1: "low", 2: "low", 3: "low", 4: "low", 8: "low"},
    144: {2: "low", 3: "low", 4: "low", 8: "high"},
    196: {2: "low", 3: "low", 4: "low", 8: "high"},
    256: {2: "high", 3: "high", 4: "high", 8: "high"},
    324: {2: "high", 3: "high", 4: "high", 8: "high"},
    400: {2: "high", 3: "high", 4: "high", 8: "high"},
    484: {2: "high", 3: "high", 4: "high"},
}


def preset_for(n_spins: int, alpha: int) -> str:
    """Preset name for a tabulated (n_spins, alpha) pair."""
    try:
        return PRESET_TABLE[n_spins][alpha]
    except KeyError:
        raise ValueError(
            f"(n_spins={n_spins}, alpha={alpha}) has no tabulated preset; pass one explicitly"
        ) from None


@dataclass(frozen=True)
class TrainConfig:
    iterations: int
    seed: int
    preset: str = "low"
    eta: float = 0.005
    n_samples: int = 2000
    eps: float = 1e-4
    eps0: float = 100.0
    decay_b: float = 0.9
    thermalization: int = 200
    n_chains: int = 1

    def __post_init__(self):
        if self.eta < 0 or self.iterations < 1 or self.n_samples < 2 or self.n_chains < 1:
            raise ValueError(f"invalid training config {self}")

    @classmethod
    def for_system(cls, n_spins: int, alpha: int, iterations: int, seed: int,
                   preset: str | None = None, **overrides) -> "TrainConfig":
        name = preset or preset_for(n_spins, alpha)
        params = dict(PRESETS[name])
        params.update(overrides)
        return cls(iterations=iterations, seed=seed, preset=name, **params)


@dataclass
class TrainHistory:
    energy: list[float] = field(default_factory=list)
    variance: list[float] = field(default_factory=list)
    eps_p: list[float] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.energy)


def sr_matrix(O: np.ndarray) -> np.ndarray:
    """S_kk' = <O_k O_k'> - <O_k><O_k'>; symmetric PSD for real parameters."""
    if O.ndim != 2 or O.shape[0] < 2:
        raise ValueError("need a (B, K) sample matrix with B >= 2")
    B = O.shape[0]
    mean = O.mean(axis=0)
    S = O.T @ O / B - np.outer(mean, mean)
    return S


def force_vector(O: np.ndarray, energies: np.ndarray) -> np.ndarray:
    """F_k = <E_loc O_k> - <E_loc><O_k>."""
    if O.shape[0] != energies.shape[0]:
        raise ValueError("sample counts of O and E_loc differ")
    B = O.shape[0]
    return O.T @ energies / B - O.mean(axis=0) * energies.mean()


def regularization_shift(p: int, eps: float, eps0: float, decay_b: float) -> float:
    return max(eps, eps0 * decay_b**p)


def regularize(S: np.ndarray, p: int, *, eps: float, eps0: float, decay_b: float) -> tuple[np.ndarray, float]:
    """S' = S + eps(p) I."""
    shift = regularization_shift(p, eps, eps0, decay_b)
    S_prime = S.copy()
    S_prime[np.diag_indices_from(S_prime)] += shift
    return S_prime, shift


def solve_shift(S_prime: np.ndarray, F: np.ndarray) -> np.ndarray:
    """SPD solve of S' delta = F."""
    try:
        cf = cho_factor(S_prime, lower=True, check_finite=False)
        delta = cho_solve(cf, F, check_finite=False)
    except LinAlgError as exc:
        raise NumericalError(f"SR solve failed: {exc}") from exc
    if not np.all(np.isfinite(delta)):
        raise NumericalError("SR solve produced non-finite update")
    return delta


def sr_step(model: RbmModel, O: np.ndarray, energies: np.ndarray, p: int, eta: float,
            *, eps: float = 1e-4, eps0: float = 100.0,
            decay_b: float = 0.9) -> tuple[RbmModel, dict]:
    """One SR update; parameter ordering matches log_derivatives."""
    S = sr_matrix(O)
    F = force_vector(O, energies)
    S_prime, shift = regularize(S, p, eps=eps, eps0=eps0, decay_b=decay_b)
    delta = solve_shift(S_prime, F)
    params = np.empty(model.n_parameters)
    params[: model.M] = model.b
    params[model.M :] = model.W.reshape(-1)
    params -= eta * delta
    if not np.all(np.isfinite(params)):
        raise NumericalError(f"divergent update at iteration {p}: reduce eta")
    new_model = unpack_parameters(params, model.n, model.alpha)
    return new_model, {"eps_p": shift, "grad_norm": float(np.linalg.norm(F))}


def train(lattice: SquareLattice, alpha: int, J: float, cfg: TrainConfig,
          initial: RbmModel | None = None) -> tuple[RbmModel, TrainHistory]:
    """Optimize an L x L model from small random parameters.

    Sampling chains warm-start from the previous iteration's final spins; the
    whole run is a pure function of cfg.seed.
    """
    n = lattice.n
    init_rng = chain_rng(cfg.seed, STREAM_TRAIN, 0)
    model = initial if initial is not None else random_model(n, alpha, init_rng)
    if model.n != n or model.alpha != alpha:
        raise ValueError("initial model does not match lattice / alpha")
    chain_rngs = [chain_rng(cfg.seed, STREAM_TRAIN, 1 + c) for c in range(cfg.n_chains)]
    chain_spins = [neel_state(lattice) for _ in range(cfg.n_chains)]
    per_chain = [cfg.n_samples // cfg.n_chains] * cfg.n_chains
    per_chain[0] += cfg.n_samples - sum(per_chain)
    history = TrainHistory()

    for p in range(cfg.iterations):
        batches = []
        for c in range(cfg.n_chains):
            state = MhState.from_spins(model, chain_spins[c])
            rng = chain_rngs[c]
            u = rng.random((cfg.thermalization, n, 3))
            _kernels.mh_sweeps(model.W, model.b, state.spins, state.theta,
                               state.up, state.down, state.pos, u, 0,
                               np.empty((0, 0), dtype=np.int8), np.empty(0, dtype=np.int64), 0)
            out_s = np.empty((per_chain[c], n), dtype=np.int8)
            out_m = np.empty(per_chain[c], dtype=np.int64)
            u = rng.random((per_chain[c], n, 3))
            _kernels.mh_sweeps(model.W, model.b, state.spins, state.theta,
                               state.up, state.down, state.pos, u, 1, out_s, out_m, 0)
            chain_spins[c] = state.spins.copy()
            batches.append(out_s)
        samples = np.concatenate(batches, axis=0)
        O = log_derivatives_batch(model, samples)
        energies = local_energy_batch(samples, model, lattice, J)
        e_mean = float(energies.mean())
        if not np.isfinite(e_mean):
            raise NumericalError(f"divergent energy at iteration {p}")
        model, info = sr_step(model, O, energies, p, cfg.eta,
                              eps=cfg.eps, eps0=cfg.eps0, decay_b=cfg.decay_b)
        history.energy.append(e_mean)
        history.variance.append(float(energies.var()))
        history.eps_p.append(info["eps_p"])
        history.grad_norm.append(info["grad_norm"])
    return model, history


def write_history_csv(history: TrainHistory, path, extra_comments: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if extra_comments:
            for k, v in extra_comments.items():
                fh.write(f"# {k}={v}\n")
        writer = csv.writer(fh)
        writer.writerow(["iter", "energy", "variance", "eps_p", "grad_norm"])
        for i in range(len(history)):
            writer.writerow([i, repr(history.energy[i]), repr(history.variance[i]),
                             repr(history.eps_p[i]), repr(history.grad_norm[i])])
