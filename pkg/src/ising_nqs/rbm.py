"""The modified RBM wavefunction: log-amplitude, ratios, and parameter derivatives.

psi(s) = exp[(1/2) sum_j log 2 cosh(theta_j)], theta_j = b_j + sum_i W_ij s_i.
All parameters are real; there are no visible biases. Parameter vectors are
ordered hidden biases first, then W row-major (visible index outer, hidden
inner). That ordering is shared with the trainer and must not change.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

MODEL_SCHEMA_VERSION = 1

__all__ = [
    "RbmModel",
    "ThetaCache",
    "log2cosh",
    "log_psi",
    "log_psi_batch",
    "psi_ratio",
    "apply_flips",
    "log_derivatives",
    "log_derivatives_batch",
    "random_model",
    "pack_parameters",
    "unpack_parameters",
    "save_model",
    "load_model",
]


def log2cosh(t):
    """Numerically stable log(2 cosh t), elementwise.

    Trained weights at large alpha push |theta| far beyond the naive cosh
    overflow point, so the stable branch is mandatory.
    """
    a = np.abs(t)
    return a + np.log1p(np.exp(-2.0 * a))


@dataclass(frozen=True)
class RbmModel:
    """Immutable variational state; shareable across worker threads."""

    n: int
    M: int
    alpha: int
    W: np.ndarray  # (n, M)
    b: np.ndarray  # (M,)

    def __post_init__(self):
        if self.M != self.alpha * self.n:
            raise ValueError(f"M = {self.M} must equal alpha * n = {self.alpha * self.n}")
        if self.W.shape != (self.n, self.M):
            raise ValueError(f"W must be ({self.n}, {self.M}), got {self.W.shape}")
        if self.b.shape != (self.M,):
            raise ValueError(f"b must be ({self.M},), got {self.b.shape}")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b))):
            raise ValueError("model parameters must be finite")
        self.W.setflags(write=False)
        self.b.setflags(write=False)

    @property
    def n_parameters(self) -> int:
        return self.M + self.n * self.M


def random_model(n: int, alpha: int, rng: np.random.Generator, scale: float = 0.01) -> RbmModel:
    """Independent uniform parameters in [-scale, scale]. The training default
    0.01 keeps theta near zero where log 2 cosh is well conditioned."""
    M = alpha * n
    W = rng.uniform(-scale, scale, size=(n, M))
    b = rng.uniform(-scale, scale, size=M)
    return RbmModel(n=n, M=M, alpha=alpha, W=W, b=b)


def log_psi(model: RbmModel, spins: np.ndarray) -> float:
    """(1/2) sum_j log 2 cosh(theta_j); total function for finite parameters."""
    if spins.shape[0] != model.n:
        raise ValueError(f"config length {spins.shape[0]} != model n {model.n}")
    theta = model.b + spins.astype(np.float64) @ model.W
    return 0.5 * float(np.sum(log2cosh(theta)))


def log_psi_batch(model: RbmModel, samples: np.ndarray) -> np.ndarray:
    theta = samples.astype(np.float64) @ model.W + model.b
    return 0.5 * np.sum(log2cosh(theta), axis=1)


@dataclass
class ThetaCache:
    """Per-chain mutable cache of theta_j = b_j + sum_i W_ij s_i. Never shared."""

    model: RbmModel
    theta: np.ndarray

    @classmethod
    def build(cls, model: RbmModel, spins: np.ndarray) -> "ThetaCache":
        return cls(model=model, theta=model.b + spins.astype(np.float64) @ model.W)


def psi_ratio(model: RbmModel, cache: ThetaCache, spins: np.ndarray, flips: Iterable[int]) -> float:
    """psi(s with flips applied) / psi(s), computed from theta deltas."""
    flips = list(flips)
    if not flips:
        return 1.0
    delta = np.zeros(model.M)
    for i in flips:
        delta += 2.0 * model.W[i] * float(spins[i])
    new_theta = cache.theta - delta
    return float(np.exp(0.5 * (np.sum(log2cosh(new_theta)) - np.sum(log2cosh(cache.theta)))))


def apply_flips(cache: ThetaCache, spins: np.ndarray, flips: Iterable[int]) -> None:
    """Negate the listed spins in place; theta_j loses 2 W_ij s_i(old) per flip."""
    W = cache.model.W
    for i in flips:
        cache.theta -= 2.0 * W[i] * float(spins[i])
        spins[i] = -spins[i]


def log_derivatives(model: RbmModel, spins: np.ndarray) -> np.ndarray:
    """O_k(s): d log psi / d parameter. O_b_j = tanh(theta_j)/2,
    O_W_ij = s_i tanh(theta_j)/2. Biases first, then W row-major."""
    theta = model.b + spins.astype(np.float64) @ model.W
    th = 0.5 * np.tanh(theta)
    out = np.empty(model.n_parameters)
    out[: model.M] = th
    out[model.M :] = (spins.astype(np.float64)[:, None] * th[None, :]).reshape(-1)
    return out


def log_derivatives_batch(model: RbmModel, samples: np.ndarray) -> np.ndarray:
    """(B, M + n*M) matrix of O_k per sample; same ordering as log_derivatives."""
    S = samples.astype(np.float64)
    theta = S @ model.W + model.b
    th = 0.5 * np.tanh(theta)
    B = samples.shape[0]
    out = np.empty((B, model.n_parameters))
    out[:, : model.M] = th
    out[:, model.M :] = (S[:, :, None] * th[:, None, :]).reshape(B, -1)
    return out


def pack_parameters(model: RbmModel) -> np.ndarray:
    """Flatten (b, W) into the shared parameter ordering."""
    out = np.empty(model.n_parameters)
    out[: model.M] = model.b
    out[model.M :] = model.W.reshape(-1)
    return out


def unpack_parameters(params: np.ndarray, n: int, alpha: int) -> RbmModel:
    M = alpha * n
    if params.shape != (M + n * M,):
        raise ValueError(f"expected {M + n * M} parameters, got {params.shape}")
    b = params[:M].copy()
    W = params[M:].reshape(n, M).copy()
    return RbmModel(n=n, M=M, alpha=alpha, W=W, b=b)


def save_model(model: RbmModel, path, *, L: int, J: float, rng_seed: int,
               training_meta: dict | None = None) -> None:
    """Model persistence; W is stored row-major flat, length n*M."""
    if L * L != model.n:
        raise ValueError(f"L = {L} inconsistent with n = {model.n}")
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "L": L,
        "alpha": model.alpha,
        "J": float(J),
        "W": [float(v) for v in model.W.reshape(-1)],
        "b": [float(v) for v in model.b],
        "rng_seed": int(rng_seed),
        "training_meta": training_meta or {},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def load_model(path) -> tuple[RbmModel, dict]:
    """Read a model file, rejecting dimension mismatches.

    Returns (model, meta) where meta holds L, J, rng_seed, training_meta.
    """
    doc = json.loads(Path(path).read_text())
    L = int(doc["L"])
    alpha = int(doc["alpha"])
    n = L * L
    M = alpha * n
    W = np.asarray(doc["W"], dtype=np.float64)
    b = np.asarray(doc["b"], dtype=np.float64)
    if W.shape != (n * M,):
        raise ValueError(f"W length {W.shape[0]} != n*M = {n * M}")
    if b.shape != (M,):
        raise ValueError(f"b length {b.shape[0]} != M = {M}")
    model = RbmModel(n=n, M=M, alpha=alpha, W=W.reshape(n, M), b=b)
    meta = {
        "schema_version": doc.get("schema_version"),
        "L": L,
        "J": float(doc["J"]),
        "rng_seed": doc.get("rng_seed"),
        "training_meta": doc.get("training_meta", {}),
    }
    return model, meta
