"""The two Markov-chain generators.

MH: magnetization-conserving pair exchanges on the visible spins. A sweep is n
proposal steps; each picks a site uniformly and a partner uniformly among all
antiparallel sites (global proposal; a nearest-neighbor variant is selectable),
then accepts with min(1, |psi'/psi|^2). Chains start from the Neel state.

sIM: chromatic Gibbs on the joint Ising model. A sweep resamples all hidden
spins from the visibles, then all visibles from the fresh hiddens. Chains
start from a uniformly random joint state and are stored unfiltered; the
magnetization-0 restriction happens afterwards.

Chains are pure functions of (model, config.seed): kernels consume
pre-generated uniforms in fixed order, and multi-chain runs give chain k the
stream SeedSequence([seed, stream_id, k]).
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .heisenberg import SquareLattice, neel_state
from .ising import IsingModel
from .rbm import RbmModel, ThetaCache

# fixed stream ids keep purposes from sharing RNG streams
STREAM_TRAIN = 0
STREAM_MH = 1
STREAM_SIM = 2
STREAM_PILOT = 3
STREAM_BENCH = 4

_CHUNK_SWEEPS = 4096

__all__ = [
    "ChainConfig",
    "SpinChain",
    "MhState",
    "mh_sweep",
    "sim_sweep",
    "run_chain",
    "run_mh_chain",
    "run_sim_chain",
    "run_chains",
    "filter_magnetization_zero",
    "pack_spins",
    "unpack_spins",
    "write_chain_csv",
    "read_chain_csv",
    "chain_rng",
]


@dataclass(frozen=True)
class ChainConfig:
    """Sampling plan: total sweeps, discarded thermalization sweeps, storage
    interval in sweeps (the Delta-t of the error formula), and the seed."""

    n_sweeps: int
    thermalization: int = 200
    interval: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_sweeps <= 0 or self.thermalization < 0 or self.interval < 1:
            raise ValueError(f"invalid chain config {self}")


@dataclass
class SpinChain:
    """Stored visible snapshots of one chain, plus diagnostics.

    sweep_indices[k] is the 1-based sweep (after thermalization) at which
    sample k was taken; for unfiltered chains this is (k+1) * interval.
    n_sweeps always counts unfiltered sweeps, which is what iso-accuracy
    bookkeeping needs after magnetization filtering.
    """

    kind: str  # "mh" | "sim"
    samples: np.ndarray  # (N, n) int8
    magnetizations: np.ndarray  # (N,) int64
    sweep_indices: np.ndarray  # (N,) int64
    interval: int
    n_sweeps: int
    seed: int
    acceptance_rate: float | None = None
    hidden_flip_rate: float | None = None
    visible_flip_rate: float | None = None
    hidden: np.ndarray | None = field(default=None, repr=False)  # (N, M) int8 if recorded

    def __len__(self) -> int:
        return self.samples.shape[0]


def chain_rng(seed: int, stream: int, chain_index: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream), int(chain_index)]))


@dataclass
class MhState:
    """Mutable per-chain state: spins, theta cache, and the up/down site lists
    that make partner picks O(1)."""

    spins: np.ndarray
    theta: np.ndarray
    up: np.ndarray
    down: np.ndarray
    pos: np.ndarray

    @classmethod
    def from_spins(cls, model: RbmModel, spins: np.ndarray) -> "MhState":
        spins = np.ascontiguousarray(spins, dtype=np.int8).copy()
        if int(spins.sum()) != 0:
            raise ValueError("MH chains must start in the magnetization-0 sector")
        n = spins.shape[0]
        up = np.flatnonzero(spins > 0).astype(np.int64)
        down = np.flatnonzero(spins < 0).astype(np.int64)
        if len(up) == 0 or len(down) == 0:
            raise ValueError("no antiparallel pair exists in a fully polarized state")
        pos = np.empty(n, dtype=np.int64)
        pos[up] = np.arange(n // 2)
        pos[down] = np.arange(n // 2)
        theta = ThetaCache.build(model, spins).theta
        return cls(spins=spins, theta=theta, up=up, down=down, pos=pos)


_EMPTY_S = np.empty((0, 0), dtype=np.int8)
_EMPTY_M = np.empty(0, dtype=np.int64)


def mh_sweep(model: RbmModel, state: MhState, rng: np.random.Generator) -> int:
    """One sweep of n proposal steps; returns the number of accepted moves."""
    u = rng.random((1, model.n, 3))
    acc, _ = _kernels.mh_sweeps(model.W, model.b, state.spins, state.theta,
                                state.up, state.down, state.pos, u, 0,
                                _EMPTY_S, _EMPTY_M, 0)
    return acc


def sim_sweep(ising: IsingModel, m: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One chromatic Gibbs sweep of the joint configuration, in place."""
    M, n = ising.M, ising.n
    x = np.ascontiguousarray(m[:M], dtype=np.int8)
    s = np.ascontiguousarray(m[M:], dtype=np.int8)
    u = rng.random((1, M + n))
    _kernels.sim_sweeps(ising.W, ising.h[:M], x, s, u, 0, _EMPTY_S, _EMPTY_M,
                        _EMPTY_S, False, 0)
    m[:M] = x
    m[M:] = s
    return m


def run_mh_chain(model: RbmModel, lattice: SquareLattice, cfg: ChainConfig,
                 proposal: str = "global", chain_index: int = 0,
                 initial: np.ndarray | None = None) -> SpinChain:
    """Run one MH chain; stores a visible snapshot every cfg.interval sweeps."""
    if proposal not in ("global", "neighbor"):
        raise ValueError(f"unknown proposal kind {proposal!r}")
    rng = chain_rng(cfg.seed, STREAM_MH, chain_index)
    spins0 = neel_state(lattice) if initial is None else initial
    state = MhState.from_spins(model, spins0)
    n = model.n

    def advance(n_sweeps: int, store_every: int, out_s, out_m, row: int) -> tuple[int, int]:
        done, acc = 0, 0
        chunk = store_every * max(1, _CHUNK_SWEEPS // max(store_every, 1)) if store_every else _CHUNK_SWEEPS
        while done < n_sweeps:
            k = min(chunk, n_sweeps - done)
            u = rng.random((k, n, 3))
            if proposal == "global":
                a, row = _kernels.mh_sweeps(model.W, model.b, state.spins, state.theta,
                                            state.up, state.down, state.pos, u,
                                            store_every, out_s, out_m, row)
            else:
                a, row = _kernels.mh_sweeps_neighbor(model.W, model.b, state.spins, state.theta,
                                                     state.up, state.down, state.pos,
                                                     lattice.neighbors, u,
                                                     store_every, out_s, out_m, row)
            acc += a
            done += k
        return acc, row

    advance(cfg.thermalization, 0, _EMPTY_S, _EMPTY_M, 0)
    n_samples = cfg.n_sweeps // cfg.interval
    out_s = np.empty((n_samples, n), dtype=np.int8)
    out_m = np.empty(n_samples, dtype=np.int64)
    acc, row = advance(cfg.n_sweeps, cfg.interval, out_s, out_m, 0)
    out_s, out_m = out_s[:row], out_m[:row]
    if not np.all(out_m == 0):
        raise RuntimeError("MH magnetization conservation violated; kernel bug")
    return SpinChain(
        kind="mh",
        samples=out_s,
        magnetizations=out_m,
        sweep_indices=(np.arange(row, dtype=np.int64) + 1) * cfg.interval,
        interval=cfg.interval,
        n_sweeps=cfg.n_sweeps,
        seed=cfg.seed,
        acceptance_rate=acc / (cfg.n_sweeps * n),
    )


def run_sim_chain(model: RbmModel, cfg: ChainConfig, record_hidden: bool = False,
                  chain_index: int = 0) -> SpinChain:
    """Run one sIM chain from a uniformly random joint state; unfiltered."""
    rng = chain_rng(cfg.seed, STREAM_SIM, chain_index)
    n, M = model.n, model.M
    x = np.where(rng.random(M) < 0.5, 1, -1).astype(np.int8)
    s = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
    W, b = model.W, model.b

    def advance(n_sweeps: int, store_every: int, out_s, out_m, out_x, row: int):
        done = 0
        fh = fv = 0
        chunk = store_every * max(1, _CHUNK_SWEEPS // max(store_every, 1)) if store_every else _CHUNK_SWEEPS
        while done < n_sweeps:
            k = min(chunk, n_sweeps - done)
            u = rng.random((k, M + n))
            h, v, row = _kernels.sim_sweeps(W, b, x, s, u, store_every, out_s, out_m,
                                            out_x, record_hidden, row)
            fh += h
            fv += v
            done += k
        return fh, fv, row

    advance(cfg.thermalization, 0, _EMPTY_S, _EMPTY_M, _EMPTY_S, 0)
    n_samples = cfg.n_sweeps // cfg.interval
    out_s = np.empty((n_samples, n), dtype=np.int8)
    out_m = np.empty(n_samples, dtype=np.int64)
    out_x = np.empty((n_samples, M), dtype=np.int8) if record_hidden else _EMPTY_S
    fh, fv, row = advance(cfg.n_sweeps, cfg.interval, out_s, out_m, out_x, 0)
    return SpinChain(
        kind="sim",
        samples=out_s[:row],
        magnetizations=out_m[:row],
        sweep_indices=(np.arange(row, dtype=np.int64) + 1) * cfg.interval,
        interval=cfg.interval,
        n_sweeps=cfg.n_sweeps,
        seed=cfg.seed,
        hidden_flip_rate=fh / (cfg.n_sweeps * M),
        visible_flip_rate=fv / (cfg.n_sweeps * n),
        hidden=out_x[:row] if record_hidden else None,
    )


def run_chain(kind: str, model: RbmModel, lattice: SquareLattice | None,
              cfg: ChainConfig, **kwargs) -> SpinChain:
    if kind == "mh":
        if lattice is None:
            raise ValueError("MH chains need the lattice for the initial state")
        return run_mh_chain(model, lattice, cfg, **kwargs)
    if kind == "sim":
        return run_sim_chain(model, cfg, **kwargs)
    raise ValueError(f"unknown chain kind {kind!r}")


def run_chains(kind: str, model: RbmModel, lattice: SquareLattice | None,
               cfg: ChainConfig, n_chains: int, threads: int = 1,
               index_offset: int = 0, **kwargs) -> list[SpinChain]:
    """Fan n_chains out over a thread pool; chain k gets stream index
    index_offset + k, so different purposes can share one master seed by
    claiming disjoint index blocks. Results come back in chain order
    regardless of completion order."""
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")

    def one(k: int) -> SpinChain:
        return run_chain(kind, model, lattice, cfg, chain_index=index_offset + k, **kwargs)

    if threads <= 1 or n_chains == 1:
        return [one(k) for k in range(n_chains)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(n_chains)))


def filter_magnetization_zero(chain: SpinChain) -> tuple[SpinChain, float]:
    """Keep only magnetization-0 samples; n_sweeps metadata stays unfiltered."""
    if chain.kind != "sim":
        raise ValueError("filtering applies to sIM chains; MH chains never leave the sector")
    keep = chain.magnetizations == 0
    fraction = float(keep.mean()) if len(chain) else 0.0
    if not np.any(keep):
        raise ValueError("no magnetization-0 samples in chain")
    filtered = SpinChain(
        kind=chain.kind,
        samples=chain.samples[keep],
        magnetizations=chain.magnetizations[keep],
        sweep_indices=chain.sweep_indices[keep],
        interval=chain.interval,
        n_sweeps=chain.n_sweeps,
        seed=chain.seed,
        acceptance_rate=chain.acceptance_rate,
        hidden_flip_rate=chain.hidden_flip_rate,
        visible_flip_rate=chain.visible_flip_rate,
        hidden=chain.hidden[keep] if chain.hidden is not None else None,
    )
    return filtered, fraction


def pack_spins(spins: np.ndarray) -> str:
    """Hex encoding of a +-1 configuration: site 0 is the most significant
    bit, +1 maps to 1, zero-padded to ceil(n/4) digits."""
    bits = "".join("1" if v > 0 else "0" for v in spins)
    width = (len(spins) + 3) // 4
    return format(int(bits, 2), f"0{width}x")


def unpack_spins(packed: str, n: int) -> np.ndarray:
    bits = format(int(packed, 16), f"0{n}b")
    if len(bits) > n:
        raise ValueError(f"packed value has more than {n} bits")
    return np.array([1 if c == "1" else -1 for c in bits], dtype=np.int8)


def write_chain_csv(chain: SpinChain, path, extra_comments: dict | None = None) -> None:
    """CSV per the chain-file contract; leading `# key=value` comment lines
    carry kind/interval/seed metadata (and the manifest hash when run from the
    CLI) without touching the column schema."""
    meta = {
        "kind": chain.kind,
        "n": chain.samples.shape[1],
        "interval": chain.interval,
        "n_sweeps": chain.n_sweeps,
        "seed": chain.seed,
    }
    if extra_comments:
        meta.update(extra_comments)
    with open(path, "w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}={v}\n")
        writer = csv.writer(fh)
        writer.writerow(["sweep_index", "magnetization", "packed_spins"])
        for idx, mag, row in zip(chain.sweep_indices, chain.magnetizations, chain.samples):
            writer.writerow([int(idx), int(mag), pack_spins(row)])


def read_chain_csv(path) -> SpinChain:
    meta: dict[str, str] = {}
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
                continue
            rows.append(line)
    reader = csv.reader(rows)
    header = next(reader)
    if header != ["sweep_index", "magnetization", "packed_spins"]:
        raise ValueError(f"unexpected chain header {header}")
    n = int(meta["n"])
    idx, mags, samples = [], [], []
    for rec in reader:
        idx.append(int(rec[0]))
        mags.append(int(rec[1]))
        samples.append(unpack_spins(rec[2], n))
    return SpinChain(
        kind=meta.get("kind", "mh"),
        samples=np.array(samples, dtype=np.int8).reshape(len(samples), n),
        magnetizations=np.array(mags, dtype=np.int64),
        sweep_indices=np.array(idx, dtype=np.int64),
        interval=int(meta.get("interval", 1)),
        n_sweeps=int(meta.get("n_sweeps", idx[-1] if idx else 0)),
        seed=int(meta.get("seed", 0)),
    )
