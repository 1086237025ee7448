"""Shared fixtures. Trained models and full analyses are expensive (minutes
each on one core), so they are session-scoped and cached on disk under
ISING_NQS_TEST_CACHE (default /tmp/ising_nqs_test_cache). Delete that
directory for a fully cold run; everything is deterministic either way.
"""
import os
import pickle
import sys
from pathlib import Path

import numpy as np
import pytest

from ising_nqs import analysis
from ising_nqs.heisenberg import SquareLattice, build_lattice
from ising_nqs.oracle import exact_ground_energy, exact_variational_energy, ring_bonds
from ising_nqs.trainer import TrainConfig, train

CACHE_DIR = Path(os.environ.get("ISING_NQS_TEST_CACHE", "/tmp/ising_nqs_test_cache"))

TRAIN_SEEDS = (1, 2, 3, 4, 5)
TRAIN_ITERS_44 = 500
TRAIN_ITERS_44_A4 = 600
TRAIN_ITERS_66 = 300

_CAPMAN = None


def pytest_configure(config):
    global _CAPMAN
    _CAPMAN = config.pluginmanager.getplugin("capturemanager")


def _status(msg: str) -> None:
    # suspend fd-level capture so long fixture builds show progress in the log
    if _CAPMAN is not None:
        with _CAPMAN.global_and_fixture_disabled():
            print(msg, flush=True)
    else:
        print(msg, file=sys.__stdout__, flush=True)


@pytest.fixture
def report_line():
    """Emit a line that reaches the real terminal even while capture is on;
    the acceptance tests use it for their verdict lines."""
    return _status


def _cached(key: str, builder):
    CACHE_DIR.mkdir(parents=True, exist_ok=True)
    path = CACHE_DIR / f"{key}.pkl"
    if path.exists():
        with path.open("rb") as fh:
            return pickle.load(fh)
    value = builder()
    tmp = path.with_suffix(".tmp")
    with tmp.open("wb") as fh:
        pickle.dump(value, fh)
    tmp.replace(path)
    return value


@pytest.fixture(scope="session")
def lat4():
    return build_lattice(4)


@pytest.fixture(scope="session")
def lat6():
    return build_lattice(6)


@pytest.fixture(scope="session")
def tiny_lat4():
    """4-spin stand-in so the MH sampler can run on exhaustively enumerable
    models; built directly because the public constructor requires L >= 4.
    Global pair proposals never touch bonds or neighbors."""
    neighbors = np.array([[1, 3, 1, 3], [0, 2, 0, 2], [1, 3, 1, 3], [0, 2, 0, 2]],
                         dtype=np.int64)
    return SquareLattice(L=2, n=4, bonds=ring_bonds(4), neighbors=neighbors)


def _train_one(lattice, alpha, iterations, seed):
    cfg = TrainConfig.for_system(lattice.n, alpha, iterations, seed)
    model, history = train(lattice, alpha, 1.0, cfg)
    return model, history


@pytest.fixture(scope="session")
def trained44_replicas(lat4):
    """Five independently seeded 4x4 alpha=2 models plus their relative errors
    against the exact ground energy."""
    exact = exact_ground_energy(lat4).ground_energy

    def build():
        out = []
        for seed in TRAIN_SEEDS:
            _status(f"[fixture] training 4x4 alpha=2 seed {seed} "
                    f"({TRAIN_ITERS_44} iterations)...")
            model, history = _train_one(lat4, 2, TRAIN_ITERS_44, seed)
            e_var = exact_variational_energy(model, lat4)
            rel = abs((e_var - exact) / exact)
            _status(f"[fixture]   relative error {rel:.2e}")
            out.append((model, rel, history.energy[-1]))
        return out

    return _cached(f"train44_a2_i{TRAIN_ITERS_44}", build)


@pytest.fixture(scope="session")
def model44(trained44_replicas):
    return trained44_replicas[0][0]


@pytest.fixture(scope="session")
def model44_a4(lat4):
    def build():
        _status(f"[fixture] training 4x4 alpha=4 ({TRAIN_ITERS_44_A4} iterations)...")
        model, _ = _train_one(lat4, 4, TRAIN_ITERS_44_A4, TRAIN_SEEDS[0])
        return model

    return _cached(f"train44_a4_i{TRAIN_ITERS_44_A4}", build)


@pytest.fixture(scope="session")
def model66(lat6):
    def build():
        _status(f"[fixture] training 6x6 alpha=2 ({TRAIN_ITERS_66} iterations)...")
        model, _ = _train_one(lat6, 2, TRAIN_ITERS_66, TRAIN_SEEDS[0])
        return model

    return _cached(f"train66_a2_i{TRAIN_ITERS_66}", build)


@pytest.fixture(scope="session")
def analysis44(model44, lat4):
    def build():
        _status("[fixture] full analysis of the trained 4x4 model...")
        return analysis.analyze_model(model44, lat4, 1.0, 2, seed=21)

    return _cached(f"analysis44_i{TRAIN_ITERS_44}_s21", build)


@pytest.fixture(scope="session")
def analysis66(model66, lat6):
    def build():
        _status("[fixture] full analysis of the trained 6x6 model...")
        return analysis.analyze_model(model66, lat6, 1.0, 2, seed=21)

    return _cached(f"analysis66_i{TRAIN_ITERS_66}_s21", build)
