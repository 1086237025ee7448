import numpy as np
import pytest

from ising_nqs.heisenberg import build_lattice, magnetization, neel_state
from ising_nqs.ising import map_rbm_to_ising
from ising_nqs.rbm import random_model
from ising_nqs.samplers import (
    ChainConfig,
    MhState,
    chain_rng,
    filter_magnetization_zero,
    mh_sweep,
    pack_spins,
    read_chain_csv,
    run_chain,
    run_chains,
    run_mh_chain,
    run_sim_chain,
    sim_sweep,
    unpack_spins,
    write_chain_csv,
)


def test_chain_rng_streams_distinct_and_reproducible():
    a = chain_rng(1, 0, 0).random(4)
    b = chain_rng(1, 0, 0).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, chain_rng(1, 1, 0).random(4))
    assert not np.array_equal(a, chain_rng(1, 0, 1).random(4))
    assert not np.array_equal(a, chain_rng(2, 0, 0).random(4))


def _model44(seed=0, scale=0.2, alpha=2):
    lat = build_lattice(4)
    return random_model(lat.n, alpha, chain_rng(seed, 0, 0), scale=scale), lat


def test_mh_conserves_magnetization():
    model, lat = _model44()
    cfg = ChainConfig(n_sweeps=300, thermalization=50, interval=1, seed=5)
    chain = run_mh_chain(model, lat, cfg)
    assert chain.samples.shape == (300, 16)
    assert np.all(chain.magnetizations == 0)
    assert np.all(chain.samples.sum(axis=1) == 0)
    assert 0.0 < chain.acceptance_rate < 1.0


def test_mh_neighbor_proposal_variant():
    model, lat = _model44(seed=1)
    cfg = ChainConfig(n_sweeps=200, thermalization=50, interval=1, seed=6)
    chain = run_mh_chain(model, lat, cfg, proposal="neighbor")
    assert np.all(chain.samples.sum(axis=1) == 0)
    with pytest.raises(ValueError):
        run_mh_chain(model, lat, cfg, proposal="bogus")


def test_mh_interval_is_pure_decimation():
    """Storing every k-th sweep must reproduce exactly the states of the
    interval-1 chain at those sweeps: the kernel consumes the same uniforms."""
    model, lat = _model44(seed=2)
    dense = run_mh_chain(model, lat, ChainConfig(n_sweeps=120, thermalization=30,
                                                 interval=1, seed=7))
    sparse = run_mh_chain(model, lat, ChainConfig(n_sweeps=120, thermalization=30,
                                                  interval=4, seed=7))
    np.testing.assert_array_equal(sparse.samples, dense.samples[3::4])
    np.testing.assert_array_equal(sparse.sweep_indices, dense.sweep_indices[3::4])


def test_sim_chain_shapes_and_flip_rates():
    model, _ = _model44(seed=3)
    cfg = ChainConfig(n_sweeps=400, thermalization=100, interval=1, seed=8)
    chain = run_sim_chain(model, cfg, record_hidden=True)
    assert chain.samples.shape == (400, 16)
    assert chain.hidden.shape == (400, 32)
    assert 0.0 < chain.hidden_flip_rate < 1.0
    assert 0.0 < chain.visible_flip_rate < 1.0
    # magnetization column matches the samples
    np.testing.assert_array_equal(chain.magnetizations, chain.samples.sum(axis=1))


def test_sim_magnetization_filter():
    model, _ = _model44(seed=4)
    cfg = ChainConfig(n_sweeps=500, thermalization=100, interval=1, seed=9)
    chain = run_sim_chain(model, cfg)
    filtered, fraction = filter_magnetization_zero(chain)
    assert 0.0 < fraction < 1.0
    assert np.all(filtered.magnetizations == 0)
    assert filtered.n_sweeps == 500  # metadata keeps the unfiltered count
    assert len(filtered) == round(fraction * 500)
    mh_chain = run_mh_chain(model, build_lattice(4), cfg)
    with pytest.raises(ValueError):
        filter_magnetization_zero(mh_chain)


def test_public_single_sweep_ops():
    model, lat = _model44(seed=5)
    state = MhState.from_spins(model, neel_state(lat))
    rng = chain_rng(10, 1, 0)
    for _ in range(20):
        mh_sweep(model, state, rng)
        assert magnetization(state.spins) == 0
    ising = map_rbm_to_ising(model)
    m = np.concatenate([np.ones(model.M, dtype=np.int8), neel_state(lat)])
    rng2 = chain_rng(11, 2, 0)
    for _ in range(5):
        m = sim_sweep(ising, m, rng2)
        assert m.shape == (model.M + model.n,)
        assert set(np.unique(m)).issubset({-1, 1})


def test_run_chains_deterministic_order():
    model, lat = _model44(seed=6)
    cfg = ChainConfig(n_sweeps=50, thermalization=10, interval=1, seed=12)
    serial = run_chains("mh", model, lat, cfg, 3, threads=1)
    threaded = run_chains("mh", model, lat, cfg, 3, threads=3)
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a.samples, b.samples)
    offset = run_chains("mh", model, lat, cfg, 1, index_offset=2)[0]
    np.testing.assert_array_equal(offset.samples, serial[2].samples)


def test_run_chain_dispatch():
    model, lat = _model44(seed=7)
    cfg = ChainConfig(n_sweeps=20, thermalization=5, interval=1, seed=13)
    assert run_chain("mh", model, lat, cfg).kind == "mh"
    assert run_chain("sim", model, None, cfg).kind == "sim"
    with pytest.raises(ValueError):
        run_chain("mh", model, None, cfg)
    with pytest.raises(ValueError):
        run_chain("exact", model, lat, cfg)


def test_pack_unpack_spins():
    spins = np.array([1, -1, -1, 1, 1, 1, -1, -1, 1], dtype=np.int8)  # n=9
    packed = pack_spins(spins)
    assert len(packed) == 3  # ceil(9/4) hex digits
    np.testing.assert_array_equal(unpack_spins(packed, 9), spins)
    # site 0 is the most significant bit
    assert pack_spins(np.array([1, -1, -1, -1], dtype=np.int8)) == "8"
    assert pack_spins(np.array([-1, -1, -1, 1], dtype=np.int8)) == "1"


def test_chain_csv_roundtrip(tmp_path):
    model, lat = _model44(seed=8)
    cfg = ChainConfig(n_sweeps=40, thermalization=10, interval=2, seed=14)
    chain = run_mh_chain(model, lat, cfg)
    path = tmp_path / "chain.csv"
    write_chain_csv(chain, path, extra_comments={"manifest": "abc123"})
    text = path.read_text()
    assert "# manifest=abc123" in text
    assert "sweep_index,magnetization,packed_spins" in text
    back = read_chain_csv(path)
    np.testing.assert_array_equal(back.samples, chain.samples)
    np.testing.assert_array_equal(back.sweep_indices, chain.sweep_indices)
    np.testing.assert_array_equal(back.magnetizations, chain.magnetizations)
    assert back.interval == 2


def test_mh_rejects_nonzero_start():
    model, _ = _model44(seed=9)
    bad = np.ones(16, dtype=np.int8)
    with pytest.raises(ValueError):
        MhState.from_spins(model, bad)
