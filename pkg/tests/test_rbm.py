import json

import numpy as np
import pytest

from ising_nqs.rbm import (
    RbmModel,
    ThetaCache,
    apply_flips,
    load_model,
    log2cosh,
    log_derivatives,
    log_derivatives_batch,
    log_psi,
    log_psi_batch,
    pack_parameters,
    psi_ratio,
    random_model,
    save_model,
    unpack_parameters,
)
from ising_nqs.samplers import chain_rng


def _spins(rng, n):
    return np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)


def test_log2cosh_stable_and_correct():
    t = np.array([0.0, 1e-3, 2.0, -2.0, 50.0, -50.0, 800.0, -800.0])
    got = log2cosh(t)
    # large |t|: log(2 cosh t) -> |t|; moderate values: direct formula
    direct = np.log(2.0 * np.cosh(t[:6]))
    np.testing.assert_allclose(got[:6], direct, rtol=1e-12)
    assert np.isfinite(got).all()
    np.testing.assert_allclose(got[6:], np.abs(t[6:]), rtol=1e-15)


def test_model_validation():
    rng = chain_rng(0, 0, 0)
    with pytest.raises(ValueError):
        RbmModel(n=4, M=7, alpha=2, W=np.zeros((4, 8)), b=np.zeros(8))
    with pytest.raises(ValueError):
        RbmModel(n=4, M=8, alpha=2, W=np.zeros((4, 7)), b=np.zeros(8))
    m = random_model(4, 2, rng)
    assert m.n_parameters == 4 * 8 + 8
    with pytest.raises(ValueError):
        m.W[0, 0] = 1.0  # read-only


def test_log_psi_matches_direct_sum():
    rng = chain_rng(1, 0, 0)
    model = random_model(6, 2, rng, scale=0.4)
    s = _spins(rng, 6)
    theta = model.b + s.astype(np.float64) @ model.W
    want = 0.5 * np.sum(np.log(2.0 * np.cosh(theta)))
    assert log_psi(model, s) == pytest.approx(want, rel=1e-12)
    batch = log_psi_batch(model, np.stack([s, -s]))
    assert batch[0] == pytest.approx(want, rel=1e-12)


def test_theta_cache_incremental_updates():
    rng = chain_rng(2, 0, 0)
    model = random_model(8, 2, rng, scale=0.3)
    s = _spins(rng, 8)
    cache = ThetaCache.build(model, s)
    for flips in ([0], [1, 5], [2, 2], [7]):
        apply_flips(cache, s, flips)  # negates the listed spins in place too
        fresh = ThetaCache.build(model, s)
        np.testing.assert_allclose(cache.theta, fresh.theta, rtol=1e-12, atol=1e-14)


def test_psi_ratio_matches_log_psi_difference():
    rng = chain_rng(3, 0, 0)
    model = random_model(8, 3, rng, scale=0.5)
    s = _spins(rng, 8)
    cache = ThetaCache.build(model, s)
    flipped = s.copy()
    flipped[2] *= -1
    flipped[6] *= -1
    want = np.exp(log_psi(model, flipped) - log_psi(model, s))
    assert psi_ratio(model, cache, s, [2, 6]) == pytest.approx(want, rel=1e-12)


def test_log_derivatives_layout():
    """First M entries are bias derivatives 0.5 tanh(theta_j); the rest is the
    weight block in row-major (visible-major) order."""
    rng = chain_rng(4, 0, 0)
    model = random_model(4, 2, rng, scale=0.4)
    s = _spins(rng, 4)
    theta = model.b + s.astype(np.float64) @ model.W
    O = log_derivatives(model, s)
    assert O.shape == (model.n_parameters,)
    np.testing.assert_allclose(O[: model.M], 0.5 * np.tanh(theta), rtol=1e-12)
    W_block = O[model.M :].reshape(model.n, model.M)
    np.testing.assert_allclose(W_block, 0.5 * np.outer(s, np.tanh(theta)), rtol=1e-12)
    batch = log_derivatives_batch(model, s[None, :])
    np.testing.assert_allclose(batch[0], O, rtol=1e-12)


def test_pack_unpack_roundtrip():
    rng = chain_rng(5, 0, 0)
    model = random_model(6, 2, rng, scale=0.2)
    params = pack_parameters(model)
    back = unpack_parameters(params, 6, 2)
    np.testing.assert_array_equal(back.W, model.W)
    np.testing.assert_array_equal(back.b, model.b)


def test_save_load_roundtrip_exact(tmp_path):
    rng = chain_rng(6, 0, 0)
    model = random_model(16, 2, rng, scale=0.13)
    path = tmp_path / "model.json"
    save_model(model, path, L=4, J=1.0, rng_seed=6, training_meta={"note": "test"})
    back, meta = load_model(path)
    np.testing.assert_array_equal(back.W, model.W)  # bitwise via repr round-trip
    np.testing.assert_array_equal(back.b, model.b)
    assert meta["L"] == 4 and meta["J"] == 1.0 and meta["rng_seed"] == 6
    doc = json.loads(path.read_text())
    assert doc["schema_version"] == 1
    assert doc["alpha"] == 2
    assert len(doc["W"]) == 16 * 32


def test_load_rejects_inconsistent_file(tmp_path):
    rng = chain_rng(7, 0, 0)
    model = random_model(4, 1, rng)
    path = tmp_path / "model.json"
    save_model(model, path, L=2, J=1.0, rng_seed=7, training_meta={})
    doc = json.loads(path.read_text())
    doc["W"] = doc["W"][:-1]
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        load_model(path)
