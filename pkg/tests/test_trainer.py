import numpy as np
import pytest

from ising_nqs.errors import NumericalError
from ising_nqs.heisenberg import build_lattice
from ising_nqs.rbm import pack_parameters, random_model, unpack_parameters
from ising_nqs.samplers import chain_rng
from ising_nqs.trainer import (
    PRESETS,
    TrainConfig,
    force_vector,
    preset_for,
    regularization_shift,
    solve_shift,
    sr_matrix,
    sr_step,
    train,
    write_history_csv,
)


def test_preset_table():
    assert preset_for(16, 1) == "low"
    assert preset_for(16, 8) == "low"
    assert preset_for(100, 4) == "low"
    assert preset_for(144, 2) == "low"
    assert preset_for(144, 8) == "high"
    assert preset_for(256, 2) == "high"
    assert preset_for(484, 4) == "high"
    for n, alpha in ((144, 5), (256, 1), (484, 8), (18, 2)):
        with pytest.raises(ValueError):
            preset_for(n, alpha)


def test_preset_values():
    assert PRESETS["low"] == {"n_samples": 2000, "eps": 1e-4, "decay_b": 0.9,
                              "eps0": 100.0}
    assert PRESETS["high"] == {"n_samples": 10000, "eps": 1e-3, "decay_b": 0.85,
                               "eps0": 10.0}


def test_regularization_shift_decay():
    # eps0 * b^p until it crosses eps, then the floor
    assert regularization_shift(0, eps=1e-4, eps0=100.0, decay_b=0.9) == 100.0
    assert regularization_shift(2, eps=1e-4, eps0=100.0, decay_b=0.9) == pytest.approx(81.0)
    assert regularization_shift(10**4, eps=1e-4, eps0=100.0, decay_b=0.9) == 1e-4


def test_sr_matrix_and_force():
    O = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    E = np.array([1.0, 2.0, 3.0, 4.0])
    S = sr_matrix(O)
    Obar = O.mean(axis=0)
    want_S = O.T @ O / 4.0 - np.outer(Obar, Obar)
    np.testing.assert_allclose(S, want_S, atol=1e-14)
    F = force_vector(O, E)
    want_F = O.T @ E / 4.0 - E.mean() * Obar
    np.testing.assert_allclose(F, want_F, atol=1e-14)


def test_solve_shift_matches_dense_solve():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(6, 6))
    S = A @ A.T + 0.5 * np.eye(6)
    F = rng.normal(size=6)
    x = solve_shift(S, F)
    np.testing.assert_allclose(x, np.linalg.solve(S, F), rtol=1e-10)


def test_solve_shift_raises_on_bad_matrix():
    S = np.array([[1.0, 2.0], [2.0, 1.0]])  # indefinite
    with pytest.raises(NumericalError):
        solve_shift(S, np.ones(2))


def test_sr_step_moves_parameters_downhill():
    rng = chain_rng(0, 0, 0)
    model = random_model(4, 1, rng, scale=0.1)
    B = 64
    O = rng.normal(size=(B, model.n_parameters))
    E = rng.normal(size=B) + O[:, 0]  # parameter 0 correlates with energy
    new_model, info = sr_step(model, O, E, p=10**6, eta=0.01)
    delta = pack_parameters(new_model) - pack_parameters(model)
    assert np.any(delta != 0.0)
    assert info["grad_norm"] > 0.0
    assert info["eps_p"] == pytest.approx(1e-4)
    # parameter 0 must move against its positive energy correlation
    assert delta[0] < 0.0


def test_train_smoke_and_history(tmp_path):
    lat = build_lattice(4)
    cfg = TrainConfig(iterations=3, seed=2, preset="low", n_samples=100,
                      thermalization=20)
    model, history = train(lat, 1, 1.0, cfg)
    assert model.n == 16 and model.M == 16
    assert len(history) == 3
    assert np.all(np.isfinite(history.energy))
    np.testing.assert_allclose(history.eps_p, [100.0, 90.0, 81.0])
    path = tmp_path / "history.csv"
    write_history_csv(history, path, extra_comments={"manifest": "m"})
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "# manifest=m"
    assert lines[1] == "iter,energy,variance,eps_p,grad_norm"
    assert len(lines) == 5


def test_train_is_deterministic():
    lat = build_lattice(4)
    cfg = TrainConfig(iterations=2, seed=3, preset="low", n_samples=80,
                      thermalization=10)
    m1, h1 = train(lat, 1, 1.0, cfg)
    m2, h2 = train(lat, 1, 1.0, cfg)
    np.testing.assert_array_equal(m1.W, m2.W)
    np.testing.assert_array_equal(m1.b, m2.b)
    assert h1.energy == h2.energy


def test_sr_step_divergence_guard():
    # an absurd learning rate overflows the update; the step must surface a
    # numerical failure instead of handing back a non-finite model
    model = random_model(4, 1, chain_rng(4, 0, 9), scale=0.1)
    rng = np.random.default_rng(0)
    O = rng.normal(size=(64, model.n_parameters))
    E = 100.0 * rng.normal(size=64)
    with pytest.raises(NumericalError):
        sr_step(model, O, E, p=200, eta=1e308)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(iterations=0, seed=1)
    with pytest.raises(ValueError):
        TrainConfig(iterations=10, seed=1, n_samples=1)
    cfg = TrainConfig.for_system(16, 2, 100, 1)
    assert cfg.preset == "low" and cfg.n_samples == 2000
    cfg = TrainConfig.for_system(256, 2, 100, 1, n_samples=500)
    assert cfg.preset == "high" and cfg.n_samples == 500 and cfg.eps == 1e-3
