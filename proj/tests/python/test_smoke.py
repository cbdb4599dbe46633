import itertools

import numpy as np
import pytest

import symflow


def test_mlp_matches_numpy():
    rng = np.random.default_rng(0)
    sizes = [3, 5, 2]
    params = rng.normal(size=symflow.mlp_param_count(sizes))
    x = rng.normal(size=3)
    w1 = params[:15].reshape(5, 3)
    b1 = params[15:20]
    w2 = params[20:30].reshape(2, 5)
    b2 = params[30:32]
    expected = w2 @ np.tanh(w1 @ x + b1) + b2
    np.testing.assert_allclose(symflow.mlp_apply(sizes, "tanh", params, x), expected, atol=1e-12)
    grad = symflow.mlp_gradient(sizes, "tanh", params, x, np.ones(2))
    assert grad.shape == params.shape


def test_shape_errors_raise():
    with pytest.raises(ValueError):
        symflow.mlp_apply([3, 2], "tanh", np.zeros(8), np.zeros(4))
    with pytest.raises(symflow.ConfigError):
        symflow.train({"system": "pendulum"})


def test_circular_shift_and_sign_match():
    x = np.sin(np.linspace(0, 6, 40))
    assert symflow.best_circular_shift(np.roll(x, 7), x) == 7
    target, element = symflow.sign_flip_match(np.array([-1.0, -2.0]), np.array([1.0, 2.0]))
    np.testing.assert_array_equal(target, [-1.0, -2.0])
    assert element == 1


def test_metrics():
    assert symflow.wasserstein_1d(np.zeros(100), [1.0, -1.0]) == pytest.approx(1.0)
    w = symflow.wasserstein_assignment(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([[0.0, 1.0], [1.0, 1.0]]))
    assert w == pytest.approx(0.5)
    cost = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
    best = min(sum(cost[i, p[i]] for i in range(3)) for p in itertools.permutations(range(3)))
    got = symflow.hungarian(cost)
    assert sum(cost[i, got[i]] for i in range(3)) == pytest.approx(best)


def test_solvers():
    u = symflow.solve_allen_cahn(epsilon=0.1, mu=1.0, seed=3)
    assert u.shape == (11, 200)
    assert abs(abs(u[-1].mean()) - 1.0) < 0.05
    out = symflow.solve_beam([1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0], seed=1, steps=50)
    assert len(out["d"]) == 50
    assert out["direction"] in (-1, 1)


def test_dataset_and_training_round_trip(tmp_path):
    data = symflow.build_dataset("coin_flip", 100, 0)
    assert data["inputs"].shape == (100, 1)
    assert len(data["train"]) == 80
    config = {
        "system": "coin_flip",
        "training": {"epochs": 50, "batch_size": 32},
        "eval": {"max_records": 10, "n_pred": 50},
    }
    model = symflow.train(config)
    assert model.system == "coin_flip"
    assert model.trained_steps > 0
    assert model.config_hash == symflow.config_hash(config)
    preds = model.predict(np.array([20.0]), n=30, seed=1)
    assert preds.shape == (30, 1)
    path = tmp_path / "m.ckpt.json"
    model.save(str(path))
    again = symflow.load_model(str(path))
    np.testing.assert_array_equal(again.predict(np.array([20.0]), n=30, seed=1), preds)
    report = symflow.evaluate(again, config)
    assert len(report["records"]) == 10
    assert report["mean"] >= 0.0
