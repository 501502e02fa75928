import math

import numpy as np
import pytest

from gprwall.sparsenn import (
    HC_BETA,
    HC_GAMMA,
    HC_ZETA,
    SparseNN,
    TrainConfig,
    deterministic_gate,
    expected_l0,
    loss_and_grads,
    sample_gate,
)


# --- gate math ---------------------------------------------------------------


def test_expected_l0_at_zero():
    # sigmoid((2/3) * ln 11) = 0.8318 to 4 decimals
    assert expected_l0(0.0) == pytest.approx(0.83182, abs=5e-6)
    analytic = 1.0 / (1.0 + math.exp(-(2.0 / 3.0) * math.log(11.0)))
    assert expected_l0(0.0) == pytest.approx(analytic, abs=1e-15)


def test_expected_l0_monotone_and_bounded():
    la = np.linspace(-8, 8, 101)
    p = expected_l0(la)
    assert (np.diff(p) > 0).all()
    assert (p > 0).all() and (p < 1).all()


def test_deterministic_gate_saturations():
    assert deterministic_gate(0.0) == pytest.approx(0.5, abs=1e-15)
    assert deterministic_gate(50.0) == 1.0
    assert deterministic_gate(-50.0) == 0.0
    # closure threshold: sigmoid(la) * (zeta - gamma) + gamma crosses zero at
    # la = ln(-gamma / (zeta + gamma)) = ln(1/11)
    thresh = math.log(1.0 / 11.0)
    assert deterministic_gate(thresh - 1e-6) == 0.0
    assert deterministic_gate(thresh + 1e-6) > 0.0


def test_sample_gate_bounds_and_validation():
    rng = np.random.default_rng(0)
    la = rng.normal(size=50)
    u = rng.uniform(1e-6, 1 - 1e-6, 50)
    z = sample_gate(la, u)
    assert ((z >= 0.0) & (z <= 1.0)).all()
    with pytest.raises(ValueError, match="strictly inside"):
        sample_gate(0.0, 0.0)
    with pytest.raises(ValueError, match="strictly inside"):
        sample_gate(0.0, 1.0)


def test_sample_gate_monotone_in_noise():
    u = np.linspace(0.01, 0.99, 200)
    z = sample_gate(np.zeros_like(u), u)
    assert (np.diff(z) >= 0).all()


def test_expected_l0_matches_monte_carlo():
    rng = np.random.default_rng(7)
    for la in (-2.0, 0.0, 2.0):
        u = rng.uniform(1e-12, 1 - 1e-12, 200_000)
        frac_open = float((sample_gate(la, u) > 0.0).mean())
        assert frac_open == pytest.approx(float(expected_l0(la)), abs=1e-2)


# --- loss and gradients --------------------------------------------------


def _zeroed_params(d=3, h=2):
    return {
        "W0": np.zeros((d, h)),
        "b0": np.zeros(h),
        "W1": np.zeros((h, 1)),
        "b1": np.zeros(1),
        "log_alpha": np.zeros((d, h)),
    }


def test_loss_closed_form_at_zero_weights():
    # all-zero weights give logit 0 for every row: BCE is exactly log 2 and
    # the penalty is lambda * (d*h) * P(z>0 | log_alpha=0)
    params = _zeroed_params()
    X = np.arange(12.0).reshape(4, 3)
    y = np.array([0, 1, 1, 0])
    u = np.full((3, 2), 0.5)
    lam = 0.01
    loss, grads = loss_and_grads(params, X, y, u, lam)
    assert loss == pytest.approx(math.log(2.0) + lam * 6 * float(expected_l0(0.0)), abs=1e-12)
    # output-bias gradient is mean(sigmoid(0) - y)
    assert grads["b1"][0] == pytest.approx(float(np.mean(0.5 - y)), abs=1e-15)
    # zero first-layer weights block any signal into log_alpha except the
    # penalty term
    pi = float(expected_l0(0.0))
    assert np.allclose(grads["log_alpha"], lam * pi * (1.0 - pi), atol=1e-15)


def _fd_grads(params, X, y, u, lam, h=1e-6):
    out = {}
    for k, v in params.items():
        g = np.zeros_like(v)
        flat = v.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp, _ = loss_and_grads(params, X, y, u, lam)
            flat[i] = orig - h
            lm, _ = loss_and_grads(params, X, y, u, lam)
            flat[i] = orig
            gflat[i] = (lp - lm) / (2.0 * h)
        out[k] = g
    return out


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(8, 3))
    y = rng.integers(0, 2, 8)
    params = {
        "W0": rng.normal(0.0, 0.8, (3, 4)),
        "b0": rng.normal(0.0, 0.1, 4),
        "W1": rng.normal(0.0, 0.8, (4, 1)),
        "b1": rng.normal(0.0, 0.1, 1),
        "log_alpha": rng.normal(0.0, 0.01, (3, 4)),
    }
    # noise away from the clip saturations keeps the loss smooth around the
    # probe point
    u = rng.uniform(0.3, 0.7, (3, 4))
    _, analytic = loss_and_grads(params, X, y, u, 1e-3)
    numeric = _fd_grads(params, X, y, u, 1e-3)
    for k in params:
        err = np.linalg.norm(analytic[k] - numeric[k]) / max(np.linalg.norm(numeric[k]), 1e-12)
        assert err < 1e-4, f"{k}: relative gradient error {err:.2e}"


# --- training ----------------------------------------------------------------


def _toy_task(n=120, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 6))
    y = (X[:, 1] - X[:, 4] > 0).astype(np.int64)
    return X, y


def test_fit_learns_and_prunes():
    X, y = _toy_task()
    net = SparseNN((8,)).fit(
        X, y, TrainConfig(lambda_reg=3e-2, epochs=600, gate_learning_rate=5e-3, seed=0)
    )
    assert float((net.predict(X) == y).mean()) > 0.9
    active = set(net.active_features().tolist())
    assert {1, 4} <= active
    assert len(active) < 6
    proba = net.predict_proba(X)
    assert ((proba >= 0.0) & (proba <= 1.0)).all()
    assert len(net.history_["loss"]) == 600
    assert net.history_["n_active"].dtype.kind == "i"


def test_fit_deterministic_per_seed():
    X, y = _toy_task(60, seed=1)
    cfg = TrainConfig(epochs=30, seed=5)
    a = SparseNN((4,)).fit(X, y, cfg)
    b = SparseNN((4,)).fit(X, y, cfg)
    c = SparseNN((4,)).fit(X, y, TrainConfig(epochs=30, seed=6))
    for k in a.params_:
        assert np.array_equal(a.params_[k], b.params_[k])
    assert not all(np.array_equal(a.params_[k], c.params_[k]) for k in a.params_)


def test_fit_handles_constant_column():
    X, y = _toy_task(60, seed=2)
    X[:, 0] = 3.0
    net = SparseNN((4,)).fit(X, y, TrainConfig(epochs=20, seed=0))
    assert np.isfinite(net.history_["loss"]).all()


@pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
def test_divergence_raises():
    X, y = _toy_task(60, seed=3)
    with pytest.raises(RuntimeError, match="training diverged: non-finite loss at epoch"):
        SparseNN((4,)).fit(X, y, TrainConfig(epochs=10, learning_rate=1e200, seed=0))


def test_fit_input_validation():
    net = SparseNN((4,))
    with pytest.raises(ValueError, match="shape mismatch"):
        net.fit(np.zeros((5, 2)), np.zeros(4, dtype=np.int64))
    with pytest.raises(ValueError, match="binary"):
        net.fit(np.zeros((4, 2)), np.array([0, 1, 2, 1]))
    with pytest.raises(ValueError, match="hidden"):
        SparseNN(())
    with pytest.raises(ValueError, match="hidden"):
        SparseNN((4, 0))


def test_config_validation():
    with pytest.raises(ValueError, match="lambda_reg"):
        TrainConfig(lambda_reg=-1e-3)
    with pytest.raises(ValueError, match="positive"):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError, match="learning_rate must be positive"):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError, match="gate_learning_rate must be positive"):
        TrainConfig(gate_learning_rate=-1.0)


# --- persistence -------------------------------------------------------------


def test_save_load_round_trip(tmp_path):
    X, y = _toy_task(80, seed=4)
    net = SparseNN((5,)).fit(
        X, y, TrainConfig(epochs=50, seed=1, gate_learning_rate=2e-3, lambda_reg=1e-4)
    )
    path = net.save(tmp_path / "model.json")
    back = SparseNN.load(path)
    assert back.hidden == (5,)
    assert back.config == net.config
    assert np.array_equal(back.predict_proba(X), net.predict_proba(X))
    assert np.array_equal(back.active_features(), net.active_features())


def test_load_rejects_other_files(tmp_path):
    p = tmp_path / "other.json"
    p.write_text('{"kind": "forest"}')
    with pytest.raises(ValueError, match="not a sparsenn model file"):
        SparseNN.load(p)
