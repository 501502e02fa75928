"""Feed-forward classifier with hard-concrete L0 gates on the input layer.

Every first-layer weight carries a stochastic gate z in [0, 1] drawn from the
hard-concrete distribution; the training loss adds ``lambda_reg`` times the
expected number of open gates, so the optimizer is paid to close input
connections it does not need.  An input feature counts as selected while any
of its deterministic (noise-free) gates is still open, which makes the final
network a feature-selection result as much as a classifier.

Gate math, with beta the concrete temperature and (gamma, zeta) the stretch:

    s      = sigmoid((log u - log(1 - u) + log_alpha) / beta)
    z      = clip(s * (zeta - gamma) + gamma, 0, 1)
    z_det  = clip(sigmoid(log_alpha) * (zeta - gamma) + gamma, 0, 1)
    P(z>0) = sigmoid(log_alpha - beta * log(-gamma / zeta))
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

HC_BETA = 2.0 / 3.0
HC_GAMMA = -0.1
HC_ZETA = 1.1

_U_EPS = 1e-10
_LOG_ALPHA_INIT = 0.0


def sample_gate(log_alpha, u):
    """Stochastic gate value for uniform noise ``u`` in the open interval (0, 1)."""
    log_alpha = np.asarray(log_alpha, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("gate noise u must lie strictly inside (0, 1)")
    s = expit((np.log(u) - np.log1p(-u) + log_alpha) / HC_BETA)
    return np.clip(s * (HC_ZETA - HC_GAMMA) + HC_GAMMA, 0.0, 1.0)


def deterministic_gate(log_alpha):
    """Noise-free gate used at evaluation time."""
    log_alpha = np.asarray(log_alpha, dtype=np.float64)
    return np.clip(expit(log_alpha) * (HC_ZETA - HC_GAMMA) + HC_GAMMA, 0.0, 1.0)


def expected_l0(log_alpha):
    """Probability that a gate is open, P(z > 0); the penalty is its sum."""
    log_alpha = np.asarray(log_alpha, dtype=np.float64)
    return expit(log_alpha - HC_BETA * np.log(-HC_GAMMA / HC_ZETA))


@dataclass(frozen=True)
class TrainConfig:
    lambda_reg: float = 1e-5
    epochs: int = 500
    learning_rate: float = 1e-3
    gate_learning_rate: float | None = None  # None: same as learning_rate
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.lambda_reg < 0.0:
            raise ValueError(f"lambda_reg must be >= 0, got {self.lambda_reg}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.gate_learning_rate is not None and self.gate_learning_rate <= 0.0:
            raise ValueError(f"gate_learning_rate must be positive, got {self.gate_learning_rate}")


def _gates_and_grad(log_alpha: np.ndarray, u: np.ndarray):
    """Sampled gates plus dz/dlog_alpha (zero where the clip saturates)."""
    s = expit((np.log(u) - np.log1p(-u) + log_alpha) / HC_BETA)
    stretched = s * (HC_ZETA - HC_GAMMA) + HC_GAMMA
    z = np.clip(stretched, 0.0, 1.0)
    interior = (stretched > 0.0) & (stretched < 1.0)
    dz = np.where(interior, s * (1.0 - s) * (HC_ZETA - HC_GAMMA) / HC_BETA, 0.0)
    return z, dz


def loss_and_grads(params: dict, X: np.ndarray, y: np.ndarray, u: np.ndarray, lambda_reg: float):
    """Full training loss (BCE + L0 penalty) and its exact gradients.

    ``params`` holds W0..W{L-1}, b0..b{L-1} and log_alpha (shaped like W0).
    ``u`` is one fixed noise draw per first-layer gate.  Kept as a pure
    function so finite-difference checks can probe the same code path the
    optimizer uses.
    """
    n_layers = sum(1 for k in params if k.startswith("W"))
    W = [params[f"W{i}"] for i in range(n_layers)]
    b = [params[f"b{i}"] for i in range(n_layers)]
    log_alpha = params["log_alpha"]
    n = X.shape[0]

    z, dz = _gates_and_grad(log_alpha, u)
    w0_eff = W[0] * z

    acts = [X]
    pre = X @ w0_eff + b[0]
    for i in range(1, n_layers):
        acts.append(np.maximum(pre, 0.0))
        pre = acts[-1] @ W[i] + b[i]
    logit = pre[:, 0]

    yf = y.astype(np.float64)
    bce = float(np.mean(np.logaddexp(0.0, logit) - yf * logit))
    pi = expected_l0(log_alpha)
    loss = bce + lambda_reg * float(pi.sum())

    grads: dict[str, np.ndarray] = {}
    delta = ((expit(logit) - yf) / n)[:, np.newaxis]
    for i in range(n_layers - 1, 0, -1):
        grads[f"W{i}"] = acts[i].T @ delta
        grads[f"b{i}"] = delta.sum(axis=0)
        delta = (delta @ W[i].T) * (acts[i] > 0.0)
    g_eff = acts[0].T @ delta
    grads["b0"] = delta.sum(axis=0)
    grads["W0"] = g_eff * z
    grads["log_alpha"] = g_eff * W[0] * dz + lambda_reg * pi * (1.0 - pi)
    return loss, grads


class SparseNN:
    """ReLU MLP with gated first layer and a logistic output unit."""

    def __init__(self, hidden: tuple[int, ...] = (8,)):
        hidden = tuple(int(h) for h in hidden)
        if not hidden or any(h < 1 for h in hidden):
            raise ValueError(f"hidden must be a non-empty tuple of positive widths, got {hidden}")
        self.hidden = hidden

    # -- training ----------------------------------------------------------

    def _init_params(self, n_features: int, rng: np.random.Generator) -> dict:
        widths = [n_features, *self.hidden, 1]
        params: dict[str, np.ndarray] = {}
        for i, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
            scale = np.sqrt(2.0 / fan_in) if i < len(widths) - 2 else np.sqrt(1.0 / fan_in)
            params[f"W{i}"] = rng.normal(0.0, scale, (fan_in, fan_out))
            params[f"b{i}"] = np.zeros(fan_out)
        params["log_alpha"] = rng.normal(_LOG_ALPHA_INIT, 0.01, (n_features, self.hidden[0]))
        return params

    def fit(self, X, y, config: TrainConfig | None = None):
        config = config or TrainConfig()
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("shape mismatch: X must be (n, d) with matching y")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be binary 0/1")
        self.config = config

        self.mu_ = X.mean(axis=0)
        sd = X.std(axis=0)
        self.sd_ = np.where(sd > 0.0, sd, 1.0)
        Xs = (X - self.mu_) / self.sd_

        rng = np.random.default_rng(config.seed)
        params = self._init_params(X.shape[1], rng)
        adam_m = {k: np.zeros_like(v) for k, v in params.items()}
        adam_v = {k: np.zeros_like(v) for k, v in params.items()}
        b1, b2, eps = 0.9, 0.999, 1e-8
        # Gates may move on their own schedule: the L0 penalty gradient is
        # orders of magnitude below the data-fit gradients at small
        # lambda_reg, and Adam's variance memory of the early (noisy) data
        # gradients otherwise stalls pruning long after the fit has settled.
        lr = {k: config.learning_rate for k in params}
        if config.gate_learning_rate is not None:
            lr["log_alpha"] = config.gate_learning_rate
        step = 0

        n = X.shape[0]
        history = {"loss": [], "train_accuracy": [], "n_active": []}
        for epoch in range(config.epochs):
            order = rng.permutation(n)
            epoch_loss = 0.0
            for start in range(0, n, config.batch_size):
                batch = order[start : start + config.batch_size]
                u = rng.uniform(_U_EPS, 1.0 - _U_EPS, params["log_alpha"].shape)
                loss, grads = loss_and_grads(params, Xs[batch], y[batch], u, config.lambda_reg)
                if not np.isfinite(loss):
                    raise RuntimeError(
                        f"training diverged: non-finite loss at epoch {epoch}, "
                        f"lambda_reg={config.lambda_reg}, learning_rate={config.learning_rate}"
                    )
                epoch_loss += loss * batch.size
                step += 1
                for k, g in grads.items():
                    adam_m[k] = b1 * adam_m[k] + (1.0 - b1) * g
                    adam_v[k] = b2 * adam_v[k] + (1.0 - b2) * g * g
                    m_hat = adam_m[k] / (1.0 - b1**step)
                    v_hat = adam_v[k] / (1.0 - b2**step)
                    params[k] = params[k] - lr[k] * m_hat / (np.sqrt(v_hat) + eps)
            self.params_ = params
            history["loss"].append(epoch_loss / n)
            history["train_accuracy"].append(float(np.mean(self._predict_std(Xs) == y)))
            history["n_active"].append(int(self.active_features().size))
        self.history_ = {k: np.asarray(v) for k, v in history.items()}
        return self

    # -- inference ---------------------------------------------------------

    def _logits_std(self, Xs: np.ndarray) -> np.ndarray:
        n_layers = len(self.hidden) + 1
        z = deterministic_gate(self.params_["log_alpha"])
        h = Xs @ (self.params_["W0"] * z) + self.params_["b0"]
        for i in range(1, n_layers):
            h = np.maximum(h, 0.0) @ self.params_[f"W{i}"] + self.params_[f"b{i}"]
        return h[:, 0]

    def _predict_std(self, Xs: np.ndarray) -> np.ndarray:
        return (self._logits_std(Xs) > 0.0).astype(np.int64)

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return expit(self._logits_std((X - self.mu_) / self.sd_))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(np.int64)

    def gates(self) -> np.ndarray:
        """Deterministic gate matrix, one row per input feature."""
        return deterministic_gate(self.params_["log_alpha"])

    def active_features(self) -> np.ndarray:
        """Indices of inputs with at least one open deterministic gate."""
        return np.flatnonzero((self.gates() > 0.0).any(axis=1))

    # -- persistence ---------------------------------------------------------

    def save(self, path) -> Path:
        path = Path(path)
        blob = {
            "kind": "sparsenn",
            "hidden": list(self.hidden),
            "config": asdict(self.config),
            "mu": self.mu_.tolist(),
            "sd": self.sd_.tolist(),
            "params": {k: v.tolist() for k, v in self.params_.items()},
        }
        path.write_text(json.dumps(blob, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, path) -> "SparseNN":
        blob = json.loads(Path(path).read_text())
        if blob.get("kind") != "sparsenn":
            raise ValueError(f"not a sparsenn model file: {path}")
        net = cls(hidden=tuple(blob["hidden"]))
        net.config = TrainConfig(**blob["config"])
        net.mu_ = np.asarray(blob["mu"], dtype=np.float64)
        net.sd_ = np.asarray(blob["sd"], dtype=np.float64)
        net.params_ = {k: np.asarray(v, dtype=np.float64) for k, v in blob["params"].items()}
        net.history_ = None
        return net
