"""Fully-connected CDF regressor: ReLU hidden layers, sigmoid output, MSE
loss, Adam updates. Implemented directly on numpy so training is exactly
reproducible from a seed.

Features are z-scored with statistics taken from the training split before
training starts; the six raw inputs span four orders of magnitude, which
makes unscaled training unstable. A feature that is constant in the split
keeps scale 1 so it passes through unchanged.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .domain import ChannelConfig, N_FEATURES, assemble_features_batch

DEFAULT_HIDDEN_DIMS = (1024, 512, 256, 128, 32)
DEFAULT_LEARNING_RATE = 0.005
DEFAULT_EPOCHS = 100
DEFAULT_BATCH_SIZE = 1024

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

MODEL_SCHEMA_VERSION = 1

# stds below this (relative to the feature scale) mean "constant feature"
_CONST_STD_TOL = 1e-12


@dataclass
class MlpModel:
    layer_dims: list[int]
    weights: list[np.ndarray]  # per layer, (fan_in, fan_out)
    biases: list[np.ndarray]  # per layer, (fan_out,)
    feature_mean: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES))
    feature_std: np.ndarray = field(default_factory=lambda: np.ones(N_FEATURES))
    provenance: dict = field(default_factory=dict)

    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def cdf(self, config: ChannelConfig, r) -> np.ndarray:
        """Predicted cumulative density at distance(s) r for one configuration."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=np.float64))
        out = forward(self, assemble_features_batch(config, r_arr))
        return float(out[0]) if np.ndim(r) == 0 else out

    def predict_cdf(self, features_matrix: np.ndarray) -> np.ndarray:
        return forward(self, features_matrix)


@dataclass
class AdamState:
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_model(cls, model: MlpModel) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w) for w in model.weights],
            v_w=[np.zeros_like(w) for w in model.weights],
            m_b=[np.zeros_like(b) for b in model.biases],
            v_b=[np.zeros_like(b) for b in model.biases],
        )


def init_mlp(layer_dims, seed: int) -> MlpModel:
    """He-initialized weights (variance 2/fan_in), zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2 or dims[0] != N_FEATURES or dims[-1] != 1:
        raise ValueError(f"layer_dims must run from {N_FEATURES} to 1, got {dims}")
    if any(d <= 0 for d in dims):
        raise ValueError(f"layer dims must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(layer_dims=dims, weights=weights, biases=biases)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # overflow-safe in both tails
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def standardize(model: MlpModel, features_raw: np.ndarray) -> np.ndarray:
    return (features_raw - model.feature_mean) / model.feature_std


def fit_feature_stats(model: MlpModel, features_raw: np.ndarray) -> None:
    """Population mean/std per feature; constant features keep scale 1."""
    mean = features_raw.mean(axis=0)
    std = features_raw.std(axis=0)
    floor = _CONST_STD_TOL * np.maximum(1.0, np.abs(mean))
    std = np.where(std <= floor, 1.0, std)
    model.feature_mean = mean
    model.feature_std = std


def _forward_cached(model: MlpModel, features_raw: np.ndarray):
    a = standardize(model, features_raw)
    activations = [a]
    pre_acts = []
    n_layers = len(model.weights)
    for l in range(n_layers - 1):
        z = a @ model.weights[l] + model.biases[l]
        pre_acts.append(z)
        a = np.maximum(z, 0.0)
        activations.append(a)
    z_out = a @ model.weights[-1] + model.biases[-1]
    pre_acts.append(z_out)
    prediction = _sigmoid(z_out)[:, 0]
    return prediction, activations, pre_acts


def forward(model: MlpModel, features_raw) -> np.ndarray:
    """Predicted cumulative densities, one per input row."""
    x = np.asarray(features_raw, dtype=np.float64)
    single = x.ndim == 1
    x = x.reshape(-1, x.shape[-1])
    if x.shape[1] != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES} features, got {x.shape[1]}")
    prediction, _, _ = _forward_cached(model, x)
    return prediction[0] if single else prediction


def mse_loss(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=np.float64).reshape(-1)
    t = np.asarray(targets, dtype=np.float64).reshape(-1)
    if p.size == 0 or p.size != t.size:
        raise ValueError("predictions and targets must be non-empty and equal length")
    d = p - t
    return float(d @ d / d.size)


def _backward_from_cache(model, prediction, activations, pre_acts, targets):
    n = targets.size
    d_pred = 2.0 * (prediction - targets) / n
    dz = (d_pred * prediction * (1.0 - prediction))[:, None]

    weight_grads = [None] * len(model.weights)
    bias_grads = [None] * len(model.biases)
    for l in range(len(model.weights) - 1, -1, -1):
        weight_grads[l] = activations[l].T @ dz
        bias_grads[l] = dz.sum(axis=0)
        if l > 0:
            da = dz @ model.weights[l].T
            dz = da * (pre_acts[l - 1] > 0.0)
    return weight_grads, bias_grads


def backward(model: MlpModel, features_raw, targets):
    """Gradients of the batch-mean squared error w.r.t. every parameter.

    Returns (weight_grads, bias_grads), shapes matching the model.
    """
    x = np.asarray(features_raw, dtype=np.float64).reshape(-1, N_FEATURES)
    t = np.asarray(targets, dtype=np.float64).reshape(-1)
    if x.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    prediction, activations, pre_acts = _forward_cached(model, x)
    return _backward_from_cache(model, prediction, activations, pre_acts, t)


def adam_step(model: MlpModel, gradients, state: AdamState, learning_rate: float):
    """One bias-corrected Adam update, in place."""
    weight_grads, bias_grads = gradients
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for l in range(len(model.weights)):
        for param, grad, m, v in (
            (model.weights[l], weight_grads[l], state.m_w[l], state.v_w[l]),
            (model.biases[l], bias_grads[l], state.m_b[l], state.v_b[l]),
        ):
            m *= state.beta1
            m += (1.0 - state.beta1) * grad
            v *= state.beta2
            v += (1.0 - state.beta2) * grad * grad
            param -= learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return model, state


def train_mlp(
    model: MlpModel,
    train_features: np.ndarray,
    train_targets: np.ndarray,
    epochs: int,
    learning_rate: float,
    batch_size: int,
    seed: int,
):
    """Seeded minibatch training; returns (model, per-epoch loss history).

    The loss history entry for an epoch is the sample-weighted mean of the
    minibatch MSEs seen during that epoch.
    """
    x = np.asarray(train_features, dtype=np.float64)
    y = np.asarray(train_targets, dtype=np.float64).reshape(-1)
    if x.shape[0] == 0:
        raise ValueError("training set must be non-empty")
    fit_feature_stats(model, x)

    state = AdamState.for_model(model)
    rng = np.random.default_rng(seed)
    n = x.shape[0]
    history = []
    for _ in range(epochs):
        perm = rng.permutation(n)
        sse = 0.0
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            xb, yb = x[idx], y[idx]
            pred, activations, pre_acts = _forward_cached(model, xb)
            grads = _backward_from_cache(model, pred, activations, pre_acts, yb)
            sse += mse_loss(pred, yb) * idx.size
            adam_step(model, grads, state, learning_rate)
        history.append(sse / n)
    model.provenance.update(
        {
            "seed": int(seed),
            "epochs": int(epochs),
            "learning_rate": float(learning_rate),
            "batch_size": int(batch_size),
            "adam": {"beta1": ADAM_BETA1, "beta2": ADAM_BETA2, "eps": ADAM_EPS},
            "n_train": int(n),
        }
    )
    return model, history


def save_mlp(model: MlpModel, path) -> None:
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "type": "mlp",
        "layer_dims": model.layer_dims,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "feature_stats": {
            "mean": model.feature_mean.tolist(),
            "std": model.feature_std.tolist(),
        },
        "training_provenance": model.provenance,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_mlp(path) -> MlpModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("type") != "mlp":
        raise ValueError(f"{path}: not an mlp model file")
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema version {doc.get('schema_version')}")
    model = MlpModel(
        layer_dims=[int(d) for d in doc["layer_dims"]],
        weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
        biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
        feature_mean=np.asarray(doc["feature_stats"]["mean"], dtype=np.float64),
        feature_std=np.asarray(doc["feature_stats"]["std"], dtype=np.float64),
        provenance=doc.get("training_provenance", {}),
    )
    if np.any(model.feature_std <= 0):
        raise ValueError(f"{path}: feature stds must be positive")
    return model
