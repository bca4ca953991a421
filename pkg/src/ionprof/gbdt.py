"""Gradient-boosted regression trees for the CDF, the baseline model.

Stagewise least-squares boosting: each round fits an exact greedy tree to
the current residuals, leaf values are L2-regularized residual means
``sum(res)/(count + lam)``, and the ensemble adds ``shrinkage * tree(x)``
per round. Defaults follow XGBoost (100 rounds, shrinkage 0.3, base score
0.5) with depth 15 and lam 5 as the benchmark settings.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .domain import ChannelConfig, N_FEATURES, assemble_features_batch

DEFAULT_ROUNDS = 100
DEFAULT_SHRINKAGE = 0.3
DEFAULT_MAX_DEPTH = 15
DEFAULT_LAMBDA = 5.0
DEFAULT_BASE_SCORE = 0.5
DEFAULT_MIN_SAMPLES = 1

MODEL_SCHEMA_VERSION = 1


@dataclass
class RegressionTree:
    """One fitted tree, stored as flat preorder node arrays.

    Internal nodes have feature >= 0 and route ``x[feature] < threshold``
    to ``left``; leaves have feature == -1 and carry ``value``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_depth: int

    def n_nodes(self) -> int:
        return self.feature.size

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _kernels.predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value, X
        )

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes(), dtype=np.int64)
        for i in range(self.n_nodes()):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max()) if depths.size else 0


@dataclass
class GbdtModel:
    base_score: float
    shrinkage: float
    lam: float
    trees: list[RegressionTree] = field(default_factory=list)
    n_features: int = N_FEATURES
    provenance: dict = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return len(self.trees)

    def cdf(self, config: ChannelConfig, r) -> np.ndarray:
        """Clamped ensemble prediction at distance(s) r for one configuration."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=np.float64))
        out = predict_gbdt(self, assemble_features_batch(config, r_arr))
        return float(out[0]) if np.ndim(r) == 0 else out

    def predict_cdf(self, features_matrix: np.ndarray) -> np.ndarray:
        return predict_gbdt(self, features_matrix)


def fit_tree(
    features_matrix: np.ndarray,
    residuals: np.ndarray,
    max_depth: int,
    lam: float,
    min_samples: int = DEFAULT_MIN_SAMPLES,
) -> RegressionTree:
    """Exact greedy least-squares tree over all features and thresholds."""
    X = np.ascontiguousarray(features_matrix, dtype=np.float64)
    res = np.ascontiguousarray(residuals, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("features_matrix must be a non-empty 2-d array")
    if res.shape != (X.shape[0],):
        raise ValueError("residuals must match features_matrix rows")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(res)):
        raise ValueError("features and residuals must be finite")
    if max_depth < 0 or lam < 0 or min_samples < 1:
        raise ValueError("invalid tree hyperparameters")
    feature, threshold, left, right, value = _kernels.build_tree(
        X, res, max_depth, lam, min_samples
    )
    return RegressionTree(feature, threshold, left, right, value, max_depth=max_depth)


def train_gbdt(
    train_features: np.ndarray,
    train_targets: np.ndarray,
    rounds: int = DEFAULT_ROUNDS,
    shrinkage: float = DEFAULT_SHRINKAGE,
    max_depth: int = DEFAULT_MAX_DEPTH,
    lam: float = DEFAULT_LAMBDA,
    base_score: float = DEFAULT_BASE_SCORE,
    min_samples: int = DEFAULT_MIN_SAMPLES,
):
    """Stagewise boosting; returns (model, per-round training MSE)."""
    X = np.ascontiguousarray(train_features, dtype=np.float64)
    y = np.asarray(train_targets, dtype=np.float64).reshape(-1)
    if X.shape[0] == 0:
        raise ValueError("training set must be non-empty")
    if not 0.0 < shrinkage <= 1.0:
        raise ValueError(f"shrinkage must be in (0, 1], got {shrinkage}")

    model = GbdtModel(
        base_score=float(base_score),
        shrinkage=float(shrinkage),
        lam=float(lam),
        n_features=int(X.shape[1]),
    )
    prediction = np.full(y.shape, float(base_score))
    history = []
    for _ in range(rounds):
        residuals = y - prediction
        tree = fit_tree(X, residuals, max_depth, lam, min_samples)
        prediction = prediction + shrinkage * tree.predict(X)
        model.trees.append(tree)
        history.append(float(np.mean((y - prediction) ** 2)))
    model.provenance.update(
        {
            "rounds": int(rounds),
            "shrinkage": float(shrinkage),
            "max_depth": int(max_depth),
            "lambda": float(lam),
            "base_score": float(base_score),
            "min_samples": int(min_samples),
            "n_train": int(X.shape[0]),
            "kernel_backend": _kernels.BACKEND,
        }
    )
    return model, history


def predict_gbdt_raw(model: GbdtModel, features_raw) -> np.ndarray:
    """Unclamped ensemble sum ``base + sum(shrinkage * tree(x))``."""
    X = np.asarray(features_raw, dtype=np.float64)
    single = X.ndim == 1
    X = np.ascontiguousarray(X.reshape(-1, X.shape[-1]))
    if X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[1]}")
    out = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        out += model.shrinkage * tree.predict(X)
    return out[0] if single else out


def predict_gbdt(model: GbdtModel, features_raw) -> np.ndarray:
    """Ensemble prediction clamped to [0, 1] for use as a CDF."""
    return np.clip(predict_gbdt_raw(model, features_raw), 0.0, 1.0)


def save_gbdt(model: GbdtModel, path) -> None:
    trees = []
    for tree in model.trees:
        nodes = []
        for i in range(tree.n_nodes()):
            if tree.feature[i] < 0:
                nodes.append({"value": float(tree.value[i])})
            else:
                nodes.append(
                    {
                        "feature": int(tree.feature[i]),
                        "threshold": float(tree.threshold[i]),
                        "left": int(tree.left[i]),
                        "right": int(tree.right[i]),
                    }
                )
        trees.append({"nodes": nodes, "max_depth": tree.max_depth})
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "type": "gbdt",
        "base_score": model.base_score,
        "shrinkage": model.shrinkage,
        "lambda": model.lam,
        "n_features": model.n_features,
        "trees": trees,
        "training_provenance": model.provenance,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_gbdt(path) -> GbdtModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("type") != "gbdt":
        raise ValueError(f"{path}: not a gbdt model file")
    if doc.get("schema_version") != MODEL_SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema version {doc.get('schema_version')}")
    model = GbdtModel(
        base_score=float(doc["base_score"]),
        shrinkage=float(doc["shrinkage"]),
        lam=float(doc["lambda"]),
        n_features=int(doc.get("n_features", N_FEATURES)),
        provenance=doc.get("training_provenance", {}),
    )
    for tree_doc in doc["trees"]:
        nodes = tree_doc["nodes"]
        nn = len(nodes)
        feature = np.full(nn, -1, dtype=np.int32)
        threshold = np.zeros(nn, dtype=np.float64)
        left = np.full(nn, -1, dtype=np.int32)
        right = np.full(nn, -1, dtype=np.int32)
        value = np.zeros(nn, dtype=np.float64)
        for i, node in enumerate(nodes):
            if "value" in node:
                value[i] = node["value"]
            else:
                feature[i] = node["feature"]
                threshold[i] = node["threshold"]
                left[i] = node["left"]
                right[i] = node["right"]
        model.trees.append(
            RegressionTree(
                feature, threshold, left, right, value,
                max_depth=int(tree_doc.get("max_depth", -1)),
            )
        )
    return model
