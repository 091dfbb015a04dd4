"""Non-gas classifiers: exact k-nearest neighbours and a one-vs-rest linear SVM."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import neighbors


class SingleClassError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


# ---------------------------------------------------------------------------
# k-nearest neighbours


@dataclass
class KnnParams:
    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(eq=False)
class KnnModel:
    vectors: np.ndarray
    labels: np.ndarray
    k: int = 1

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.vectors) == 0:
            raise ValueError("KNN store is empty")
        if len(self.labels) != len(self.vectors):
            raise ValueError("one label per stored vector")
        if not 1 <= self.k <= len(self.vectors):
            raise ValueError(f"k={self.k} must be between 1 and the store size")

    def to_json(self) -> dict:
        return {"kind": "knn", "k": self.k, "vectors": self.vectors.tolist(), "labels": self.labels.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "KnnModel":
        return cls(np.array(doc["vectors"]), np.array(doc["labels"]), doc["k"])


def _vote(neigh_labels: np.ndarray) -> int:
    values, counts = np.unique(neigh_labels, return_counts=True)
    # np.unique sorts values, so argmax picks the lowest label among ties
    return int(values[np.argmax(counts)])


def knn_predict_many(model: KnnModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.vectors.shape[1]:
        raise DimensionMismatchError(f"query dimension {X.shape[1]} != {model.vectors.shape[1]}")
    if len(X) == 0:
        return np.zeros(0, dtype=np.int64)
    idx, _ = neighbors.k_nearest(model.vectors, X, model.k)
    if model.k == 1:
        return model.labels[idx[:, 0]]
    return np.array([_vote(model.labels[row]) for row in idx], dtype=np.int64)


def knn_predict(model: KnnModel, x) -> int:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatchError("knn_predict takes a single vector")
    return int(knn_predict_many(model, x)[0])


# ---------------------------------------------------------------------------
# linear SVM, one-vs-rest, Pegasos-style subgradient steps


@dataclass
class SvmParams:
    lam: float = 1e-4
    epochs: int = 20
    standardize: bool = True

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(eq=False)
class LinearSvmModel:
    classes: np.ndarray  # (C,) label ids, ascending
    weights: np.ndarray  # (C, D) in standardized feature space
    biases: np.ndarray  # (C,)
    mean: np.ndarray
    scale: np.ndarray
    lam: float
    epochs: int
    objective_history: list = field(default_factory=list)  # per epoch, (C,) objectives

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.weights.shape[1]:
            raise DimensionMismatchError(f"input dimension {X.shape[-1]} != {self.weights.shape[1]}")
        return ((X - self.mean) / self.scale) @ self.weights.T + self.biases

    def to_json(self) -> dict:
        return {
            "kind": "linear_svm",
            "coding": "one_vs_rest",
            "classes": self.classes.tolist(),
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "lam": self.lam,
            "epochs": self.epochs,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LinearSvmModel":
        return cls(
            np.array(doc["classes"], dtype=np.int64),
            np.array(doc["weights"], dtype=float),
            np.array(doc["biases"], dtype=float),
            np.array(doc["mean"], dtype=float),
            np.array(doc["scale"], dtype=float),
            doc["lam"],
            doc["epochs"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def hinge_objective(W, b, X, Y, lam, weights=None) -> np.ndarray:
    """Per-class (lam/2)|w|^2 + mean hinge; ``Y`` is (n, C) in {-1, +1}."""
    margins = Y * (X @ W.T + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    mean_hinge = hinge.mean(axis=0) if weights is None else (weights[:, None] * hinge).sum(axis=0) / weights.sum()
    return 0.5 * lam * (W * W).sum(axis=1) + mean_hinge


def svm_train(X, y, lam: float = 1e-4, epochs: int = 20, seed: int = 0, standardize: bool = True) -> LinearSvmModel:
    """One binary machine per class, trained on the regularized hinge loss.

    Identical rows are merged first and sampled once per epoch with their
    multiplicity as a loss weight, so duplicating the data set leaves the
    iterates unchanged.  Step size 1/(lam*t); ``w`` is projected onto the
    ball of radius 1/sqrt(lam).  The returned machine is the running
    average of all iterates.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    classes = np.unique(y)
    if len(classes) < 2:
        raise SingleClassError("SVM training needs at least two classes")
    if standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
    else:
        mean = np.zeros(X.shape[1])
        scale = np.ones(X.shape[1])
    Z = (X - mean) / scale

    rows = np.concatenate([Z, y[:, None].astype(float)], axis=1)
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    Zu, yu = uniq[:, :-1], uniq[:, -1].astype(np.int64)
    weight = counts * (len(Zu) / len(Z))
    Yu = np.where(yu[:, None] == classes[None, :], 1.0, -1.0)

    n_cls, dim = len(classes), Z.shape[1]
    W = np.zeros((n_cls, dim))
    b = np.zeros(n_cls)
    radius = 1.0 / np.sqrt(lam)
    rng = np.random.default_rng(seed)
    W_avg = np.zeros_like(W)
    b_avg = np.zeros_like(b)
    history = []
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(len(Zu)):
            t += 1
            eta = 1.0 / (lam * t)
            z, yi = Zu[i], Yu[i]
            viol = yi * (W @ z + b) < 1.0
            W *= 1.0 - eta * lam
            if viol.any():
                step = eta * weight[i] * yi[viol]
                W[viol] += step[:, None] * z
                b[viol] += step
            norms = np.sqrt((W * W).sum(axis=1))
            over = norms > radius
            if over.any():
                W[over] *= (radius / norms[over])[:, None]
            W_avg += (W - W_avg) / t
            b_avg += (b - b_avg) / t
        history.append(hinge_objective(W_avg, b_avg, Zu, Yu, lam, counts.astype(float)))
    return LinearSvmModel(classes, W_avg, b_avg, mean, scale, lam, epochs, history)


def svm_predict_many(model: LinearSvmModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    scores = model.decision_function(X)
    # classes are ascending, so argmax's first-hit rule is the canonical tie-break
    return model.classes[np.argmax(scores, axis=1)]


def svm_predict(model: LinearSvmModel, x) -> int:
    return int(svm_predict_many(model, np.asarray(x, dtype=float))[0])
