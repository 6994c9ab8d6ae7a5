"""Standardized logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import PprFraudError

STD_FLOOR = 1e-12
MAX_HALVINGS = 60


class EmptyMatrix(PprFraudError):
    pass


class DimensionMismatch(PprFraudError):
    pass


class SingleClassTraining(UserWarning):
    """Training labels contain one class; the model is intercept-only."""


class ClassWeighting(str, Enum):
    NONE = "none"
    BALANCED = "balanced"


@dataclass(frozen=True)
class ScalerStats:
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class TrainParams:
    learning_rate: float = 0.1
    l2_lambda: float = 1e-6
    max_epochs: int = 500
    loss_tol: float = 1e-10
    class_weighting: ClassWeighting = ClassWeighting.NONE

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not self.loss_tol > 0:
            raise ValueError("loss_tol must be > 0")
        object.__setattr__(self, "class_weighting", ClassWeighting(self.class_weighting))


@dataclass
class LogisticModel:
    feature_names: tuple[str, ...]
    weights: np.ndarray
    intercept: float
    scaler: ScalerStats
    params: TrainParams
    epochs: int = 0
    final_loss: float = float("nan")
    degenerate: bool = False
    loss_history: list[float] = field(default_factory=list, repr=False)


def fit_scaler(X: np.ndarray) -> ScalerStats:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix("cannot fit a scaler on an empty matrix")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return ScalerStats(mean, std)


def apply_scaler(X: np.ndarray, stats: ScalerStats) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(stats.mean):
        raise DimensionMismatch(f"matrix has shape {X.shape}, scaler expects {len(stats.mean)} columns")
    return (X - stats.mean) / stats.std


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logits(X: np.ndarray, w: np.ndarray, b: float) -> np.ndarray:
    # elementwise product + numpy reduction instead of BLAS gemv: the result
    # must not depend on the BLAS thread count
    return (X * w).sum(axis=1) + b


def sample_weights(y: np.ndarray, weighting: ClassWeighting | str) -> np.ndarray:
    y = np.asarray(y)
    if ClassWeighting(weighting) is ClassWeighting.NONE:
        return np.ones(len(y))
    n = len(y)
    n_pos = int(y.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        return np.ones(n)
    return np.where(y == 1, n / (2.0 * n_pos), n / (2.0 * n_neg))


def loss_and_grad(
    w: np.ndarray,
    b: float,
    X: np.ndarray,
    y: np.ndarray,
    l2_lambda: float = 0.0,
    sw: np.ndarray | None = None,
) -> tuple[float, np.ndarray, float]:
    """Weighted mean log-loss plus ``l2_lambda / 2 * |w|^2``, with its gradient.

    Returns ``(loss, grad_w, grad_b)``; the intercept is not regularized.
    """
    if sw is None:
        sw = np.ones(len(y))
    total = sw.sum()
    z = _logits(X, w, b)
    loss = float((sw * (np.logaddexp(0.0, z) - y * z)).sum() / total + 0.5 * l2_lambda * (w * w).sum())
    r = sw * (sigmoid(z) - y) / total
    grad_w = (X * r[:, None]).sum(axis=0) + l2_lambda * w
    return loss, grad_w, float(r.sum())


def _loss(w, b, X, y, l2, sw) -> float:
    z = _logits(X, w, b)
    return float((sw * (np.logaddexp(0.0, z) - y * z)).sum() / sw.sum() + 0.5 * l2 * (w * w).sum())


def train(
    X: np.ndarray,
    y: np.ndarray,
    params: TrainParams = TrainParams(),
    feature_names: Sequence[str] | None = None,
    scaler: ScalerStats | None = None,
) -> LogisticModel:
    """Fit logistic regression on an already standardized matrix.

    Starts from zero weights; whenever a step would raise the loss the step
    size is halved (and stays halved). Stops once the relative loss change
    falls below ``params.loss_tol`` or after ``params.max_epochs``.

    Single-class labels produce an intercept-only model flagged ``degenerate``
    and a :class:`SingleClassTraining` warning.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix("cannot train on an empty matrix")
    if len(y) != X.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} rows but {len(y)} labels")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    d = X.shape[1]
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{i}" for i in range(d))
    if scaler is None:
        scaler = ScalerStats(np.zeros(d), np.ones(d))

    n_pos = int(y.sum())
    if n_pos in (0, len(y)):
        warnings.warn(SingleClassTraining("training labels contain a single class"), stacklevel=2)
        # smoothed log-odds keeps the intercept finite
        b = float(np.log((n_pos + 0.5) / (len(y) - n_pos + 0.5)))
        return LogisticModel(names, np.zeros(d), b, scaler, params, degenerate=True)

    sw = sample_weights(y, params.class_weighting)
    w = np.zeros(d)
    b = 0.0
    step = params.learning_rate
    l2 = params.l2_lambda
    loss, gw, gb = loss_and_grad(w, b, X, y, l2, sw)
    history = [loss]
    epoch = 0
    for epoch in range(1, params.max_epochs + 1):
        for _ in range(MAX_HALVINGS):
            w_new = w - step * gw
            b_new = b - step * gb
            new_loss = _loss(w_new, b_new, X, y, l2, sw)
            if new_loss <= loss:
                break
            step *= 0.5
        else:
            break
        rel = abs(loss - new_loss) / max(abs(loss), np.finfo(float).tiny)
        w, b = w_new, b_new
        loss, gw, gb = loss_and_grad(w, b, X, y, l2, sw)
        history.append(loss)
        if rel < params.loss_tol:
            break
    return LogisticModel(names, w, b, scaler, params, epochs=epoch, final_loss=loss, loss_history=history)


def fit(X_raw: np.ndarray, y: np.ndarray, params: TrainParams = TrainParams(), feature_names: Sequence[str] | None = None) -> LogisticModel:
    """Fit the scaler on ``X_raw`` and train on the standardized matrix."""
    scaler = fit_scaler(X_raw)
    return train(apply_scaler(X_raw, scaler), y, params, feature_names, scaler)


def predict_proba(model: LogisticModel, X_raw: np.ndarray) -> np.ndarray:
    X_raw = np.asarray(X_raw, dtype=np.float64)
    if X_raw.ndim != 2 or X_raw.shape[1] != len(model.weights):
        raise DimensionMismatch(f"matrix has shape {X_raw.shape}, model expects {len(model.weights)} columns")
    return sigmoid(_logits(apply_scaler(X_raw, model.scaler), model.weights, model.intercept))


def feature_importance(model: LogisticModel) -> list[tuple[str, float]]:
    """Features ranked by absolute standardized coefficient, ties by name."""
    pairs = [(name, abs(float(w))) for name, w in zip(model.feature_names, model.weights)]
    return sorted(pairs, key=lambda p: (-p[1], p[0]))


def model_to_dict(model: LogisticModel) -> dict:
    params = asdict(model.params)
    params["class_weighting"] = model.params.class_weighting.value
    return {
        "feature_names": list(model.feature_names),
        "weights": model.weights.tolist(),
        "intercept": model.intercept,
        "scaler": {"mean": model.scaler.mean.tolist(), "std": model.scaler.std.tolist()},
        "train_params": params,
        "training": {"epochs": model.epochs, "final_loss": model.final_loss, "degenerate": model.degenerate},
    }


def model_from_dict(doc: dict) -> LogisticModel:
    tr = doc.get("training", {})
    return LogisticModel(
        feature_names=tuple(doc["feature_names"]),
        weights=np.array(doc["weights"], dtype=np.float64),
        intercept=float(doc["intercept"]),
        scaler=ScalerStats(np.array(doc["scaler"]["mean"]), np.array(doc["scaler"]["std"])),
        params=TrainParams(**doc["train_params"]),
        epochs=int(tr.get("epochs", 0)),
        final_loss=float(tr.get("final_loss", float("nan"))),
        degenerate=bool(tr.get("degenerate", False)),
    )


def save_model(model: LogisticModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> LogisticModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
