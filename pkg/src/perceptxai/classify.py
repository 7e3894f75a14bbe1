"""Small deterministic linear classifiers over image features."""
from dataclasses import dataclass, field
import json

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted, check_X_y

from .errors import CueAbsent, EmptyClass, EmptySplit, IncompatibleSpec, InvalidConfig, NonFiniteLoss
from .features import FeatureSpec, extract_features
from .synth import iter_split, rebuild_split

DEFAULT_HYPER = {"epochs": 500, "learning_rate": 0.5, "l2": 1e-4, "seed": 0}


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(z, y):
    # mean binary cross-entropy written in logits for stability
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


class LogisticGD(BaseEstimator, ClassifierMixin):
    """Logistic regression on z-scored features, fitted by full-batch gradient descent.

    Minimizes ``mean cross-entropy + l2 * ||w||^2`` starting from zero weights,
    so the result depends only on the data and the hyperparameters. Features
    with zero training variance are dropped and never carry weight.
    """

    def __init__(self, epochs=500, learning_rate=0.5, l2=1e-4):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.l2 = l2

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        y = y.astype(np.float64)
        for cls in (0, 1):
            if np.sum(y == cls) < 2:
                raise EmptyClass(f"class {cls} has fewer than 2 training examples")
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]

        mean = X.mean(axis=0)
        std = X.std(axis=0)
        # relative threshold: a feature that is constant up to rounding is dropped
        scale = np.maximum(np.abs(mean), 1.0)
        keep = std > 1e-12 * scale
        self.norm_mean_ = np.where(keep, mean, 0.0)
        self.norm_std_ = np.where(keep, std, 1.0)
        self.dropped_ = np.flatnonzero(~keep)

        Z = (X[:, keep] - mean[keep]) / std[keep]
        w = np.zeros(Z.shape[1])
        b = 0.0
        n = len(y)
        history = []
        # overflow on divergence is reported as NonFiniteLoss, not as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(self.epochs):
                logits = Z @ w + b
                loss = log_loss(logits, y) + self.l2 * float(w @ w)
                if not np.isfinite(loss):
                    raise NonFiniteLoss("training loss became non-finite; lower the learning rate")
                history.append(loss)
                resid = sigmoid(logits) - y
                w = w - self.learning_rate * (Z.T @ resid / n + 2.0 * self.l2 * w)
                b = b - self.learning_rate * float(resid.mean())
            final = log_loss(Z @ w + b, y) + self.l2 * float(w @ w)
            if not np.isfinite(final):
                raise NonFiniteLoss("training loss became non-finite; lower the learning rate")
            history.append(final)

        self.coef_ = np.zeros(X.shape[1])
        self.coef_[keep] = w
        self.intercept_ = b
        self.loss_history_ = np.array(history)
        return self

    def zscore(self, X):
        check_is_fitted(self, "coef_")
        X = np.asarray(X, dtype=np.float64)
        return (X - self.norm_mean_) / self.norm_std_

    def decision_function(self, X):
        return self.zscore(X) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        # ties at exactly 0.5 go to class 1
        return (sigmoid(self.decision_function(X)) >= 0.5).astype(int)


@dataclass
class Model:
    """A fitted linear classifier bound to the feature space it was trained on."""

    spec: FeatureSpec
    weights: np.ndarray
    bias: float
    norm_mean: np.ndarray
    norm_std: np.ndarray
    dropped_features: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_estimator(cls, spec, est, meta=None):
        return cls(spec, est.coef_.copy(), float(est.intercept_), est.norm_mean_.copy(),
                   est.norm_std_.copy(), [int(i) for i in est.dropped_], dict(meta or {}))

    @classmethod
    def zeros(cls, spec, shape):
        n = spec.n_features(shape)
        return cls(spec, np.zeros(n), 0.0, np.zeros(n), np.ones(n))

    def zscore(self, x):
        return (np.asarray(x, dtype=np.float64) - self.norm_mean) / self.norm_std

    def logit_of_features(self, x):
        return float(self.zscore(x) @ self.weights + self.bias)

    def features(self, img):
        img = np.asarray(img, dtype=np.float64)
        x = extract_features(img, self.spec)
        if x.shape != self.weights.shape:
            raise IncompatibleSpec(f"image yields {x.size} features, model expects {self.weights.size}")
        return x

    def logit(self, img):
        return self.logit_of_features(self.features(img))

    def negated(self):
        return Model(self.spec, -self.weights, -self.bias, self.norm_mean, self.norm_std,
                     list(self.dropped_features), dict(self.meta))

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "weights": [float(v) for v in self.weights],
            "bias": float(self.bias),
            "norm_mean": [float(v) for v in self.norm_mean],
            "norm_std": [float(v) for v in self.norm_std],
            "dropped_features": list(self.dropped_features),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(FeatureSpec.from_dict(d["spec"]), np.array(d["weights"], dtype=np.float64),
                       float(d["bias"]), np.array(d["norm_mean"], dtype=np.float64),
                       np.array(d["norm_std"], dtype=np.float64), list(d.get("dropped_features", [])),
                       dict(d.get("meta", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidConfig(f"malformed model file: {exc}") from exc

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def feature_matrix(images, spec):
    return np.stack([extract_features(img, spec) for img in images])


def split_features(manifest, split, spec):
    X, y = [], []
    for img, entry in iter_split(manifest, split):
        X.append(extract_features(img, spec))
        y.append(entry.label)
    return np.array(X), np.array(y)


def train(manifest, spec, hyper=None, features=None):
    """Fit a :class:`Model` on the manifest's train split.

    ``features`` may carry a precomputed ``(X, y)`` for that split.
    """
    hyper = {**DEFAULT_HYPER, **(hyper or {})}
    X, y = features if features is not None else split_features(manifest, "train", spec)
    est = LogisticGD(hyper["epochs"], hyper["learning_rate"], hyper["l2"]).fit(X, y)
    meta = {
        "seed": int(hyper["seed"]),
        "epochs": int(hyper["epochs"]),
        "learning_rate": float(hyper["learning_rate"]),
        "l2": float(hyper["l2"]),
        "final_train_loss": float(est.loss_history_[-1]),
        "preprocess": manifest.preprocess,
    }
    return Model.from_estimator(spec, est, meta)


def predict(model, img):
    """``(label, score)`` with ``score = sigmoid(w . z(x) + b)`` and ties going to 1."""
    score = float(sigmoid(np.array([model.logit(img)]))[0])
    return int(score >= 0.5), score


def accuracy_of(model, pairs):
    correct = total = 0
    for img, entry in pairs:
        label, _ = predict(model, img)
        correct += label == entry.label
        total += 1
    if total == 0:
        raise EmptySplit("no images to evaluate")
    return correct / total


def evaluate(model, manifest, split="test"):
    return accuracy_of(model, iter_split(manifest, split))


def measure_cue_reliance(model, manifest, cue, split="test"):
    """Accuracy drop on ``split`` when one cue is removed from class-1 images.

    The cue-free images are regenerated from the stored seeds, so they share
    base image, square placement and preprocessing with the originals.
    """
    kind = cue if isinstance(cue, str) else cue.kind
    if manifest.config is None or manifest.config.cue(kind) is None:
        raise CueAbsent(f"dataset was not built with cue {kind}")
    with_cue = evaluate(model, manifest, split)
    without = accuracy_of(model, rebuild_split(manifest, split, neutralize=(kind,)))
    return with_cue - without
