"""Model families: KNN, random forest, extra trees, gradient boosting.

Every family supports both tasks. ``fit_model`` returns a
:class:`FittedModel` exposing

* ``score(x)``: a continuous output; for classification the positive-class
  score in [0, 1] (soft vote fraction, neighbor fraction, or sigmoid of
  the boosted logit), for regression the predicted count.
* ``predict(x)``: class labels (+1 when the score is >= 0.5) or counts.

All randomness (bootstrap draws, feature subsets, random thresholds)
derives from the seed passed to ``fit_model``, so refits are identical.
"""

from __future__ import annotations

import math
import pickle
import warnings
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from ..errors import DataError, ParameterError, ShapeError
from ..seeding import derive_seed
from .tree import DecisionTree, grow_tree, tree_apply, tree_predict

FAMILIES = ("knn", "random_forest", "extra_trees", "gradient_boosting")
TASKS = ("classify", "regress")

_MODEL_FORMAT = "dsrcsense-model"
_MODEL_VERSION = 1

# logit clamp keeping sigmoid strictly inside (0, 1) in float64
_MAX_LOGIT = 30.0


@dataclass(frozen=True)
class ModelSpec:
    """A model family plus hyperparameters (unused ones are ignored)."""

    family: str
    task: str
    n_neighbors: int = 5
    n_estimators: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    # "auto" follows common forest practice: a sqrt subset per split for
    # classification, every feature for regression
    max_features: int | Literal["auto", "sqrt", "third"] | None = "auto"
    learning_rate: float = 0.1
    n_stages: int = 100

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown model family {self.family!r}")
        if self.task not in TASKS:
            raise ParameterError(f"unknown task {self.task!r}")
        if self.n_neighbors < 1:
            raise ParameterError(f"n_neighbors must be >= 1, got {self.n_neighbors}")
        if self.n_estimators < 1:
            raise ParameterError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ParameterError(f"max_depth must be >= 1 or None, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ParameterError(
                f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}"
            )
        if self.n_stages < 0:
            raise ParameterError(f"n_stages must be >= 0, got {self.n_stages}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ParameterError(
                f"learning_rate must be in (0, 1], got {self.learning_rate}"
            )
        if isinstance(self.max_features, str) and self.max_features not in ("auto", "sqrt", "third"):
            raise ParameterError(f"unknown max_features rule {self.max_features!r}")
        if isinstance(self.max_features, int) and self.max_features < 1:
            raise ParameterError(f"max_features must be >= 1, got {self.max_features}")


def _resolve_max_features(rule: int | str | None, n_features: int, task: str) -> int | None:
    if rule == "auto":
        rule = "sqrt" if task == "classify" else None
    if rule is None:
        return None
    if rule == "sqrt":
        return max(1, round(math.sqrt(n_features)))
    if rule == "third":
        return max(1, n_features // 3)
    return min(int(rule), n_features)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -_MAX_LOGIT, _MAX_LOGIT)))


def _check_training_inputs(x: np.ndarray, y: np.ndarray, task: str) -> tuple[np.ndarray, np.ndarray]:
    x = np.ascontiguousarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],) or x.shape[0] == 0:
        raise ShapeError(f"incompatible training shapes x {x.shape}, y {y.shape}")
    if task == "classify" and not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("classification targets must take values in {-1, +1}")
    return x, y


@dataclass
class FittedModel:
    """A trained model; use :func:`fit_model` to construct one."""

    spec: ModelSpec
    train_x: np.ndarray | None = None  # knn only
    train_target: np.ndarray | None = None  # knn: indicator or counts
    trees: list[DecisionTree] = field(default_factory=list)
    base_score: float = 0.0  # boosting intercept (logit or mean)

    def score(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=float)
        if x.ndim != 2:
            raise ShapeError(f"expected a 2-d feature matrix, got shape {x.shape}")
        family = self.spec.family
        if family == "knn":
            return self._knn_score(x)
        if family in ("random_forest", "extra_trees"):
            total = np.zeros(x.shape[0])
            for tree in self.trees:
                total += tree_predict(tree, x)
            return total / len(self.trees)
        # gradient boosting
        logit_or_value = np.full(x.shape[0], self.base_score)
        for tree in self.trees:
            logit_or_value += self.spec.learning_rate * tree_predict(tree, x)
        if self.spec.task == "classify":
            return _sigmoid(logit_or_value)
        return logit_or_value

    def predict(self, x: np.ndarray) -> np.ndarray:
        scores = self.score(x)
        if self.spec.task == "classify":
            return np.where(scores >= 0.5, 1, -1)
        return scores

    def _knn_score(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.train_x.shape[1]:
            raise ShapeError(
                f"query width {x.shape[1]} != training width {self.train_x.shape[1]}"
            )
        k = self.spec.n_neighbors
        out = np.empty(x.shape[0])
        chunk = max(1, int(2_000_000 // max(1, self.train_x.shape[0])))
        for start in range(0, x.shape[0], chunk):
            block = x[start:start + chunk]
            diff = block[:, None, :] - self.train_x[None, :, :]
            dist = np.einsum("ijk,ijk->ij", diff, diff)
            # stable sort so equidistant neighbors resolve by training index
            neighbors = np.argsort(dist, axis=1, kind="stable")[:, :k]
            out[start:start + chunk] = self.train_target[neighbors].mean(axis=1)
        return out


def _fit_forest(spec: ModelSpec, x: np.ndarray, target: np.ndarray, seed: int) -> list[DecisionTree]:
    n = x.shape[0]
    mtry = _resolve_max_features(spec.max_features, x.shape[1], spec.task)
    bootstrap = spec.family == "random_forest"
    splitter = "best" if bootstrap else "random"
    trees = []
    for t in range(spec.n_estimators):
        rng = np.random.default_rng(derive_seed(seed, "tree", t))
        if bootstrap:
            rows = rng.integers(0, n, size=n)
            tx, ty = x[rows], target[rows]
        else:
            tx, ty = x, target
        trees.append(grow_tree(
            tx, ty, splitter=splitter, max_depth=spec.max_depth,
            min_samples_leaf=spec.min_samples_leaf, max_features=mtry, rng=rng,
        ))
    return trees


def _fit_boosting(spec: ModelSpec, x: np.ndarray, y: np.ndarray, seed: int) -> FittedModel:
    classify = spec.task == "classify"
    if classify:
        y01 = (y + 1.0) / 2.0
        mean_pos = float(y01.mean())
        if mean_pos in (0.0, 1.0):
            warnings.warn(
                "training data contains a single class; boosting degenerates "
                "to a constant model",
                stacklevel=3,
            )
            base = _MAX_LOGIT if mean_pos == 1.0 else -_MAX_LOGIT
            return FittedModel(spec=spec, base_score=base)
        base = math.log(mean_pos / (1.0 - mean_pos))
        target = y01
    else:
        base = float(y.mean())
        target = y

    current = np.full(x.shape[0], base)
    trees: list[DecisionTree] = []
    for s in range(spec.n_stages):
        if classify:
            prob = _sigmoid(current)
            residual = target - prob
        else:
            residual = target - current
        rng = np.random.default_rng(derive_seed(seed, "stage", s))
        # every boosting stage is a regression fit on residuals
        mtry = _resolve_max_features(spec.max_features, x.shape[1], "regress")
        tree = grow_tree(
            x, residual, splitter="best", max_depth=spec.max_depth,
            min_samples_leaf=spec.min_samples_leaf, max_features=mtry, rng=rng,
        )
        if classify:
            # Newton leaf update for the logistic loss
            leaves = tree_apply(tree, x)
            numer = np.zeros(tree.n_nodes)
            denom = np.zeros(tree.n_nodes)
            np.add.at(numer, leaves, residual)
            np.add.at(denom, leaves, prob * (1.0 - prob))
            gamma = numer / np.maximum(denom, 1e-12)
            gamma = np.clip(gamma, -_MAX_LOGIT, _MAX_LOGIT)
            tree.value[:] = gamma
            current = current + spec.learning_rate * gamma[leaves]
        else:
            current = current + spec.learning_rate * tree_predict(tree, x)
        trees.append(tree)
    return FittedModel(spec=spec, trees=trees, base_score=base)


def fit_model(spec: ModelSpec, x: np.ndarray, y: np.ndarray, seed: int = 0) -> FittedModel:
    """Train one model. ``y`` holds labels (+-1) or counts per the task."""
    spec.validate()
    x, y = _check_training_inputs(x, y, spec.task)

    if spec.family == "knn":
        if spec.n_neighbors > x.shape[0]:
            raise ParameterError(
                f"n_neighbors {spec.n_neighbors} exceeds training size {x.shape[0]}"
            )
        target = (y + 1.0) / 2.0 if spec.task == "classify" else y
        return FittedModel(spec=spec, train_x=x, train_target=target)

    if spec.family in ("random_forest", "extra_trees"):
        target = (y + 1.0) / 2.0 if spec.task == "classify" else y
        trees = _fit_forest(spec, x, target, seed)
        return FittedModel(spec=spec, trees=trees)

    return _fit_boosting(spec, x, y, seed)


def spec_with(spec: ModelSpec, **overrides) -> ModelSpec:
    return replace(spec, **overrides)


def save_model(model: FittedModel, path: str) -> None:
    payload = {"format": _MODEL_FORMAT, "version": _MODEL_VERSION, "model": model}
    with open(path, "wb") as fh:
        pickle.dump(payload, fh)


def load_model(path: str) -> FittedModel:
    with open(path, "rb") as fh:
        payload = pickle.load(fh)
    if (
        not isinstance(payload, dict)
        or payload.get("format") != _MODEL_FORMAT
        or payload.get("version") != _MODEL_VERSION
    ):
        raise DataError(f"{path} is not a recognized model file")
    return payload["model"]
