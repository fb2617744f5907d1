"""Binary decision trees grown greedily on numpy arrays.

One builder serves both tasks. For regression the split criterion is the
within-node sum-of-squares decrease; for two-class problems the target is
the positive-class indicator, whose sum of squares is proportional to the
Gini impurity, so the same criterion applies and leaf values double as
positive-class fractions.

Two splitters:

* ``best``: exhaustive over candidate features, thresholds at midpoints
  between consecutive distinct sorted values. Ties are broken toward the
  lowest feature index, then the smallest threshold.
* ``random``: one uniform threshold per candidate feature between its
  minimum and maximum, the extra-trees rule. The score picks among them.

Nodes stop splitting when pure, at the depth limit, or when no candidate
split leaves ``min_samples_leaf`` on both sides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, ShapeError


@dataclass
class DecisionTree:
    """Flat array representation; ``feature < 0`` marks a leaf."""

    feature: np.ndarray  # (nodes,) int
    threshold: np.ndarray  # (nodes,) float
    left: np.ndarray  # (nodes,) int
    right: np.ndarray  # (nodes,) int
    value: np.ndarray  # (nodes,) float leaf prediction (mean target)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)


def _best_split(x_sub: np.ndarray, y_sub: np.ndarray, min_leaf: int):
    """Exhaustive search. Returns (score, column, position, order) or None."""
    m = y_sub.shape[0]
    order = np.argsort(x_sub, axis=0, kind="stable")
    xs = np.take_along_axis(x_sub, order, axis=0)
    ys = y_sub[order]
    prefix = np.cumsum(ys, axis=0)
    total = prefix[-1]
    n_left = np.arange(1, m, dtype=float)[:, None]
    n_right = m - n_left
    sum_left = prefix[:-1]
    score = sum_left**2 / n_left + (total - sum_left) ** 2 / n_right
    valid = xs[1:] > xs[:-1]
    if min_leaf > 1:
        valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    score = np.where(valid, score, -np.inf)
    # scan feature-major so ties resolve to the lowest feature index and,
    # within a feature, the smallest threshold
    flat = np.ascontiguousarray(score.T).ravel()
    best = int(np.argmax(flat))
    if flat[best] == -np.inf:
        return None
    col, pos = divmod(best, m - 1)
    return flat[best], col, pos, order


def _random_split(x_sub: np.ndarray, y_sub: np.ndarray, min_leaf: int,
                  rng: np.random.Generator):
    """Extra-trees rule: one uniform threshold per candidate feature."""
    m = y_sub.shape[0]
    mn = x_sub.min(axis=0)
    mx = x_sub.max(axis=0)
    u = rng.random(x_sub.shape[1])
    thr = mn + u * (mx - mn)
    mask = x_sub <= thr[None, :]
    n_left = mask.sum(axis=0).astype(float)
    n_right = m - n_left
    sum_left = y_sub @ mask
    total = y_sub.sum()
    with np.errstate(divide="ignore", invalid="ignore"):
        score = sum_left**2 / n_left + (total - sum_left) ** 2 / n_right
    valid = (mx > mn) & (n_left >= max(min_leaf, 1)) & (n_right >= max(min_leaf, 1))
    score = np.where(valid, score, -np.inf)
    col = int(np.argmax(score))
    if score[col] == -np.inf:
        return None
    return score[col], col, thr[col], mask[:, col]


def grow_tree(
    x: np.ndarray,
    y: np.ndarray,
    *,
    splitter: str = "best",
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    x = np.ascontiguousarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ShapeError(f"incompatible shapes x {x.shape}, y {y.shape}")
    if x.shape[0] == 0:
        raise ParameterError("cannot grow a tree on an empty dataset")
    if splitter not in ("best", "random"):
        raise ParameterError(f"unknown splitter {splitter!r}")
    if min_samples_leaf < 1:
        raise ParameterError(f"min_samples_leaf must be >= 1, got {min_samples_leaf}")
    n_features = x.shape[1]
    mtry = n_features if max_features is None else max_features
    if not 1 <= mtry <= n_features:
        raise ParameterError(
            f"max_features must be in [1, {n_features}], got {max_features}"
        )
    if (splitter == "random" or mtry < n_features) and rng is None:
        raise ParameterError("randomized growth needs an rng")

    feature: list[int] = [-2]
    threshold: list[float] = [0.0]
    left: list[int] = [-1]
    right: list[int] = [-1]
    value: list[float] = [0.0]

    def new_node() -> int:
        feature.append(-2)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    stack: list[tuple[int, np.ndarray, int]] = [(0, np.arange(x.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        y_sub = y[idx]
        value[node] = float(y_sub.mean())
        feature[node] = -1
        m = idx.size
        if (
            m < 2 * min_samples_leaf
            or (max_depth is not None and depth >= max_depth)
            or y_sub.max() == y_sub.min()
        ):
            continue
        if mtry < n_features:
            feats = np.sort(rng.choice(n_features, size=mtry, replace=False))
        else:
            feats = np.arange(n_features)
        x_sub = x[np.ix_(idx, feats)]

        if splitter == "best":
            found = _best_split(x_sub, y_sub, min_samples_leaf)
            if found is None:
                continue
            _, col, pos, order = found
            a = x_sub[order[pos, col], col]
            b = x_sub[order[pos + 1, col], col]
            thr = (a + b) / 2.0
            if thr == b:  # midpoint rounded up between adjacent floats
                thr = a
            left_idx = idx[order[: pos + 1, col]]
            right_idx = idx[order[pos + 1:, col]]
        else:
            found = _random_split(x_sub, y_sub, min_samples_leaf, rng)
            if found is None:
                continue
            _, col, thr, mask = found
            left_idx = idx[mask]
            right_idx = idx[~mask]

        feature[node] = int(feats[col])
        threshold[node] = float(thr)
        li, ri = new_node(), new_node()
        left[node] = li
        right[node] = ri
        stack.append((ri, right_idx, depth + 1))
        stack.append((li, left_idx, depth + 1))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
    )


def tree_apply(tree: DecisionTree, x: np.ndarray) -> np.ndarray:
    """Leaf node index reached by each row."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ShapeError(f"expected a 2-d feature matrix, got shape {x.shape}")
    current = np.zeros(x.shape[0], dtype=np.int64)
    while True:
        feat = tree.feature[current]
        active = feat >= 0
        if not np.any(active):
            return current
        rows = np.nonzero(active)[0]
        go_left = x[rows, feat[rows]] <= tree.threshold[current[rows]]
        current[rows] = np.where(go_left, tree.left[current[rows]],
                                 tree.right[current[rows]])


def tree_predict(tree: DecisionTree, x: np.ndarray) -> np.ndarray:
    """Leaf value (mean target) reached by each row."""
    return tree.value[tree_apply(tree, x)]
