"""Random forest of CART trees grown on Gini impurity.

Each tree is stored as parallel node arrays. Internal nodes send ``x[feature]
<= threshold`` left; leaves carry ``leaf_class`` (1 High, 0 Low) and have
``feature == -1``. The forest score is the fraction of trees voting High.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import EmptyNode

LEAF = -1


def gini_impurity(class_counts: tuple[int, int]) -> float:
    """``1 - p_high^2 - p_low^2`` for ``(n_high, n_low)`` counts."""
    n_high, n_low = class_counts
    total = n_high + n_low
    if total < 1:
        raise EmptyNode("gini impurity of an empty node is undefined")
    p_high = n_high / total
    p_low = n_low / total
    return 1.0 - p_high * p_high - p_low * p_low


def _best_split_for_feature(x: np.ndarray, y: np.ndarray):
    """Lowest weighted child impurity over midpoints of ``x``.

    Returns ``(impurity_sum, threshold)`` where ``impurity_sum`` is the
    size-weighted Gini of both children (unnormalized), or ``None`` when
    ``x`` is constant. Equal impurities resolve to the lowest threshold.
    """
    order = np.argsort(x, kind="stable")
    xs = x[order]
    distinct = xs[1:] > xs[:-1]
    if not distinct.any():
        return None
    n = len(xs)
    pos_left = np.cumsum(y[order])[:-1].astype(np.float64)
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    pos_right = pos_left[-1] + y[order][-1] - pos_left
    # n * gini = 2 * pos * (n - pos) / n
    impurity = 2.0 * pos_left * (n_left - pos_left) / n_left + 2.0 * pos_right * (n_right - pos_right) / n_right
    impurity = np.where(distinct, impurity, np.inf)
    i = int(np.argmin(impurity))
    lo, hi = xs[i], xs[i + 1]
    threshold = lo + (hi - lo) / 2.0
    if threshold >= hi:
        # adjacent floats: the midpoint rounds up onto the right value
        threshold = lo
    return float(impurity[i]), float(threshold)


def build_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, max_features: int,
               min_samples_split: int = 2, max_depth: int | None = None) -> dict[str, np.ndarray]:
    """Grow one unpruned CART tree on ``(X, y)``.

    At each node ``max_features`` features are drawn without replacement;
    if all of them are constant on the node, further features are drawn in
    the same random order until one varies. Among candidates the lowest
    impurity wins, ties going to the lowest feature index and then the
    lowest threshold.
    """
    n_features = X.shape[1]
    feature, threshold, left, right, leaf_class = [], [], [], [], []

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        leaf_class.append(LEAF)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        y_node = y[idx]
        n_high = int(y_node.sum())
        n = len(idx)
        splittable = (
            0 < n_high < n
            and n >= min_samples_split
            and (max_depth is None or depth < max_depth)
        )
        best = None
        if splittable:
            perm = rng.permutation(n_features)
            candidates = []
            evaluated = 0
            for f in perm:
                if evaluated >= max_features and candidates:
                    break
                evaluated += 1
                result = _best_split_for_feature(X[idx, f], y_node)
                if result is not None:
                    candidates.append((int(f), *result))
            for f, imp, thr in sorted(candidates):
                if best is None or imp < best[1]:
                    best = (f, imp, thr)
        if best is None:
            # majority vote, ties to Low
            leaf_class[node] = 1 if 2 * n_high > n else 0
            continue
        f, _, thr = best
        goes_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left_node = new_node()
        right_node = new_node()
        left[node] = left_node
        right[node] = right_node
        # push right first so the left subtree is numbered first
        stack.append((right_node, idx[~goes_left], depth + 1))
        stack.append((left_node, idx[goes_left], depth + 1))

    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold, dtype=np.float64),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "leaf_class": np.array(leaf_class, dtype=np.int64),
    }


def predict_tree(tree: dict[str, np.ndarray], X: np.ndarray) -> np.ndarray:
    """0/1 vote of a single tree for each row of ``X``."""
    node = np.zeros(len(X), dtype=np.int64)
    feature, threshold = tree["feature"], tree["threshold"]
    left, right = tree["left"], tree["right"]
    rows = np.arange(len(X))
    active = feature[node] != LEAF
    while active.any():
        r = rows[active]
        n = node[r]
        go_left = X[r, feature[n]] <= threshold[n]
        node[r] = np.where(go_left, left[n], right[n])
        active = feature[node] != LEAF
    return tree["leaf_class"][node]


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """Independent generator per tree, so forests do not depend on build order."""
    return np.random.default_rng([seed, tree_index])


def fit(X, y, params, rng, seed=0):
    n, n_features = X.shape
    max_features = params["max_features"] or math.ceil(math.sqrt(n_features))
    trees = []
    for t in range(params["n_trees"]):
        trng = tree_rng(seed, t)
        if params["bootstrap"]:
            idx = trng.integers(0, n, n)
        else:
            idx = np.arange(n)
        trees.append(
            build_tree(X[idx], y[idx], trng, max_features, params["min_samples_split"], params["max_depth"])
        )
    return {"trees": trees}, {"converged": True, "max_features": int(max_features)}


def predict_proba(state, params, X):
    trees = state["trees"]
    votes = np.zeros(len(X), dtype=np.int64)
    for tree in trees:
        votes += predict_tree(tree, X)
    return votes / len(trees)


def check_state(state) -> None:
    trees = state["trees"]
    if len(trees) < 1:
        raise ValueError("forest has no trees")
    for t, tree in enumerate(trees):
        check_tree(tree, where=f"tree {t}")


def check_tree(tree, where: str = "tree") -> None:
    """Raise ``ValueError`` unless ``tree`` is a well-formed binary tree rooted at node 0."""
    feature = np.asarray(tree["feature"])
    size = len(feature)
    arrays = [np.asarray(tree[k]) for k in ("threshold", "left", "right", "leaf_class")]
    if size == 0 or any(len(a) != size for a in arrays):
        raise ValueError(f"{where}: node arrays are empty or of unequal length")
    _, left, right, leaf_class = arrays
    seen = np.zeros(size, dtype=bool)
    stack = [0]
    while stack:
        node = stack.pop()
        if not 0 <= node < size or seen[node]:
            raise ValueError(f"{where}: node {node} is out of range or reached twice")
        seen[node] = True
        if feature[node] == LEAF:
            if leaf_class[node] not in (0, 1):
                raise ValueError(f"{where}: leaf {node} has no class")
        else:
            if not 0 <= feature[node]:
                raise ValueError(f"{where}: node {node} has invalid feature {feature[node]}")
            stack.extend((int(left[node]), int(right[node])))
    if not seen.all():
        raise ValueError(f"{where}: unreachable nodes")
    if not np.all(np.isfinite(np.asarray(tree["threshold"], dtype=np.float64))):
        raise ValueError(f"{where}: non-finite threshold")
