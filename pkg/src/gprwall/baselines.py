"""Classical baselines built from first principles.

Distance-weighted k-nearest-neighbors, a CART-style Gini decision tree, and a
bootstrap random forest with impurity importances.  The split search runs on
the compiled kernel when the extension built, otherwise on the numpy
fallback; set GPRWALL_PURE_SPLIT=1 to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

if os.environ.get("GPRWALL_PURE_SPLIT"):
    from . import _split_py as _split_impl
else:
    try:
        from . import _split as _split_impl
    except ImportError:  # extension not built
        from . import _split_py as _split_impl

SPLIT_IMPLEMENTATION: str = _split_impl.IMPLEMENTATION


@dataclass
class Dataset:
    """Rows are traces; features are time samples (plus optional extras).

    ``feature_times_ns[j]`` is the two-way time of feature j, or NaN for
    features that are not time samples (e.g. an appended stud indicator).
    ``groups[i]`` names the scan a row came from, for grouped cross-validation.
    """

    X: np.ndarray
    y: np.ndarray
    feature_times_ns: np.ndarray | None = None
    groups: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise ValueError(f"shape mismatch: X must be 2-D, got {self.X.ndim}-D")
        if not np.isfinite(self.X).all():
            raise ValueError("non-finite amplitude in feature matrix")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError(f"label length: {self.y.shape[0]} labels for {self.X.shape[0]} rows")
        if self.y.size and self.y.min() < 0:
            raise ValueError("labels must be nonnegative integer codes")
        if self.feature_times_ns is not None:
            self.feature_times_ns = np.asarray(self.feature_times_ns, dtype=np.float64)
            if self.feature_times_ns.shape != (self.X.shape[1],):
                raise ValueError("shape mismatch: feature_times_ns must have one entry per feature")
        if self.groups is not None:
            self.groups = np.asarray(self.groups)
            if self.groups.shape != (self.X.shape[0],):
                raise ValueError("label length: groups must have one entry per row")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"shape mismatch: {y_true.shape} vs {y_pred.shape}")
    return float(np.mean(y_true == y_pred))


# --- k-nearest-neighbors ------------------------------------------------


def knn_predict(X_train, y_train, X_query, k: int = 3) -> np.ndarray:
    """Inverse-distance weighted KNN vote.

    Among the k nearest training rows (ties in distance broken by training
    index), labels are scored by summed 1/distance weights.  If any selected
    neighbor sits at distance zero the exact matches win outright by majority.
    All remaining ties fall to the lowest label.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    X_query = np.asarray(X_query, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    if not 1 <= k <= X_train.shape[0]:
        raise ValueError(f"k must lie in [1, {X_train.shape[0]}], got {k}")
    sq = (
        (X_query**2).sum(axis=1)[:, np.newaxis]
        - 2.0 * X_query @ X_train.T
        + (X_train**2).sum(axis=1)[np.newaxis, :]
    )
    dists = np.sqrt(np.maximum(sq, 0.0))

    n_labels = int(y_train.max()) + 1
    out = np.empty(X_query.shape[0], dtype=np.int64)
    for q in range(X_query.shape[0]):
        nearest = np.argsort(dists[q], kind="stable")[:k]
        d = dists[q, nearest]
        labels = y_train[nearest]
        if (d == 0.0).any():
            votes = np.bincount(labels[d == 0.0], minlength=n_labels)
        else:
            votes = np.bincount(labels, weights=1.0 / d, minlength=n_labels)
        out[q] = int(np.argmax(votes))  # first max = lowest label
    return out


# --- CART tree and forest ------------------------------------------------


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    f = counts / n
    return float(1.0 - (f**2).sum())


class DecisionTree:
    """Binary CART tree with Gini splits and midpoint thresholds.

    ``max_features`` caps the candidate features scanned per node (None means
    all, "sqrt" the usual forest default).  When no candidate in the sampled
    batch admits a valid split, the next batch of the per-node feature
    permutation is scanned, so a node only becomes a leaf once it is pure,
    hits ``max_depth``, or no feature varies within it.  Predictions at a
    leaf take the majority class, ties to the lowest label.
    """

    def __init__(self, max_depth: int | None = None, max_features=None, seed: int = 0):
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed

    def _resolved_max_features(self, n_features: int) -> int:
        if self.max_features is None:
            return n_features
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(n_features)))
        k = int(self.max_features)
        if not 1 <= k <= n_features:
            raise ValueError(f"max_features must lie in [1, {n_features}], got {k}")
        return k

    def fit(self, X, y, n_classes: int | None = None, _rng: np.random.Generator | None = None):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("shape mismatch: X must be (n, d) with matching y")
        if X.shape[0] == 0:
            raise ValueError("cannot fit a tree on zero rows")
        # n_classes may exceed max(y)+1, e.g. when a bootstrap resample in a
        # forest loses a class but the vote axis must stay aligned.
        self.n_classes_ = n_classes if n_classes is not None else int(y.max()) + 1
        self.n_features_ = X.shape[1]
        rng = _rng if _rng is not None else np.random.default_rng(self.seed)
        k = self._resolved_max_features(self.n_features_)

        feature, threshold, left, right, counts = [], [], [], [], []
        raw_importance = np.zeros(self.n_features_)
        n_root = X.shape[0]

        # Depth-first growth; children are pushed right-first so the left
        # subtree is laid out before the right one, as recursion would.
        stack: list[tuple[np.ndarray, int, int, bool]] = [(np.arange(n_root), 0, -1, False)]
        while stack:
            rows, depth, parent, is_left = stack.pop()
            node_id = len(feature)
            if parent >= 0:
                (left if is_left else right)[parent] = node_id
            cnt = np.bincount(y[rows], minlength=self.n_classes_)
            feature.append(-1)
            threshold.append(np.nan)
            left.append(-1)
            right.append(-1)
            counts.append(cnt)

            node_gini = _gini(cnt)
            if (
                cnt.max() == rows.size
                or rows.size < 2
                or (self.max_depth is not None and depth >= self.max_depth)
            ):
                continue

            split = self._find_split(X, y, rows, k, rng)
            if split is None:
                continue
            feat, thr, children_gini = split
            feature[node_id] = feat
            threshold[node_id] = thr
            raw_importance[feat] += (rows.size / n_root) * max(node_gini - children_gini, 0.0)
            go_left = X[rows, feat] <= thr
            stack.append((rows[~go_left], depth + 1, node_id, False))
            stack.append((rows[go_left], depth + 1, node_id, True))

        self.feature_ = np.asarray(feature, dtype=np.intp)
        self.threshold_ = np.asarray(threshold)
        self.left_ = np.asarray(left, dtype=np.intp)
        self.right_ = np.asarray(right, dtype=np.intp)
        self.counts_ = np.asarray(counts)
        self.raw_importance_ = raw_importance
        return self

    def _find_split(self, X, y, rows, k, rng):
        if k < self.n_features_:
            perm = rng.permutation(self.n_features_)
        else:
            perm = np.arange(self.n_features_)
        y_node = np.ascontiguousarray(y[rows])
        for start in range(0, self.n_features_, k):
            cand = perm[start : start + k]
            values = np.ascontiguousarray(X[np.ix_(rows, cand)])
            order = np.ascontiguousarray(np.argsort(values, axis=0))
            j, thr, children_gini = _split_impl.best_split(values, order, y_node, self.n_classes_)
            if j >= 0:
                return int(cand[j]), thr, children_gini
        return None

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        cur = np.zeros(X.shape[0], dtype=np.intp)
        while True:
            feats = self.feature_[cur]
            active = feats >= 0
            if not active.any():
                break
            rows = np.flatnonzero(active)
            go_left = X[rows, feats[rows]] <= self.threshold_[cur[rows]]
            cur[rows] = np.where(go_left, self.left_[cur[rows]], self.right_[cur[rows]])
        return np.argmax(self.counts_[cur], axis=1).astype(np.int64)

    def gini_importance(self) -> np.ndarray:
        """Weighted impurity decreases per feature, normalized to sum 1.

        All-zero (not normalized) when the tree never split.
        """
        total = self.raw_importance_.sum()
        if total > 0.0:
            return self.raw_importance_ / total
        return self.raw_importance_.copy()


class RandomForest:
    """Bootstrap ensemble of CART trees voting by majority.

    Per-tree randomness (bootstrap resample and per-node feature subsets)
    comes from independent child streams of one seed sequence, so trees are
    reproducible individually and the ensemble is order-independent.
    """

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: int | None = None,
        max_features="sqrt",
        seed: int = 0,
    ):
        if n_trees < 1:
            raise ValueError(f"need at least one tree, got {n_trees}")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes_ = int(y.max()) + 1 if y.size else 1
        self.n_features_ = X.shape[1]
        n = X.shape[0]
        self.trees_ = []
        for child in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            rng = np.random.default_rng(child)
            boot = rng.integers(0, n, n)
            tree = DecisionTree(max_depth=self.max_depth, max_features=self.max_features)
            tree.fit(X[boot], y[boot], n_classes=self.n_classes_, _rng=rng)
            self.trees_.append(tree)
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros((X.shape[0], self.n_classes_))
        for tree in self.trees_:
            pred = tree.predict(X)
            votes[np.arange(X.shape[0]), pred] += 1.0
        return votes / self.n_trees

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1).astype(np.int64)

    def gini_importance(self) -> np.ndarray:
        raw = np.mean([t.raw_importance_ for t in self.trees_], axis=0)
        total = raw.sum()
        if total > 0.0:
            return raw / total
        return raw


def fit_tree(X, y, max_depth=None, seed: int = 0) -> DecisionTree:
    return DecisionTree(max_depth=max_depth, seed=seed).fit(X, y)


def fit_forest(X, y, n_trees: int = 100, max_depth=None, seed: int = 0) -> RandomForest:
    return RandomForest(n_trees=n_trees, max_depth=max_depth, seed=seed).fit(X, y)
