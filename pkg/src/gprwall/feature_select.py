"""Feature-set reduction and validation-protocol utilities.

Three reduction routes — hierarchical feature agglomeration, permutation
importance, and recursive elimination driven by forest impurity importances —
plus the fold builders they are scored with.  Grouped folds keep all traces
of a scan on one side of every split so scores measure transfer to unseen
walls rather than interpolation within a wall.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist

from .baselines import RandomForest, accuracy


# --- cross-validation folds ----------------------------------------------


@dataclass(frozen=True)
class CvScheme:
    """Fold assignment per row. ``assignments[i]`` is the validation fold of
    row i; every row validates exactly once."""

    kind: str
    n_folds: int
    assignments: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "assignments", np.asarray(self.assignments, dtype=np.intp))
        if self.n_folds < 2:
            raise ValueError(f"need at least 2 folds, got {self.n_folds}")
        present = np.unique(self.assignments)
        if present.min() < 0 or present.max() >= self.n_folds or present.size != self.n_folds:
            raise ValueError("every fold must receive at least one row")

    def split(self):
        for f in range(self.n_folds):
            val = np.flatnonzero(self.assignments == f)
            train = np.flatnonzero(self.assignments != f)
            yield train, val


def make_folds(
    y,
    n_folds: int = 5,
    kind: str = "stratified",
    groups=None,
    seed: int = 0,
    validation_groups: Sequence[Sequence] | None = None,
) -> CvScheme:
    """Build a stratified or stratified-group fold assignment.

    stratified: rows of each class are shuffled and dealt round-robin, so
    per-fold class counts differ by at most one.

    stratified_group: whole groups go to folds.  With ``validation_groups``
    the caller pins exactly which groups validate in each fold (a list of
    group collections, one per fold, covering every group once); otherwise
    groups are placed greedily, largest first, onto the fold whose class
    balance they improve most.  Every fold's training complement must still
    contain all classes, otherwise the requested scheme is infeasible.
    """
    y = np.asarray(y)
    n = y.shape[0]
    rng = np.random.default_rng(seed)

    if kind == "stratified":
        if validation_groups is not None:
            raise ValueError("validation_groups only applies to stratified_group folds")
        assignments = np.empty(n, dtype=np.intp)
        offset = 0
        for cls in np.unique(y):
            idx = np.flatnonzero(y == cls)
            rng.shuffle(idx)
            assignments[idx] = (np.arange(idx.size) + offset) % n_folds
            offset += idx.size  # rotate the dealing start so remainders spread
        return CvScheme("stratified", n_folds, assignments)

    if kind != "stratified_group":
        raise ValueError(f"unknown fold kind {kind!r}")
    if groups is None:
        raise ValueError("stratified_group folds need per-row groups")
    groups = np.asarray(groups)
    if groups.shape != (n,):
        raise ValueError("label length: groups must have one entry per row")
    unique_groups = list(dict.fromkeys(groups.tolist()))  # stable order

    if validation_groups is not None:
        if len(validation_groups) != n_folds:
            raise ValueError(f"got {len(validation_groups)} validation sets for {n_folds} folds")
        seen: dict = {}
        for f, val_set in enumerate(validation_groups):
            for g in val_set:
                if g in seen:
                    raise ValueError(f"group {g!r} assigned to folds {seen[g]} and {f}")
                seen[g] = f
        missing = [g for g in unique_groups if g not in seen]
        extra = [g for g in seen if g not in set(unique_groups)]
        if missing or extra:
            raise ValueError(f"validation groups must cover every group once (missing {missing}, unknown {extra})")
        group_fold = seen
    else:
        if len(unique_groups) < n_folds:
            raise ValueError(f"{len(unique_groups)} groups cannot fill {n_folds} folds")
        classes = np.unique(y)
        class_of = {c: i for i, c in enumerate(classes)}
        counts = {g: np.zeros(classes.size) for g in unique_groups}
        for gi, yi in zip(groups, y):
            counts[gi][class_of[yi]] += 1
        order = sorted(unique_groups, key=lambda g: (-counts[g].sum(), str(g)))
        fold_counts = np.zeros((n_folds, classes.size))
        group_fold = {}
        target = sum(counts.values()) / n_folds
        for g in order:
            best, best_cost = 0, np.inf
            for f in range(n_folds):
                trial = fold_counts[f] + counts[g]
                cost = float(((trial - target) ** 2).sum())
                if cost < best_cost - 1e-12:
                    best, best_cost = f, cost
            group_fold[g] = best
            fold_counts[best] += counts[g]

    assignments = np.asarray([group_fold[g] for g in groups.tolist()], dtype=np.intp)
    scheme = CvScheme("stratified_group", n_folds, assignments)
    for f in range(n_folds):
        train_classes = np.unique(y[assignments != f])
        if train_classes.size < np.unique(y).size:
            raise ValueError(
                f"infeasible stratification: fold {f} leaves training data without "
                f"class(es) {sorted(set(np.unique(y)) - set(train_classes))}"
            )
    return scheme


# --- feature agglomeration -------------------------------------------------


@dataclass(frozen=True)
class ClusterMap:
    """Feature -> cluster assignment with contiguous ids in first-appearance
    order.  ``exemplars`` is populated in exemplar mode only."""

    assignments: np.ndarray
    n_clusters: int
    metric: str
    mode: str
    exemplars: np.ndarray | None = None

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)

    def transform(self, X) -> np.ndarray:
        """Apply a fitted clustering to new rows of the same feature space."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.assignments.size:
            raise ValueError(
                f"shape mismatch: expected {self.assignments.size} feature columns"
            )
        if self.mode == "exemplar":
            return X[:, self.exemplars]
        out = np.empty((X.shape[0], self.n_clusters))
        for c in range(self.n_clusters):
            out[:, c] = X[:, self.members(c)].mean(axis=1)
        return out


def _contiguous_ids(raw: np.ndarray) -> np.ndarray:
    remap: dict[int, int] = {}
    out = np.empty(raw.size, dtype=np.intp)
    for i, r in enumerate(raw.tolist()):
        if r not in remap:
            remap[r] = len(remap)
        out[i] = remap[r]
    return out


def agglomerate(X, n_clusters: int, metric: str = "euclidean", mode: str = "pooled"):
    """Average-linkage agglomeration of feature columns.

    Returns ``(ClusterMap, Xt)`` where ``Xt`` has one column per cluster:
    the member mean in pooled mode, or the member column nearest the cluster
    centroid (ties to the lowest feature index) in exemplar mode.  Under the
    cosine metric, zero-norm columns have no direction and are split off as
    their own singleton clusters before linkage.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("shape mismatch: X must be 2-D")
    n_features = X.shape[1]
    if not 1 <= n_clusters <= n_features:
        raise ValueError(f"n_clusters must lie in [1, {n_features}], got {n_clusters}")
    if metric not in ("euclidean", "cosine"):
        raise ValueError(f"unknown metric {metric!r}")
    if mode not in ("pooled", "exemplar"):
        raise ValueError(f"unknown mode {mode!r}")

    cols = X.T
    degenerate = np.zeros(n_features, dtype=bool)
    if metric == "cosine":
        degenerate = np.linalg.norm(cols, axis=1) < 1e-12

    raw = np.empty(n_features, dtype=np.intp)
    n_deg = int(degenerate.sum())
    raw[degenerate] = np.arange(n_deg)
    live = np.flatnonzero(~degenerate)
    k_live = n_clusters - n_deg
    if live.size:
        if k_live < 1:
            raise ValueError(
                f"{n_deg} zero-norm columns already exceed n_clusters={n_clusters} under cosine"
            )
        if k_live >= live.size:
            raw[live] = n_deg + np.arange(live.size)
        else:
            z = linkage(pdist(cols[live], metric=metric), method="average")
            raw[live] = n_deg + fcluster(z, t=k_live, criterion="maxclust")
    elif n_clusters != n_deg:
        raise ValueError("all columns are zero-norm; n_clusters must equal n_features")

    assignments = _contiguous_ids(raw)
    # fcluster cannot cut below a merge height of zero, so exact duplicate
    # columns can leave fewer clusters than requested; top up by splitting a
    # singleton off the largest cluster (deterministically) until the count
    # holds.
    while assignments.max() + 1 < n_clusters:
        sizes = np.bincount(assignments)
        big = int(np.argmax(sizes))
        assignments[np.flatnonzero(assignments == big)[-1]] = assignments.max() + 1
    exemplars = None
    if mode == "pooled":
        Xt = np.empty((X.shape[0], n_clusters))
        for c in range(n_clusters):
            Xt[:, c] = X[:, assignments == c].mean(axis=1)
    else:
        exemplars = np.empty(n_clusters, dtype=np.intp)
        for c in range(n_clusters):
            members = np.flatnonzero(assignments == c)
            centroid = cols[members].mean(axis=0)
            if metric == "euclidean":
                d = np.linalg.norm(cols[members] - centroid, axis=1)
            else:
                norms = np.linalg.norm(cols[members], axis=1) * max(np.linalg.norm(centroid), 1e-300)
                d = 1.0 - (cols[members] @ centroid) / np.where(norms > 0, norms, 1.0)
            exemplars[c] = members[int(np.argmin(d))]  # first min = lowest index
        Xt = X[:, exemplars]
    return ClusterMap(assignments, n_clusters, metric, mode, exemplars), Xt


# --- permutation feature importance ----------------------------------------


def pfi(model, X, y, n_repeats: int = 10, seed: int = 0) -> np.ndarray:
    """Permutation importance: baseline accuracy minus the mean accuracy over
    ``n_repeats`` shuffles of each column in turn.  Negative values mean the
    shuffle helped; a column the model never reads scores exactly zero."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if n_repeats < 1:
        raise ValueError(f"n_repeats must be >= 1, got {n_repeats}")
    rng = np.random.default_rng(seed)
    baseline = accuracy(y, model.predict(X))
    out = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        scores = np.empty(n_repeats)
        for r in range(n_repeats):
            Xp = X.copy()
            Xp[:, j] = Xp[rng.permutation(X.shape[0]), j]
            scores[r] = accuracy(y, model.predict(Xp))
        out[j] = baseline - scores.mean()
    return out


# --- recursive feature elimination with cross-validation --------------------


@dataclass(frozen=True)
class RfecvResult:
    # (n_features, mean CV accuracy, std over folds) per elimination round
    curve: tuple[tuple[int, float, float], ...]
    selected: np.ndarray
    # mean/std of test accuracy over repeated refits on the selected subset;
    # NaN when no test split was supplied
    test_accuracy_mean: float
    test_accuracy_std: float


def rfecv(
    X,
    y,
    scheme: CvScheme,
    step: int = 5,
    estimator: Callable[[int], object] | None = None,
    seed: int = 0,
    X_test=None,
    y_test=None,
    n_test_repeats: int = 10,
) -> RfecvResult:
    """Recursive elimination of the ``step`` least important features.

    At each round the current feature set is scored by cross-validation under
    ``scheme`` and ranked by the impurity importance of an estimator fit on
    all rows; the lowest ``step`` features drop (down to a final single
    feature).  ``selected`` is the feature set of the round with the best
    mean CV accuracy, ties to the smaller set.  ``estimator`` is a factory
    ``seed -> model`` with fit/predict/gini_importance; default is the
    100-tree forest.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    if scheme.assignments.shape[0] != X.shape[0]:
        raise ValueError(
            f"label length: fold assignments cover {scheme.assignments.shape[0]} rows, X has {X.shape[0]}"
        )
    if estimator is None:
        estimator = lambda s: RandomForest(seed=s)  # noqa: E731
    rng = np.random.default_rng(seed)

    features = np.arange(X.shape[1])
    curve: list[tuple[int, float, float]] = []
    subsets: list[np.ndarray] = []
    while True:
        fold_scores = []
        for train, val in scheme.split():
            model = estimator(int(rng.integers(2**31)))
            model.fit(X[np.ix_(train, features)], y[train])
            fold_scores.append(accuracy(y[val], model.predict(X[np.ix_(val, features)])))
        curve.append((features.size, float(np.mean(fold_scores)), float(np.std(fold_scores))))
        subsets.append(features.copy())
        if features.size == 1:
            break
        ranker = estimator(int(rng.integers(2**31)))
        ranker.fit(X[:, features], y)
        importance = ranker.gini_importance()
        n_drop = min(step, features.size - 1)
        drop = np.argsort(importance, kind="stable")[:n_drop]
        features = np.delete(features, drop)

    best = max(range(len(curve)), key=lambda i: (curve[i][1], -curve[i][0]))
    selected = subsets[best]

    test_mean = test_std = float("nan")
    if X_test is not None:
        X_test = np.asarray(X_test, dtype=np.float64)
        y_test = np.asarray(y_test, dtype=np.int64)
        scores = np.empty(n_test_repeats)
        for r in range(n_test_repeats):
            model = estimator(int(rng.integers(2**31)))
            model.fit(X[:, selected], y)
            scores[r] = accuracy(y_test, model.predict(X_test[:, selected]))
        test_mean, test_std = float(scores.mean()), float(scores.std())
    return RfecvResult(tuple(curve), selected, test_mean, test_std)
