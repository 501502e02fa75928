"""Pure numpy fallback for the tree split-search kernel.

Numerics must stay identical to the compiled version in _split.pyx: class
counts are exact small integers, so every score is the same pair of exact
integer sums pushed through the same two divisions and one addition, and the
winner is the first strict maximum in (feature, position) scan order.  The
equivalence test in tests/test_baselines.py holds both implementations to
bit-identical output.
"""

import numpy as np

IMPLEMENTATION = "numpy"


def best_split(values, order, y, n_classes):
    """Best midpoint split over candidate columns.

    Parameters
    ----------
    values : (n, m) float64
        Node rows by candidate features.
    order : (n, m) intp
        Per-column argsort of ``values``.
    y : (n,) int64
        Class codes in [0, n_classes).

    Returns
    -------
    (j, threshold, children_gini)
        Local column index (-1 if no column admits a valid split), midpoint
        threshold, and the weighted child Gini impurity of the winner.
    """
    n = values.shape[0]
    if n < 2:
        return -1, float("nan"), float("inf")
    sorted_vals = np.take_along_axis(values, order, axis=0)
    sorted_y = y[order]

    onehot = sorted_y[:, :, np.newaxis] == np.arange(n_classes)[np.newaxis, np.newaxis, :]
    cum = np.cumsum(onehot, axis=0, dtype=np.float64)  # exact: counts < 2**53
    left = cum[:-1]
    total = cum[-1]
    right = total[np.newaxis] - left

    nl = np.arange(1, n, dtype=np.float64)[:, np.newaxis]
    nr = np.float64(n) - nl
    score = (left**2).sum(axis=2) / nl + (right**2).sum(axis=2) / nr

    valid = sorted_vals[1:] > sorted_vals[:-1]
    if not valid.any():
        return -1, float("nan"), float("inf")
    score[~valid] = -np.inf

    flat = np.ascontiguousarray(score.T).ravel()  # feature-major like the C scan
    best = int(np.argmax(flat))
    j, p = divmod(best, n - 1)
    threshold = 0.5 * (sorted_vals[p, j] + sorted_vals[p + 1, j])
    return j, float(threshold), float(1.0 - flat[best] / np.float64(n))
