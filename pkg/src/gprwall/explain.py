"""Attribution and physical interpretation of trained classifiers.

Shapley values here use the interventional (background-replacement) value
function: v(S) is the model's mean output when the features in S are pinned
to the explained row and the rest are drawn from a background sample.  The
exact estimator enumerates all coalitions (practical for the small feature
sets the gated network leaves alive); the sampled estimator averages marginal
contributions over random permutations and reports a standard error.

The depth mapper inverts the two-way travel-time sum t = sum_i 2 d_i
sqrt(eps_i) / c layer by layer, evaluated at either permittivity bound, which
brackets where in the wall a time-sample feature physically originates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .radargram import C_M_PER_NS, WallSpec

EXACT_LIMIT = 20


@dataclass(frozen=True)
class ShapleyResult:
    phi: np.ndarray
    base_value: float
    std_err: np.ndarray | None = None


def _coalition_values(model, x: np.ndarray, background: np.ndarray) -> np.ndarray:
    d = x.size
    n_masks = 1 << d
    B = background.shape[0]
    bits = np.arange(d)
    v = np.empty(n_masks)
    chunk = max(1, (1 << 21) // max(B * d, 1))  # keep blocks around 16 MB
    for start in range(0, n_masks, chunk):
        ms = np.arange(start, min(start + chunk, n_masks))
        member = ((ms[:, np.newaxis] >> bits) & 1).astype(bool)
        block = np.where(member[:, np.newaxis, :], x[np.newaxis, np.newaxis, :], background)
        out = np.asarray(model(block.reshape(-1, d)), dtype=np.float64)
        v[ms] = out.reshape(ms.size, B).mean(axis=1)
    return v


def exact_shapley(model, x, background, check_efficiency: bool = True) -> ShapleyResult:
    """Exact Shapley attribution of ``model`` output at row ``x``.

    ``model`` maps an (m, d) array to m outputs.  Enumeration covers all 2**d
    coalitions, so d is capped at 20.  Efficiency (base + sum(phi) equals the
    full-coalition value) is verified to 1e-9 unless disabled.
    """
    x = np.asarray(x, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    if x.ndim != 1 or background.ndim != 2 or background.shape[1] != x.size:
        raise ValueError("shape mismatch: x must be (d,) and background (B, d)")
    d = x.size
    if d > EXACT_LIMIT:
        raise ValueError(f"exact enumeration capped at {EXACT_LIMIT} features, got {d}")
    if d == 0:
        raise ValueError("need at least one feature")

    v = _coalition_values(model, x, background)
    masks = np.arange(1 << d)
    popcnt = np.zeros(masks.size, dtype=np.int64)
    for j in range(d):
        popcnt += (masks >> j) & 1
    fact = [math.factorial(s) for s in range(d + 1)]
    weights = np.array([fact[s] * fact[d - s - 1] / fact[d] for s in range(d)])

    phi = np.empty(d)
    for j in range(d):
        without = masks[(masks >> j) & 1 == 0]
        phi[j] = np.sum(weights[popcnt[without]] * (v[without | (1 << j)] - v[without]))

    base = float(v[0])
    if check_efficiency:
        gap = abs(base + phi.sum() - float(v[-1]))
        if gap >= 1e-9:
            raise RuntimeError(f"Shapley efficiency violated by {gap:.3e}")
    return ShapleyResult(phi=phi, base_value=base)


def sampled_shapley(model, x, background, n_permutations: int = 200, seed: int = 0) -> ShapleyResult:
    """Permutation-sampling Shapley estimate with per-feature standard error.

    Each sampled permutation contributes one marginal-contribution vector;
    the estimate is their mean and ``std_err`` the sample standard deviation
    over permutations divided by sqrt(n_permutations) (zero when only one
    permutation is drawn).
    """
    x = np.asarray(x, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    if x.ndim != 1 or background.ndim != 2 or background.shape[1] != x.size:
        raise ValueError("shape mismatch: x must be (d,) and background (B, d)")
    if n_permutations < 1:
        raise ValueError(f"need at least one permutation, got {n_permutations}")
    d = x.size
    rng = np.random.default_rng(seed)

    def value(member: np.ndarray) -> float:
        rows = np.where(member[np.newaxis, :], x[np.newaxis, :], background)
        return float(np.asarray(model(rows), dtype=np.float64).mean())

    base = value(np.zeros(d, dtype=bool))
    contribs = np.empty((n_permutations, d))
    for p in range(n_permutations):
        member = np.zeros(d, dtype=bool)
        prev = base
        for j in rng.permutation(d):
            member[j] = True
            cur = value(member)
            contribs[p, j] = cur - prev
            prev = cur
    phi = contribs.mean(axis=0)
    if n_permutations > 1:
        std_err = contribs.std(axis=0, ddof=1) / np.sqrt(n_permutations)
    else:
        std_err = np.zeros(d)
    return ShapleyResult(phi=phi, base_value=base, std_err=std_err)


def restricted_model(predict, template, active_idx):
    """Adapt a full-width predictor to the subspace of ``active_idx``.

    Returns a callable over (m, len(active_idx)) arrays that scatters the
    columns into a copy of ``template`` before calling ``predict``.
    """
    template = np.asarray(template, dtype=np.float64)
    active_idx = np.asarray(active_idx, dtype=np.intp)

    def f(X_active):
        X_active = np.asarray(X_active, dtype=np.float64)
        full = np.tile(template, (X_active.shape[0], 1))
        full[:, active_idx] = X_active
        return predict(full)

    return f


# --- time-to-depth mapping ---------------------------------------------------


class Bound(enum.Enum):
    """Which end of each layer's permittivity interval to evaluate at.

    Lower permittivity means a faster wave, so USE_EPS_MIN yields the deeper
    depth estimate for a given two-way time and USE_EPS_MAX the shallower.
    """

    USE_EPS_MIN = "eps_min"
    USE_EPS_MAX = "eps_max"


def depth_of_time(t_ns: float, spec: WallSpec, bound: Bound) -> tuple[float, int]:
    """Depth (m) and hosting layer index for a two-way travel time.

    Walks cumulative layer traversal times; the first layer whose cumulative
    time exceeds ``t_ns`` hosts the reflector, and the residual time converts
    to depth inside it.  A time past the back of the stack is an error.
    """
    if not (t_ns >= 0.0 and np.isfinite(t_ns)):
        raise ValueError(f"time must be finite and >= 0, got {t_ns}")
    cum = 0.0
    depth = 0.0
    for i, layer in enumerate(spec.layers):
        eps = layer.eps_min if bound is Bound.USE_EPS_MIN else layer.eps_max
        seg = 2.0 * layer.thickness_m * math.sqrt(eps) / C_M_PER_NS
        if cum + seg > t_ns:
            return depth + (t_ns - cum) * C_M_PER_NS / (2.0 * math.sqrt(eps)), i
        cum += seg
        depth += layer.thickness_m
    if t_ns == cum:  # exactly the back face
        return depth, len(spec.layers) - 1
    raise ValueError(f"time {t_ns:.6g} ns beyond stack (max {cum:.6g} ns at {bound.value})")


def stack_time_ns(spec: WallSpec, bound: Bound) -> float:
    """Two-way travel time through the whole stack at one permittivity bound.

    Times past this value (at USE_EPS_MIN, the earliest the back face can
    arrive) have no depth inside the wall — they belong to multiples or to
    whatever sits behind the stack.
    """
    cum = 0.0
    for layer in spec.layers:
        eps = layer.eps_min if bound is Bound.USE_EPS_MIN else layer.eps_max
        cum += 2.0 * layer.thickness_m * math.sqrt(eps) / C_M_PER_NS
    return cum


@dataclass(frozen=True)
class FeatureDepth:
    time_ns: float
    depth_min_m: float
    depth_max_m: float
    layer_shallow: int
    layer_deep: int


def feature_depth_report(feature_times_ns, spec: WallSpec) -> list[FeatureDepth]:
    """Bracket each feature time between both permittivity bounds.

    The high-permittivity bound gives the shallow end of the interval and the
    low bound the deep end; with degenerate bounds the interval collapses to
    a point.  Times beyond the stack at the low bound raise.
    """
    rows = []
    for t in np.asarray(feature_times_ns, dtype=np.float64):
        shallow, layer_shallow = depth_of_time(float(t), spec, Bound.USE_EPS_MAX)
        deep, layer_deep = depth_of_time(float(t), spec, Bound.USE_EPS_MIN)
        rows.append(FeatureDepth(float(t), shallow, deep, layer_shallow, layer_deep))
    return rows
