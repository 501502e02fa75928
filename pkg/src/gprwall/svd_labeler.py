"""Weak stud labeling from the first singular component of a scan.

Across the traces of one wall scan the dominant variation is stud vs cavity,
so the first right-singular vector of the amplitude matrix separates the two:
stud traces show up as localized excursions away from the vector's mean.
Labeling is a two-step recipe: find the (up to) three most prominent local
extrema on the excursion side, then grow each peak outward while the
deviation from the mean stays above a calibrated fraction of the mean.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .radargram import BScan, LabelSource, StudLabels

DEFAULT_TARGET_WIDTH_M = 0.0381  # nominal framing-lumber face: 1.5 in
MAX_STUDS_PER_SCAN = 3


def first_component(scan: BScan | np.ndarray) -> np.ndarray:
    """First right-singular vector over traces, unit norm, mean >= 0.

    Sign normalization makes the vector reproducible: SVD fixes singular
    vectors only up to sign, so the convention here is a nonnegative mean.
    """
    a = scan.amplitudes if isinstance(scan, BScan) else np.asarray(scan, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"shape mismatch: expected 2-D amplitude matrix, got {a.ndim}-D")
    v = np.linalg.svd(a, full_matrices=False)[2][0]
    if v.mean() < 0.0:
        v = -v
    return v


def _extremal_runs(v: np.ndarray) -> tuple[list[int], list[int]]:
    """Centers of locally maximal and locally minimal runs of equal values.

    Plateaus count once; array ends count when the single inner neighbor is
    on the right side.
    """
    starts = [0]
    for i in range(1, v.size):
        if v[i] != v[i - 1]:
            starts.append(i)
    starts.append(v.size)
    maxima, minima = [], []
    for r in range(len(starts) - 1):
        lo, hi = starts[r], starts[r + 1]
        val = v[lo]
        left = v[lo - 1] if lo > 0 else None
        right = v[hi] if hi < v.size else None
        center = (lo + hi - 1) // 2
        if (left is None or val > left) and (right is None or val > right):
            maxima.append(center)
        if (left is None or val < left) and (right is None or val < right):
            minima.append(center)
    return maxima, minima


def detect_studs(component: np.ndarray, fraction: float, min_separation: int = 1) -> StudLabels:
    """Label stud traces from a singular component.

    Parameters
    ----------
    component : 1-D array over traces (any scale; the rule is scale free).
    fraction : float
        Deviation threshold as a fraction of the component mean; a trace
        belongs to a stud while |v - mean| >= fraction * |mean|.
    min_separation : int
        Peaks closer than this many traces to an already accepted, more
        prominent peak are treated as the same stud.
    """
    v = np.asarray(component, dtype=np.float64)
    if v.ndim != 1 or v.size < 3:
        raise ValueError("component must be a 1-D vector with at least 3 traces")
    if not np.isfinite(v).all():
        raise ValueError("non-finite amplitude in component")
    if fraction <= 0.0:
        raise ValueError(f"fraction must be positive, got {fraction}")
    if min_separation < 1:
        raise ValueError(f"min_separation must be >= 1, got {min_separation}")

    mean = v.mean()
    if abs(mean) < 1e-12 * max(1.0, float(np.abs(v).max())):
        raise ValueError("uncalibratable component: mean is zero, fraction-of-mean threshold undefined")
    if v.max() == v.min():
        raise ValueError("uncalibratable component: constant vector has zero deviation everywhere")
    maxima, minima = _extremal_runs(v)

    dev = v - mean
    all_extrema = maxima + minima
    lead = min(all_extrema, key=lambda i: (-abs(dev[i]), i))
    side = maxima if dev[lead] > 0 else minima

    peaks: list[int] = []
    for i in sorted(side, key=lambda i: (-abs(dev[i]), i)):
        if len(peaks) == MAX_STUDS_PER_SCAN:
            break
        if all(abs(i - p) >= min_separation for p in peaks):
            peaks.append(i)

    threshold = fraction * abs(mean)
    mask = np.zeros(v.size, dtype=bool)
    for p in peaks:
        if abs(dev[p]) < threshold:
            continue
        lo = p
        while lo > 0 and abs(dev[lo - 1]) >= threshold:
            lo -= 1
        hi = p
        while hi < v.size - 1 and abs(dev[hi + 1]) >= threshold:
            hi += 1
        mask[lo : hi + 1] = True
    return StudLabels(mask, LabelSource.SVD_DERIVED)


@dataclass(frozen=True)
class CalibrationResult:
    fraction: float
    modal_width_m: float
    mean_width_m: float
    n_studs: int
    # (fraction, modal width, mean width, stud count) for every grid point
    # that produced at least one stud; empty rows are dropped.
    table: tuple[tuple[float, float, float, int], ...]


def _run_widths(mask: np.ndarray) -> list[int]:
    widths, run = [], 0
    for flag in mask:
        if flag:
            run += 1
        elif run:
            widths.append(run)
            run = 0
    if run:
        widths.append(run)
    return widths


def calibrate_threshold(
    components,
    trace_spacing_m: float,
    target_width_m: float = DEFAULT_TARGET_WIDTH_M,
    grid=None,
    min_separation: int | None = None,
) -> CalibrationResult:
    """Pick the deviation fraction whose stud-width mode lands on the target.

    Sweeps ``fraction`` over ``grid`` (default 0.05..3.00 in 0.05 steps),
    labels every supplied component, and scores each fraction by how close
    the modal detected width is to ``target_width_m``; ties fall to the mean
    width, then to the smaller fraction.  Raises if no grid point detects a
    single stud anywhere ("no studs detected").
    """
    if isinstance(components, np.ndarray) and components.ndim == 1:
        components = [components]
    components = [np.asarray(c, dtype=np.float64) for c in components]
    if not components:
        raise ValueError("need at least one component to calibrate")
    if trace_spacing_m <= 0.0:
        raise ValueError(f"trace spacing must be positive, got {trace_spacing_m}")
    if target_width_m <= 0.0:
        raise ValueError(f"target width must be positive, got {target_width_m}")
    if grid is None:
        grid = np.round(np.arange(1, 61) * 0.05, 10)
    if min_separation is None:
        min_separation = max(1, round(target_width_m / (2.0 * trace_spacing_m)))

    rows = []
    for fraction in grid:
        widths: list[int] = []
        for comp in components:
            labels = detect_studs(comp, float(fraction), min_separation)
            widths.extend(_run_widths(labels.per_trace))
        if not widths:
            continue
        counts = Counter(widths)
        top = max(counts.values())
        modal_traces = min(
            (w for w, c in counts.items() if c == top),
            key=lambda w: (abs(w * trace_spacing_m - target_width_m), w),
        )
        modal = modal_traces * trace_spacing_m
        mean = float(np.mean(widths)) * trace_spacing_m
        rows.append((float(fraction), modal, mean, len(widths)))

    if not rows:
        raise ValueError("no studs detected at any calibration fraction")
    best = min(rows, key=lambda r: (abs(r[1] - target_width_m), abs(r[2] - target_width_m), r[0]))
    return CalibrationResult(
        fraction=best[0],
        modal_width_m=best[1],
        mean_width_m=best[2],
        n_studs=best[3],
        table=tuple(rows),
    )
