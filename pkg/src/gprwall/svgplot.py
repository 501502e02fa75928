"""Minimal deterministic SVG emitters for reports.

No plotting dependency: each function formats shapes straight into an SVG
string with fixed canvas geometry and %.6g coordinates, so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 60, 20, 30, 45  # plot margins


def _f(x) -> str:
    return format(float(x), ".6g")


def _doc(body: list[str], width: int = _W, height: int = _H) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _frame(title: str, xlabel: str, ylabel: str) -> list[str]:
    return [
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="black"/>',
        f'<text x="{_W // 2}" y="18" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{_W // 2}" y="{_H - 8}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="14" y="{_H // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {_H // 2})">{ylabel}</text>',
    ]


def _scale(values: np.ndarray, lo_px: float, hi_px: float):
    vmin, vmax = float(values.min()), float(values.max())
    if vmax == vmin:
        vmax = vmin + 1.0
    span = vmax - vmin

    def to_px(v):
        return lo_px + (np.asarray(v, dtype=np.float64) - vmin) / span * (hi_px - lo_px)

    return to_px, vmin, vmax


def _downsample(matrix: np.ndarray, limit: int = 128) -> np.ndarray:
    """Block-mean each axis down to at most ``limit`` cells."""
    out = matrix
    for axis in range(2):
        n = out.shape[axis]
        if n <= limit:
            continue
        bounds = np.linspace(0, n, limit + 1).astype(np.intp)
        out = np.add.reduceat(out, bounds[:-1], axis=axis)
        out = out / np.diff(bounds).reshape((-1, 1) if axis == 0 else (1, -1))
    return out


def heatmap_svg(matrix, duration_ns: float, feature_times_ns=(), title: str = "B-scan") -> str:
    """Grayscale radargram; samples run top to bottom, traces left to right.
    Horizontal rules (class ``feature-line``) mark selected feature times."""
    matrix = np.asarray(matrix, dtype=np.float64)
    cells = np.clip(_downsample(matrix), -1.0, 1.0)
    n_t, n_x = cells.shape
    pw = (_W - _ML - _MR) / n_x
    ph = (_H - _MT - _MB) / n_t
    body = _frame(title, "trace", "time (ns)")
    for i in range(n_t):
        for j in range(n_x):
            g = int(round((cells[i, j] + 1.0) * 127.5))
            body.append(
                f'<rect x="{_f(_ML + j * pw)}" y="{_f(_MT + i * ph)}" width="{_f(pw + 0.5)}" '
                f'height="{_f(ph + 0.5)}" fill="#{g:02x}{g:02x}{g:02x}"/>'
            )
    for t in feature_times_ns:
        y = _MT + (float(t) / duration_ns) * (_H - _MT - _MB)
        body.append(
            f'<line class="feature-line" x1="{_ML}" x2="{_W - _MR}" y1="{_f(y)}" y2="{_f(y)}" '
            'stroke="red" stroke-width="1.5"/>'
        )
    return _doc(body)


def curve_svg(xs, means, stds=None, title: str = "", xlabel: str = "x", ylabel: str = "y") -> str:
    """Polyline with optional vertical error bars (class ``errorbar``)."""
    xs = np.asarray(xs, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    stds = np.zeros_like(means) if stds is None else np.asarray(stds, dtype=np.float64)
    to_x, x0, x1 = _scale(xs, _ML, _W - _MR)
    to_y, y0, y1 = _scale(np.concatenate([means - stds, means + stds]), _H - _MB, _MT)
    body = _frame(title, xlabel, ylabel)
    body.append(f'<text x="{_ML}" y="{_H - _MB + 14}" font-size="10">{_f(x0)}</text>')
    body.append(f'<text x="{_W - _MR}" y="{_H - _MB + 14}" text-anchor="end" font-size="10">{_f(x1)}</text>')
    body.append(f'<text x="{_ML - 4}" y="{_H - _MB}" text-anchor="end" font-size="10">{_f(y0)}</text>')
    body.append(f'<text x="{_ML - 4}" y="{_MT + 10}" text-anchor="end" font-size="10">{_f(y1)}</text>')
    for x, m, s in zip(xs, means, stds):
        if s > 0:
            body.append(
                f'<line class="errorbar" x1="{_f(to_x(x))}" x2="{_f(to_x(x))}" '
                f'y1="{_f(to_y(m - s))}" y2="{_f(to_y(m + s))}" stroke="gray"/>'
            )
    pts = " ".join(f"{_f(to_x(x))},{_f(to_y(m))}" for x, m in zip(xs, means))
    body.append(f'<polyline points="{pts}" fill="none" stroke="blue" stroke-width="1.5"/>')
    return _doc(body)


def bars_svg(values, labels=None, title: str = "", xlabel: str = "feature", ylabel: str = "importance") -> str:
    """One vertical bar (class ``bar``) per value; negatives hang below zero."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    vmax = max(float(np.abs(values).max()), 1e-300)
    lo = min(float(values.min()), 0.0)
    hi = max(float(values.max()), 0.0)
    to_y, _, _ = _scale(np.array([lo, hi]), _H - _MB, _MT)
    zero_y = float(to_y(0.0))
    bw = (_W - _ML - _MR) / max(n, 1)
    body = _frame(title, xlabel, ylabel)
    body.append(f'<text x="{_ML - 4}" y="{_f(zero_y)}" text-anchor="end" font-size="10">0</text>')
    body.append(f'<text x="{_ML - 4}" y="{_MT + 10}" text-anchor="end" font-size="10">{_f(vmax)}</text>')
    for j, v in enumerate(values):
        top = min(zero_y, float(to_y(v)))
        h = abs(float(to_y(v)) - zero_y)
        body.append(
            f'<rect class="bar" x="{_f(_ML + j * bw + 1)}" y="{_f(top)}" '
            f'width="{_f(max(bw - 2, 1))}" height="{_f(max(h, 0.5))}" fill="steelblue"/>'
        )
        if labels is not None:
            body.append(
                f'<text x="{_f(_ML + (j + 0.5) * bw)}" y="{_H - _MB + 14}" '
                f'text-anchor="middle" font-size="9">{labels[j]}</text>'
            )
    return _doc(body)


def beeswarm_svg(feature_rows, title: str = "Shapley summary") -> str:
    """One horizontal strip per feature: circles at x ~ phi, colored by the
    feature value's rank (blue low, red high).  ``feature_rows`` is a list of
    (label, values, phis)."""
    n = len(feature_rows)
    all_phi = np.concatenate([np.asarray(p, dtype=np.float64) for _, _, p in feature_rows])
    pmax = max(float(np.abs(all_phi).max()), 1e-300)
    body = _frame(title, "phi (contribution to output)", "feature")
    strip_h = (_H - _MT - _MB) / max(n, 1)
    mid_x = _ML + (_W - _ML - _MR) / 2
    body.append(
        f'<line x1="{_f(mid_x)}" x2="{_f(mid_x)}" y1="{_MT}" y2="{_H - _MB}" stroke="black" stroke-dasharray="3 3"/>'
    )
    for i, (label, values, phis) in enumerate(feature_rows):
        values = np.asarray(values, dtype=np.float64)
        phis = np.asarray(phis, dtype=np.float64)
        cy = _MT + (i + 0.5) * strip_h
        ranks = np.argsort(np.argsort(values, kind="stable"), kind="stable")
        denom = max(values.size - 1, 1)
        circles = []
        for v_rank, phi in zip(ranks, phis):
            frac = v_rank / denom
            r = int(round(255 * frac))
            b = 255 - r
            cx = mid_x + (phi / pmax) * (_W - _ML - _MR) / 2 * 0.95
            jitter = (v_rank % 7 - 3) / 3.5 * strip_h * 0.3
            circles.append(
                f'<circle cx="{_f(cx)}" cy="{_f(cy + jitter)}" r="2.5" '
                f'fill="#{r:02x}00{b:02x}" fill-opacity="0.7"/>'
            )
        body.append(f'<g class="feature-strip" data-label="{label}">' + "".join(circles) + "</g>")
        body.append(
            f'<text x="{_ML - 4}" y="{_f(cy + 3)}" text-anchor="end" font-size="10">{label}</text>'
        )
    return _doc(body)


def bands_svg(proba, predictions, title: str = "per-trace classification") -> str:
    """Two per-trace strips: class probability (grayscale, class ``proba``)
    above hard predictions (two-tone, class ``pred``)."""
    proba = np.asarray(proba, dtype=np.float64)
    predictions = np.asarray(predictions)
    n = proba.size
    bw = (_W - _ML - _MR) / max(n, 1)
    band_h = (_H - _MT - _MB) / 2 - 10
    body = _frame(title, "trace", "p / class")
    for j in range(n):
        g = int(round(np.clip(proba[j], 0.0, 1.0) * 255))
        body.append(
            f'<rect class="proba" x="{_f(_ML + j * bw)}" y="{_MT}" width="{_f(bw + 0.5)}" '
            f'height="{_f(band_h)}" fill="#{g:02x}{g:02x}{g:02x}"/>'
        )
        color = "#d62728" if int(predictions[j]) else "#1f77b4"
        body.append(
            f'<rect class="pred" x="{_f(_ML + j * bw)}" y="{_f(_MT + band_h + 20)}" '
            f'width="{_f(bw + 0.5)}" height="{_f(band_h)}" fill="{color}"/>'
        )
    return _doc(body)
