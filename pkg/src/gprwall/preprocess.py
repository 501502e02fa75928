"""Amplitude conditioning applied before any learning step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .radargram import BScan


@dataclass(frozen=True)
class GainConfig:
    """Exponential gain A -> sign(A) * |A|**gamma with 0 < gamma < 1.

    Raising normalized amplitudes (|A| <= 1) to a fractional power lifts the
    weak late-time reflections toward the direct-coupling amplitude.  The sign
    factor extends the transform to negative lobes without changing polarity.
    """

    gamma: float = 0.8

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must lie strictly inside (0, 1), got {self.gamma}")


def exponential_gain(scan: BScan, config: GainConfig | None = None) -> BScan:
    """Return a new scan with the gain applied; the input is untouched."""
    config = config or GainConfig()
    a = scan.amplitudes
    gained = np.sign(a) * np.abs(a) ** config.gamma
    return BScan(scan.axis, gained, scan.trace_spacing_m, scan.scan_id)


def per_trace_normalize(scan: BScan) -> BScan:
    """Scale every trace to unit maximum absolute amplitude.

    An all-zero trace has no scale to normalize by and is rejected.
    """
    peaks = np.abs(scan.amplitudes).max(axis=0)
    dead = np.flatnonzero(peaks == 0.0)
    if dead.size:
        raise ValueError(f"degenerate trace: all-zero column(s) {dead.tolist()} in scan {scan.scan_id!r}")
    return BScan(scan.axis, scan.amplitudes / peaks, scan.trace_spacing_m, scan.scan_id)


def window_mean(a, width: int, axis: int = 0) -> np.ndarray:
    """Average consecutive samples in fixed windows along ``axis``.

    Samples closer together than a pulse width carry one physical event, so
    pooling at that granularity trades time resolution nobody can use for
    features that are individually meaningful.  A short final window (when the
    axis length is not a multiple of ``width``) averages the samples it has.
    """
    a = np.asarray(a, dtype=np.float64)
    if width < 1:
        raise ValueError(f"window width must be >= 1, got {width}")
    n = a.shape[axis]
    if n == 0:
        raise ValueError("cannot pool an empty axis")
    starts = np.arange(0, n, width)
    sums = np.add.reduceat(a, starts, axis=axis)
    counts = np.diff(np.append(starts, n))
    shape = [1] * a.ndim
    shape[axis] = counts.size
    return sums / counts.reshape(shape)
