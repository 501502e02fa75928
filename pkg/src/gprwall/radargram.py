"""Core containers for wall-scan radargrams.

A B-scan is stored as a dense float64 amplitude matrix with one column per
trace (scan position along the wall) and one row per time sample.  The time
axis is uniform: sample ``k`` of an axis with ``n_samples`` samples spanning
``duration_ns`` sits at ``k * duration_ns / (n_samples - 1)``, so the first
sample is at 0 ns and the last at ``duration_ns``.

Scans round-trip through a CSV amplitude matrix plus a JSON sidecar carrying
the axis, trace spacing, scan id, optional per-trace labels, and the wall
construction the scan was rendered from (when known).
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Vacuum speed of light in metres per nanosecond; the unit system everywhere
# in this package is metres / nanoseconds / GHz.
C_M_PER_NS = 0.299792458

# Acquisition geometry shared by all scans in the reference corpus: 655
# uniformly spaced samples over a 12 ns listening window.
DEFAULT_N_SAMPLES = 655
DEFAULT_DURATION_NS = 12.0


class WallClass(enum.Enum):
    INTERIOR = "interior"
    EXTERIOR = "exterior"

    @property
    def code(self) -> int:
        return 0 if self is WallClass.INTERIOR else 1


class LabelSource(enum.Enum):
    """Where a per-trace label vector came from."""

    SYNTHETIC_TRUTH = "synthetic_truth"
    SVD_DERIVED = "svd_derived"
    PREDICTED = "predicted"


@dataclass(frozen=True)
class TimeAxis:
    """Uniform two-way travel-time axis.

    Parameters
    ----------
    n_samples : int
        Number of samples, at least 2.
    duration_ns : float
        Time of the last sample; the first sample is at 0 ns.
    """

    n_samples: int = DEFAULT_N_SAMPLES
    duration_ns: float = DEFAULT_DURATION_NS

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError(f"time axis needs >= 2 samples, got {self.n_samples}")
        if not (self.duration_ns > 0.0 and np.isfinite(self.duration_ns)):
            raise ValueError(f"duration must be positive and finite, got {self.duration_ns}")

    @property
    def step_ns(self) -> float:
        return self.duration_ns / (self.n_samples - 1)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.duration_ns, self.n_samples)

    def time_of_index(self, k: int) -> float:
        """Two-way time of sample ``k`` in nanoseconds."""
        if not 0 <= k < self.n_samples:
            raise ValueError(f"sample index {k} outside [0, {self.n_samples})")
        return k * self.duration_ns / (self.n_samples - 1)

    def nearest_index(self, t_ns: float) -> int:
        """Index of the sample closest to ``t_ns`` (clipped to the axis)."""
        k = int(round(t_ns / self.step_ns))
        return min(max(k, 0), self.n_samples - 1)


def time_of_index(k: int, axis: TimeAxis | None = None) -> float:
    """Module-level convenience wrapper around :meth:`TimeAxis.time_of_index`."""
    return (axis or TimeAxis()).time_of_index(k)


@dataclass(frozen=True)
class MaterialLayer:
    """One homogeneous layer of a wall, front to back.

    ``eps_min``/``eps_max`` bound the relative permittivity.  A layer whose
    permittivity is known exactly uses equal bounds.
    """

    name: str
    thickness_m: float
    eps_min: float
    eps_max: float

    def __post_init__(self):
        if not (self.thickness_m > 0.0 and np.isfinite(self.thickness_m)):
            raise ValueError(f"layer {self.name!r}: thickness must be positive, got {self.thickness_m}")
        if not (1.0 <= self.eps_min <= self.eps_max):
            raise ValueError(
                f"layer {self.name!r}: need 1 <= eps_min <= eps_max, got [{self.eps_min}, {self.eps_max}]"
            )

    @property
    def eps_mid(self) -> float:
        return 0.5 * (self.eps_min + self.eps_max)


@dataclass(frozen=True)
class WallSpec:
    """Ordered layer stack of a wall, front (scanned face) to back."""

    wall_class: WallClass
    layers: tuple[MaterialLayer, ...]

    def __post_init__(self):
        if len(self.layers) == 0:
            raise ValueError("wall spec needs at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def total_thickness_m(self) -> float:
        return float(sum(layer.thickness_m for layer in self.layers))


@dataclass
class StudLabels:
    """Per-trace stud/non-stud labels. True marks a stud trace."""

    per_trace: np.ndarray
    source: LabelSource

    def __post_init__(self):
        self.per_trace = np.asarray(self.per_trace, dtype=bool)
        if self.per_trace.ndim != 1:
            raise ValueError("stud labels must be a 1-D vector")


@dataclass
class WallLabels:
    """Per-trace wall-class labels, coded 0 = interior, 1 = exterior."""

    per_trace: np.ndarray
    source: LabelSource

    def __post_init__(self):
        self.per_trace = np.asarray(self.per_trace, dtype=np.int8)
        if self.per_trace.ndim != 1:
            raise ValueError("wall labels must be a 1-D vector")
        if not np.isin(self.per_trace, (0, 1)).all():
            raise ValueError("wall labels must be coded 0 (interior) or 1 (exterior)")


@dataclass
class BScan:
    """A radargram: ``amplitudes[k, j]`` is sample ``k`` of trace ``j``."""

    axis: TimeAxis
    amplitudes: np.ndarray
    trace_spacing_m: float
    scan_id: str = "scan"

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.float64)
        if self.amplitudes.ndim != 2:
            raise ValueError(f"shape mismatch: amplitude matrix must be 2-D, got {self.amplitudes.ndim}-D")
        if self.amplitudes.shape[0] != self.axis.n_samples:
            raise ValueError(
                f"shape mismatch: {self.amplitudes.shape[0]} rows vs {self.axis.n_samples} axis samples"
            )
        if self.amplitudes.shape[1] < 1:
            raise ValueError("shape mismatch: scan needs at least one trace")
        if not np.isfinite(self.amplitudes).all():
            raise ValueError(f"non-finite amplitude in scan {self.scan_id!r}")
        if not (self.trace_spacing_m > 0.0 and np.isfinite(self.trace_spacing_m)):
            raise ValueError(f"trace spacing must be positive, got {self.trace_spacing_m}")

    @property
    def n_traces(self) -> int:
        return self.amplitudes.shape[1]

    def trace_positions(self) -> np.ndarray:
        """Along-wall position of each trace in metres (trace 0 at 0)."""
        return np.arange(self.n_traces) * self.trace_spacing_m


# --- persistence ------------------------------------------------------------
#
# <stem>.csv    amplitude matrix, header row = trace indices, %.17g floats
# <stem>.json   sidecar: axis, spacing, scan id, labels, wall spec


def _wall_spec_to_json(spec: WallSpec) -> dict:
    return {
        "wall_class": spec.wall_class.value,
        "layers": [
            {
                "name": layer.name,
                "thickness_m": layer.thickness_m,
                "eps_min": layer.eps_min,
                "eps_max": layer.eps_max,
            }
            for layer in spec.layers
        ],
    }


def _wall_spec_from_json(obj: dict) -> WallSpec:
    return WallSpec(
        wall_class=WallClass(obj["wall_class"]),
        layers=tuple(
            MaterialLayer(d["name"], d["thickness_m"], d["eps_min"], d["eps_max"])
            for d in obj["layers"]
        ),
    )


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def save_bscan(
    scan: BScan,
    path,
    stud_labels: StudLabels | None = None,
    wall_labels: WallLabels | None = None,
    wall_spec: WallSpec | None = None,
) -> Path:
    """Write ``<path>.csv`` + ``<path>.json`` and return the CSV path.

    Labels must match the trace count.  Floats are written with 17
    significant digits so a load/save round trip is exact.
    """
    path = Path(path)
    if path.suffix != ".csv":
        path = path.with_suffix(".csv")
    for name, labels in (("stud", stud_labels), ("wall", wall_labels)):
        if labels is not None and labels.per_trace.shape[0] != scan.n_traces:
            raise ValueError(
                f"label length: {name} labels have {labels.per_trace.shape[0]} entries "
                f"for {scan.n_traces} traces"
            )

    header = ",".join(str(j) for j in range(scan.n_traces))
    np.savetxt(path, scan.amplitudes, fmt="%.17g", delimiter=",", header=header, comments="")

    sidecar: dict = {
        "n_samples": scan.axis.n_samples,
        "duration_ns": scan.axis.duration_ns,
        "trace_spacing_m": scan.trace_spacing_m,
        "scan_id": scan.scan_id,
        "stud_labels": None,
        "wall_labels": None,
        "wall_spec": None,
    }
    if stud_labels is not None:
        sidecar["stud_labels"] = {
            "per_trace": [int(v) for v in stud_labels.per_trace],
            "source": stud_labels.source.value,
        }
    if wall_labels is not None:
        sidecar["wall_labels"] = {
            "per_trace": [int(v) for v in wall_labels.per_trace],
            "source": wall_labels.source.value,
        }
    if wall_spec is not None:
        sidecar["wall_spec"] = _wall_spec_to_json(wall_spec)
    _sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def load_bscan(path) -> tuple[BScan, StudLabels | None, WallLabels | None, WallSpec | None]:
    """Inverse of :func:`save_bscan`; validates shapes and label lengths."""
    path = Path(path)
    if path.suffix != ".csv":
        path = path.with_suffix(".csv")
    sidecar = json.loads(_sidecar_path(path).read_text())

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
    n_traces = len(header)
    amplitudes = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if amplitudes.shape[1] != n_traces:
        raise ValueError(f"shape mismatch: {amplitudes.shape[1]} columns vs {n_traces} header entries")

    axis = TimeAxis(n_samples=int(sidecar["n_samples"]), duration_ns=float(sidecar["duration_ns"]))
    scan = BScan(
        axis=axis,
        amplitudes=amplitudes,
        trace_spacing_m=float(sidecar["trace_spacing_m"]),
        scan_id=str(sidecar["scan_id"]),
    )

    stud_labels = wall_labels = wall_spec = None
    if sidecar.get("stud_labels") is not None:
        raw = sidecar["stud_labels"]
        if len(raw["per_trace"]) != scan.n_traces:
            raise ValueError(f"label length: {len(raw['per_trace'])} stud entries for {scan.n_traces} traces")
        stud_labels = StudLabels(np.asarray(raw["per_trace"], dtype=bool), LabelSource(raw["source"]))
    if sidecar.get("wall_labels") is not None:
        raw = sidecar["wall_labels"]
        if len(raw["per_trace"]) != scan.n_traces:
            raise ValueError(f"label length: {len(raw['per_trace'])} wall entries for {scan.n_traces} traces")
        wall_labels = WallLabels(np.asarray(raw["per_trace"], dtype=np.int8), LabelSource(raw["source"]))
    if sidecar.get("wall_spec") is not None:
        wall_spec = _wall_spec_from_json(sidecar["wall_spec"])
    return scan, stud_labels, wall_labels, wall_spec
