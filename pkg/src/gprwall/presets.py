"""Canonical synthetic benchmark: a suite of labelled wall scans.

The suite mirrors a realistic survey layout: ten interior and eleven exterior
scans, identified by wall letter + scan number, each with three studs on
16 in centers at a seeded offset, cycling through clean / low / moderate
noise.  Walls of one class share a construction, so transfer across scans of
a class measures robustness to stud layout and noise rather than to material
changes.  The minimal-training split (one wall of each class) is the hard
generalization case.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .radargram import BScan, MaterialLayer, StudLabels, WallLabels, WallSpec
from .synth import SynthConfig, exterior_wall_spec, interior_wall_spec, render_bscan

INTERIOR_IDS = ("D1", "D2", "D3", "E1", "E2", "E3", "F1", "G1", "G2", "G3")
EXTERIOR_IDS = ("A1", "B1", "B2", "B3", "C1", "C2", "C3", "H1", "H2", "H3", "I1")
ALL_IDS = INTERIOR_IDS + EXTERIOR_IDS

# one interior wall and one exterior wall; everything else is test data
MINIMAL_TRAIN = ("I1", "G3")

NOISE_CYCLE = (0.0, 0.02, 0.05)
TRACE_SPACING_M = 0.00635  # quarter inch
STUD_PITCH_M = 0.4064  # 16 in on-center
STUD_TRACES = 6  # 1.5 in face at quarter-inch spacing


@dataclass(frozen=True)
class BenchmarkScan:
    scan_id: str
    spec: WallSpec
    config: SynthConfig

    def render(self) -> tuple[BScan, StudLabels, WallLabels]:
        return render_bscan(self.spec, self.config, scan_id=self.scan_id)


def exact_spec(spec: WallSpec) -> WallSpec:
    """Collapse each layer's permittivity interval to the midpoint the
    renderer actually used, for ground-truth depth mapping."""
    return WallSpec(
        spec.wall_class,
        tuple(
            MaterialLayer(layer.name, layer.thickness_m, layer.eps_mid, layer.eps_mid)
            for layer in spec.layers
        ),
    )


def benchmark_suite(
    seed: int = 7, noise_sigma: float | None = None, n_traces: int = 160
) -> list[BenchmarkScan]:
    """Build the 21-scan suite.

    ``noise_sigma`` fixes one noise level for every scan; None cycles through
    ``NOISE_CYCLE`` so the suite mixes clean and noisy walls.  Stud edges sit
    half a trace off the grid so each stud covers exactly ``STUD_TRACES``
    traces with no boundary ties.
    """
    suite = []
    children = np.random.SeedSequence(seed).spawn(len(ALL_IDS))
    for i, (scan_id, child) in enumerate(zip(ALL_IDS, children)):
        spec = interior_wall_spec() if scan_id in INTERIOR_IDS else exterior_wall_spec()
        rng = np.random.default_rng(child)
        offset = rng.uniform(0.05, 0.15)
        extent = n_traces * TRACE_SPACING_M
        n_studs = max(1, int((extent - offset - 0.05) // STUD_PITCH_M) + 1)
        centers = offset + np.arange(n_studs) * STUD_PITCH_M
        first_traces = np.round(centers / TRACE_SPACING_M).astype(int) - STUD_TRACES // 2
        edges = (first_traces - 0.5) * TRACE_SPACING_M
        sigma = noise_sigma if noise_sigma is not None else NOISE_CYCLE[i % len(NOISE_CYCLE)]
        config = SynthConfig(
            n_traces=n_traces,
            trace_spacing_m=TRACE_SPACING_M,
            stud_positions_m=tuple(edges),
            stud_width_m=STUD_TRACES * TRACE_SPACING_M,
            noise_sigma=sigma,
            seed=int(rng.integers(2**31)),
        )
        suite.append(BenchmarkScan(scan_id, spec, config))
    return suite


def with_noise(suite: list[BenchmarkScan], noise_sigma: float) -> list[BenchmarkScan]:
    """Same walls and stud layouts, different noise level."""
    return [
        BenchmarkScan(s.scan_id, s.spec, replace(s.config, noise_sigma=noise_sigma)) for s in suite
    ]
