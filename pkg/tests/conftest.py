"""Shared fixtures.

The session-scoped benchmark render is shared between the CLI tests and the
acceptance suite because producing it is the single most expensive fixture.
"""

import pytest

from gprwall import synth
from gprwall.presets import TRACE_SPACING_M


@pytest.fixture(scope="session")
def interior_spec():
    return synth.interior_wall_spec()


@pytest.fixture(scope="session")
def exterior_spec():
    return synth.exterior_wall_spec()


@pytest.fixture(scope="session")
def small_config():
    # One stud covering traces 24..29: left edge half a trace before 24.
    return synth.SynthConfig(
        n_traces=64,
        stud_positions_m=(23.5 * TRACE_SPACING_M,),
        noise_sigma=0.0,
        seed=11,
    )


@pytest.fixture(scope="session")
def small_scan(interior_spec, small_config):
    """(BScan, StudLabels, WallLabels) for a small noise-free interior scan."""
    return synth.render_bscan(interior_spec, small_config, scan_id="unit")


@pytest.fixture(scope="session")
def bench_dir(tmp_path_factory):
    """Benchmark preset rendered once through the CLI, default seed."""
    from gprwall.cli import main

    out = tmp_path_factory.mktemp("bench")
    assert main(["--out-dir", str(out), "synth"]) == 0
    return out
