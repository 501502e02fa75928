import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gprwall import synth
from gprwall.radargram import C_M_PER_NS, MaterialLayer, TimeAxis, WallClass, WallSpec
from gprwall.synth import (
    SynthConfig,
    cavity_layer_index,
    interface_events,
    reflection_coefficient,
    render_bscan,
    ricker,
    stud_override,
    stud_trace_mask,
)


def test_reflection_reference_pair():
    # sqrt(2.25) and sqrt(6.25) are exact, so the quotient is exactly -1/4
    assert reflection_coefficient(2.25, 6.25) == -0.25


def test_reflection_same_medium_is_zero():
    assert reflection_coefficient(3.7, 3.7) == 0.0


@given(st.floats(1.0, 20.0), st.floats(1.0, 20.0))
@settings(max_examples=80, deadline=None)
def test_reflection_antisymmetric_and_bounded(eps_a, eps_b):
    r = reflection_coefficient(eps_a, eps_b)
    assert reflection_coefficient(eps_b, eps_a) == -r
    assert -1.0 < r < 1.0


def test_reflection_rejects_sub_unity_permittivity():
    with pytest.raises(ValueError, match="permittivity"):
        reflection_coefficient(0.5, 2.0)


def test_ricker_peak_and_zero_crossing():
    assert ricker(0.0, 2.7) == 1.0
    # (1 - 2a) e^-a vanishes at a = 1/2, i.e. t = sqrt(1/2) / (pi f)
    t_zero = math.sqrt(0.5) / (math.pi * 2.7)
    assert ricker(t_zero, 2.7) == pytest.approx(0.0, abs=1e-12)
    assert abs(ricker(5.0, 2.7)) < 1e-100


def test_interior_event_oracle():
    """Every arrival of the default interior stack, recomputed longhand."""
    spec = synth.interior_wall_spec()
    events = interface_events(spec, SynthConfig())

    # layer constants (midpoints of the material bounds)
    e_dw, e_in = 2.25, 1.2
    n_dw, n_in = math.sqrt(e_dw), math.sqrt(e_in)
    rt1 = 2.0 * 0.0127 * n_dw / C_M_PER_NS
    rt2 = 2.0 * 0.1016 * n_in / C_M_PER_NS
    rt3 = rt1

    r_front = (1.0 - n_dw) / (1.0 + n_dw)
    r12 = (n_dw - n_in) / (n_dw + n_in)
    r23 = -r12
    r_back = (n_dw - 1.0) / (n_dw + 1.0)

    tr = 1.0 - r_front**2
    p1 = tr * r12
    tr *= 1.0 - r12**2
    p2 = tr * r23
    tr *= 1.0 - r23**2
    p3 = tr * r_back

    # a multiple re-reflects off the layer's back face and off its top face
    # seen from below (reversed media order relative to the way down)
    expected = sorted(
        [
            (rt1, p1),
            (2.0 * rt1, p1 * (r12 * -r_front)),  # front drywall: top is air
            (rt1 + rt2, p2),
            (rt1 + 2.0 * rt2, p2 * (r23 * r23)),  # cavity: drywall both sides
            (rt1 + rt2 + rt3, p3),
            (rt1 + rt2 + 2.0 * rt3, p3 * (r_back * r12)),  # back drywall: cavity above
        ]
    )

    assert len(events) == 6
    for ev, (t, a) in zip(events, expected):
        assert ev.two_way_time_ns == pytest.approx(t, abs=1e-12)
        assert ev.amplitude == pytest.approx(a, abs=1e-12)


def test_event_times_match_cumulative_oracle_random_stacks():
    rng = np.random.default_rng(42)
    for _ in range(50):
        n_layers = int(rng.integers(1, 5))
        thick = rng.uniform(0.005, 0.08, n_layers)
        eps = rng.uniform(1.0, 9.0, n_layers)
        spec = WallSpec(
            WallClass.INTERIOR,
            tuple(
                MaterialLayer(f"layer{i}", float(thick[i]), float(eps[i]), float(eps[i]))
                for i in range(n_layers)
            ),
        )
        config = SynthConfig(max_bounces=1, axis=TimeAxis(n_samples=64, duration_ns=1e9))
        events = interface_events(spec, config)
        assert len(events) == n_layers
        expected = np.cumsum(2.0 * thick * np.sqrt(eps) / C_M_PER_NS)
        for ev, t in zip(events, expected):
            assert abs(ev.two_way_time_ns - t) < 1e-12
        assert all(
            a.two_way_time_ns <= b.two_way_time_ns for a, b in zip(events, events[1:])
        )


def test_multiple_to_primary_amplitude_ratio():
    spec = synth.exterior_wall_spec()
    # long listening window so every third bounce of the concrete survives
    config = SynthConfig(max_bounces=3, axis=TimeAxis(n_samples=64, duration_ns=100.0))
    events = interface_events(spec, config)
    eps = [layer.eps_mid for layer in spec.layers]
    media = [1.0] + eps + [1.0]
    layer_names = [layer.name for layer in spec.layers]
    for label in {e.interface for e in events}:
        seq = sorted((e for e in events if e.interface == label), key=lambda e: e.bounce)
        assert [e.bounce for e in seq] == [1, 2, 3]
        i = layer_names.index(label.split("/")[0])
        r_back = reflection_coefficient(media[i + 1], media[i + 2])
        r_top = reflection_coefficient(media[i + 1], media[i])
        for prev, nxt in zip(seq, seq[1:]):
            assert nxt.amplitude == pytest.approx(prev.amplitude * r_back * r_top, abs=1e-12)
            assert nxt.two_way_time_ns > prev.two_way_time_ns


def test_events_beyond_window_are_dropped_with_warning(caplog):
    spec = WallSpec(
        WallClass.EXTERIOR,
        (
            MaterialLayer("drywall", 0.0127, 2.25, 2.25),
            MaterialLayer("soil", 1.0, 9.5, 9.5),  # ~20 ns round trip
        ),
    )
    with caplog.at_level(logging.WARNING, logger="gprwall.synth"):
        events = interface_events(spec, SynthConfig())
    assert all(e.two_way_time_ns <= 12.0 for e in events)
    assert {e.interface for e in events} == {"drywall/soil"}
    assert any("dropped" in rec.message for rec in caplog.records)


def test_single_layer_wall_yields_back_face_event():
    spec = WallSpec(WallClass.INTERIOR, (MaterialLayer("drywall", 0.0127, 2.25, 2.25),))
    events = interface_events(spec, SynthConfig(max_bounces=1))
    assert len(events) == 1
    assert events[0].interface == "drywall/air"
    assert events[0].amplitude > 0.0  # back into air: less dense, positive R


def test_stud_override_targets_cavity_midpoint():
    spec = synth.interior_wall_spec()
    idx, eps = stud_override(spec, SynthConfig())
    assert idx == 1
    assert eps == pytest.approx(2.4)  # spf wood midpoint

    no_insulation = WallSpec(
        WallClass.INTERIOR,
        (
            MaterialLayer("drywall", 0.0127, 2.25, 2.25),
            MaterialLayer("concrete", 0.254, 6.5, 6.5),
        ),
    )
    assert cavity_layer_index(no_insulation) == 1  # falls back to the thickest


def test_override_validation():
    spec = synth.interior_wall_spec()
    with pytest.raises(ValueError, match="outside stack"):
        interface_events(spec, SynthConfig(), override=(7, 2.0))
    with pytest.raises(ValueError, match="permittivity"):
        interface_events(spec, SynthConfig(), override=(1, 0.3))


def test_stud_trace_mask_half_open_interval():
    spacing = 0.00635
    config = SynthConfig(
        n_traces=40, trace_spacing_m=spacing, stud_positions_m=(23.5 * spacing,)
    )
    mask = stud_trace_mask(config)
    assert np.flatnonzero(mask).tolist() == [24, 25, 26, 27, 28, 29]

    # a stud starting exactly on a trace includes it; the far edge is open
    # (width deliberately short of the next trace — an exact multiple of the
    # spacing would put the comparison on a float tie)
    config = SynthConfig(
        n_traces=40,
        trace_spacing_m=spacing,
        stud_positions_m=(10 * spacing,),
        stud_width_m=1.9 * spacing,
    )
    assert np.flatnonzero(stud_trace_mask(config)).tolist() == [10, 11]


def test_synth_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(n_traces=0)
    with pytest.raises(ValueError, match="outside scan extent"):
        SynthConfig(n_traces=10, stud_positions_m=(0.5,))
    with pytest.raises(ValueError, match="overlap"):
        SynthConfig(n_traces=40, stud_positions_m=(0.05, 0.06))
    with pytest.raises(ValueError):
        SynthConfig(noise_sigma=-0.1)
    assert SynthConfig(pulse_width_ns=None).resolved_pulse_width_ns == pytest.approx(1.0 / 2.7)


def test_render_noise_free_matches_event_superposition(interior_spec, small_config, small_scan):
    scan, stud, _ = small_scan
    t = small_config.axis.times()
    expected = np.zeros_like(t)
    for ev in interface_events(interior_spec, small_config):
        expected += ev.amplitude * ricker(t - ev.two_way_time_ns, 2.7)
    expected /= np.abs(expected).max()
    plain = np.flatnonzero(~stud.per_trace)[0]
    assert np.allclose(scan.amplitudes[:, plain], expected, atol=1e-12)


def test_render_truth_labels_and_stud_columns(interior_spec, small_config, small_scan):
    scan, stud, wall = small_scan
    assert np.array_equal(stud.per_trace, stud_trace_mask(small_config))
    assert (wall.per_trace == WallClass.INTERIOR.code).all()
    j_stud = np.flatnonzero(stud.per_trace)[0]
    j_plain = np.flatnonzero(~stud.per_trace)[0]
    assert not np.allclose(scan.amplitudes[:, j_stud], scan.amplitudes[:, j_plain])
    # unit peak per trace
    assert np.allclose(np.abs(scan.amplitudes).max(axis=0), 1.0)


def test_render_deterministic_under_noise(interior_spec):
    config = SynthConfig(n_traces=12, noise_sigma=0.05, seed=3)
    a, _, _ = render_bscan(interior_spec, config)
    b, _, _ = render_bscan(interior_spec, config)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    c, _, _ = render_bscan(interior_spec, SynthConfig(n_traces=12, noise_sigma=0.05, seed=4))
    assert not np.array_equal(a.amplitudes, c.amplitudes)
