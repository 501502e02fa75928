import numpy as np
import pytest

from gprwall.radargram import BScan, TimeAxis
from gprwall.svd_labeler import (
    CalibrationResult,
    calibrate_threshold,
    detect_studs,
    first_component,
)


def test_first_component_recovers_rank_one_direction():
    rng = np.random.default_rng(0)
    direction = rng.normal(size=12)
    direction /= np.linalg.norm(direction)
    if direction.mean() < 0:
        direction = -direction
    left = rng.normal(size=30)
    matrix = np.outer(left, direction)
    v = first_component(matrix)
    assert np.allclose(np.abs(v @ direction), 1.0, atol=1e-10)
    assert v.mean() >= 0.0
    assert np.allclose(np.linalg.norm(v), 1.0)


def test_first_component_sign_convention_is_stable():
    rng = np.random.default_rng(1)
    matrix = rng.normal(size=(20, 9)) + 0.5
    assert np.array_equal(first_component(matrix), first_component(-matrix))


def test_first_component_accepts_bscan(small_scan):
    scan, _, _ = small_scan
    v = first_component(scan)
    assert v.shape == (scan.n_traces,)


def test_first_component_rejects_1d():
    with pytest.raises(ValueError, match="shape mismatch"):
        first_component(np.ones(5))


def _component(values):
    return np.asarray(values, dtype=np.float64)


def test_detect_single_peak_with_extension():
    # mean is dominated by the 1.0 baseline; the bump around index 5 deviates
    v = _component([1, 1, 1, 1.2, 1.5, 2.0, 1.5, 1.2, 1, 1, 1, 1])
    mean = v.mean()
    labels = detect_studs(v, fraction=0.25)
    # threshold 0.25*mean: |v - mean| >= threshold picks ... compute directly
    expected = np.zeros(12, dtype=bool)
    peak = 5
    thr = 0.25 * mean
    lo = hi = peak
    while lo > 0 and abs(v[lo - 1] - mean) >= thr:
        lo -= 1
    while hi < v.size - 1 and abs(v[hi + 1] - mean) >= thr:
        hi += 1
    expected[lo : hi + 1] = True
    assert np.array_equal(labels.per_trace, expected)
    assert labels.per_trace[peak]


def test_detect_uses_minima_when_studs_dip():
    up = _component([1, 1, 1, 1, 2, 1, 1, 1, 1])
    down = _component([1, 1, 1, 1, 0.2, 1, 1, 1, 1])
    assert np.flatnonzero(detect_studs(up, 0.3).per_trace).tolist() == [4]
    assert np.flatnonzero(detect_studs(down, 0.3).per_trace).tolist() == [4]


def test_detect_caps_at_three_studs():
    v = np.ones(40)
    for center, height in ((5, 3.0), (15, 2.8), (25, 2.6), (35, 2.4)):
        v[center] = height
    labels = detect_studs(v, fraction=0.2)
    # three most prominent peaks only; the weakest (index 35) is dropped
    assert np.flatnonzero(labels.per_trace).tolist() == [5, 15, 25]


def test_detect_min_separation_merges_close_peaks():
    v = np.ones(20)
    v[8] = 3.0
    v[10] = 2.9  # second summit of the same stud
    v[16] = 2.0
    close = detect_studs(v, fraction=0.2, min_separation=4)
    assert np.flatnonzero(close.per_trace).tolist() == [8, 16]
    apart = detect_studs(v, fraction=0.2, min_separation=1)
    assert np.flatnonzero(apart.per_trace).tolist() == [8, 10, 16]


def test_detect_plateau_counts_once():
    v = _component([1, 1, 2, 2, 2, 1, 1, 1, 1])
    # mean 4/3: the baseline deviates by 1/3, the plateau by 2/3, so the
    # fraction must put the threshold strictly between the two
    labels = detect_studs(v, fraction=0.4)
    # plateau [2, 4] is one peak centered at 3, extended across itself
    assert np.flatnonzero(labels.per_trace).tolist() == [2, 3, 4]


def test_detect_weak_peak_below_threshold_yields_empty_mask():
    v = _component([1, 1, 1, 1.001, 1, 1, 1])
    labels = detect_studs(v, fraction=0.5)
    assert not labels.per_trace.any()


def test_detect_validation_errors():
    with pytest.raises(ValueError, match="at least 3"):
        detect_studs(np.array([1.0, 2.0]), 0.2)
    with pytest.raises(ValueError, match="non-finite"):
        detect_studs(np.array([1.0, np.nan, 1.0]), 0.2)
    with pytest.raises(ValueError, match="fraction must be positive"):
        detect_studs(np.ones(5) + np.arange(5), 0.0)
    with pytest.raises(ValueError, match="min_separation"):
        detect_studs(np.array([1.0, 2.0, 1.0]), 0.2, min_separation=0)
    with pytest.raises(ValueError, match="uncalibratable component: mean is zero"):
        detect_studs(np.array([-1.0, 0.0, 1.0]), 0.2)
    with pytest.raises(ValueError, match="uncalibratable component: constant"):
        detect_studs(np.ones(6), 0.2)


def test_calibration_hits_target_width_on_clean_ramp():
    # deviation decays linearly from the peak, so the detected width shrinks
    # as the fraction grows; exactly 5 traces deviate >= 0.5 on each side
    v = np.ones(41)
    for offset in range(6):
        v[20 - offset] = v[20 + offset] = 2.0 - 0.25 * offset
    spacing = 0.01
    result = calibrate_threshold([v], spacing, target_width_m=0.05, grid=np.arange(0.1, 1.3, 0.1))
    assert isinstance(result, CalibrationResult)
    assert result.modal_width_m == pytest.approx(0.05)
    assert result.n_studs >= 1
    detected = detect_studs(v, result.fraction)
    assert np.flatnonzero(detected.per_trace).size == 5


def test_calibration_prefers_smaller_fraction_on_ties():
    v = np.ones(15)
    v[7] = 2.0  # single-trace stud at any sensible fraction
    result = calibrate_threshold([v], 0.01, target_width_m=0.01, grid=[0.2, 0.4, 0.6])
    assert result.fraction == 0.2
    assert result.modal_width_m == pytest.approx(0.01)


def test_calibration_rejects_when_nothing_detected():
    v = np.ones(15)
    v[7] = 1.0001
    with pytest.raises(ValueError, match="no studs detected"):
        calibrate_threshold([v], 0.01, grid=[2.0, 3.0])


def test_calibration_input_validation():
    with pytest.raises(ValueError, match="at least one"):
        calibrate_threshold([], 0.01)
    with pytest.raises(ValueError, match="trace spacing"):
        calibrate_threshold([np.ones(5) + np.arange(5)], 0.0)


def test_calibration_on_rendered_scan(small_scan, small_config):
    scan, stud, _ = small_scan
    comp = first_component(scan)
    result = calibrate_threshold([comp], small_config.trace_spacing_m)
    derived = detect_studs(
        comp,
        result.fraction,
        min_separation=max(1, round(0.0381 / (2 * small_config.trace_spacing_m))),
    )
    true_idx = set(np.flatnonzero(stud.per_trace).tolist())
    got_idx = set(np.flatnonzero(derived.per_trace).tolist())
    # calibrated weak labels recover the planted stud nearly exactly
    jaccard = len(true_idx & got_idx) / len(true_idx | got_idx)
    assert jaccard >= 0.8
