import xml.etree.ElementTree as ET

import numpy as np
import pytest

from gprwall.svgplot import bands_svg, bars_svg, beeswarm_svg, curve_svg, heatmap_svg

SVG_NS = "{http://www.w3.org/2000/svg}"


def _parse(svg: str) -> ET.Element:
    root = ET.fromstring(svg)
    assert root.tag == f"{SVG_NS}svg"
    return root


def test_heatmap_cells_and_feature_lines():
    rng = np.random.default_rng(0)
    m = rng.uniform(-1, 1, (10, 8))
    svg = heatmap_svg(m, duration_ns=12.0, feature_times_ns=[3.0, 9.0], title="demo")
    root = _parse(svg)
    rects = root.findall(f"{SVG_NS}rect")
    assert len(rects) == 10 * 8 + 1  # cells + frame
    lines = [el for el in root.findall(f"{SVG_NS}line") if el.get("class") == "feature-line"]
    assert len(lines) == 2
    # overlay y positions follow time / duration linearly
    y0, y1 = (float(l.get("y1")) for l in lines)
    assert y1 > y0


def test_heatmap_downsamples_large_scans():
    m = np.zeros((700, 300))
    root = _parse(heatmap_svg(m, 12.0))
    cells = [el for el in root.findall(f"{SVG_NS}rect") if el.get("fill", "").startswith("#")]
    assert len(cells) <= 128 * 128


def test_curve_polyline_and_errorbars():
    xs = [1, 2, 3, 4]
    means = [0.5, 0.6, 0.7, 0.65]
    stds = [0.0, 0.05, 0.02, 0.0]
    root = _parse(curve_svg(xs, means, stds, title="cv", xlabel="k", ylabel="acc"))
    poly = root.find(f"{SVG_NS}polyline")
    assert poly is not None
    assert len(poly.get("points").split()) == 4
    bars = [el for el in root.findall(f"{SVG_NS}line") if el.get("class") == "errorbar"]
    assert len(bars) == 2  # only nonzero stds draw


def test_bars_counts_and_negative_values():
    values = [0.4, -0.2, 0.0, 1.1]
    root = _parse(bars_svg(values, labels=["a", "b", "c", "d"]))
    bars = [el for el in root.findall(f"{SVG_NS}rect") if el.get("class") == "bar"]
    assert len(bars) == 4
    texts = [el.text for el in root.findall(f"{SVG_NS}text")]
    for lbl in ("a", "b", "c", "d"):
        assert lbl in texts
    # the negative bar starts at the zero line and extends down
    zero_y = min(float(b.get("y")) + float(b.get("height")) for b in bars)
    neg = bars[1]
    assert float(neg.get("y")) >= zero_y - 1e-6


def test_beeswarm_strips():
    rows = [
        ("0.84 ns", [0.1, 0.9, 0.4], [0.2, -0.1, 0.05]),
        ("2.10 ns", [1.0, 0.0, 0.5], [0.3, 0.25, 0.28]),
    ]
    root = _parse(beeswarm_svg(rows))
    strips = [el for el in root.findall(f"{SVG_NS}g") if el.get("class") == "feature-strip"]
    assert [s.get("data-label") for s in strips] == ["0.84 ns", "2.10 ns"]
    for s in strips:
        assert len(s.findall(f"{SVG_NS}circle")) == 3


def test_bands_strip_pair():
    proba = [0.1, 0.9, 0.5]
    preds = [0, 1, 1]
    root = _parse(bands_svg(proba, preds))
    pr = [el for el in root.findall(f"{SVG_NS}rect") if el.get("class") == "proba"]
    pd = [el for el in root.findall(f"{SVG_NS}rect") if el.get("class") == "pred"]
    assert len(pr) == 3 and len(pd) == 3
    assert pd[0].get("fill") != pd[1].get("fill")
    assert pd[1].get("fill") == pd[2].get("fill")


def test_emitters_are_deterministic():
    rng = np.random.default_rng(1)
    m = rng.normal(size=(6, 5))
    assert heatmap_svg(m, 12.0, [1.0]) == heatmap_svg(m, 12.0, [1.0])
    assert curve_svg([1, 2], [3, 4]) == curve_svg([1, 2], [3, 4])
    assert bars_svg([1.0, 2.0]) == bars_svg([1.0, 2.0])
    assert bands_svg([0.2], [1]) == bands_svg([0.2], [1])


def test_constant_inputs_do_not_crash():
    # degenerate scales fall back to a unit span
    _parse(curve_svg([1, 2, 3], [0.5, 0.5, 0.5]))
    _parse(bars_svg([0.0, 0.0]))
    _parse(heatmap_svg(np.zeros((4, 4)), 12.0))
