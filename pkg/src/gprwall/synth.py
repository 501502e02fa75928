"""Synthetic radargram generator for layered walls.

The forward model is deliberately simple: a normal-incidence ray walks the
layer stack, spawning one primary event at the back of every layer plus
low-order in-layer multiples, each drawn as a Ricker pulse at its two-way
travel time.  Studs are modelled as a permittivity substitution of the wall
cavity over the affected traces, which is what a framing member does to the
insulation layer it displaces.

Times are in nanoseconds, distances in metres, frequencies in GHz.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .radargram import (
    C_M_PER_NS,
    BScan,
    LabelSource,
    MaterialLayer,
    StudLabels,
    TimeAxis,
    WallClass,
    WallLabels,
    WallSpec,
)

logger = logging.getLogger(__name__)

# Relative-permittivity bounds for the construction materials that appear in
# the default wall stacks.  Values bracket the spread reported across common
# handbooks for dry material at GPR frequencies.
MATERIAL_BOUNDS: dict[str, tuple[float, float]] = {
    "drywall": (2.0, 2.5),
    "fiberglass insulation": (1.1, 1.3),
    "spf wood": (1.8, 3.0),
    "concrete": (4.0, 9.0),
    "soil": (4.0, 15.0),
}

_IN = 0.0254  # metres per inch


def interior_wall_spec() -> WallSpec:
    """Stud wall: 1/2 in drywall, 4 in insulated cavity, 1/2 in drywall."""
    dw = MATERIAL_BOUNDS["drywall"]
    ins = MATERIAL_BOUNDS["fiberglass insulation"]
    return WallSpec(
        WallClass.INTERIOR,
        (
            MaterialLayer("drywall", 0.5 * _IN, *dw),
            MaterialLayer("fiberglass insulation", 4.0 * _IN, *ins),
            MaterialLayer("drywall", 0.5 * _IN, *dw),
        ),
    )


def exterior_wall_spec() -> WallSpec:
    """Basement-style wall: 1/2 in drywall, 6 in cavity, 10 in concrete."""
    dw = MATERIAL_BOUNDS["drywall"]
    ins = MATERIAL_BOUNDS["fiberglass insulation"]
    con = MATERIAL_BOUNDS["concrete"]
    return WallSpec(
        WallClass.EXTERIOR,
        (
            MaterialLayer("drywall", 0.5 * _IN, *dw),
            MaterialLayer("fiberglass insulation", 6.0 * _IN, *ins),
            MaterialLayer("concrete", 10.0 * _IN, *con),
        ),
    )


def reflection_coefficient(eps_a: float, eps_b: float) -> float:
    """Normal-incidence amplitude reflection going from medium a into b.

    R = (sqrt(eps_a) - sqrt(eps_b)) / (sqrt(eps_a) + sqrt(eps_b)); negative
    when the wave enters a denser (higher permittivity) medium.
    """
    if eps_a < 1.0 or eps_b < 1.0:
        raise ValueError(f"relative permittivity must be >= 1, got ({eps_a}, {eps_b})")
    na, nb = np.sqrt(eps_a), np.sqrt(eps_b)
    return float((na - nb) / (na + nb))


def ricker(t_ns, center_freq_ghz: float):
    """Ricker wavelet (1 - 2 (pi f t)^2) exp(-(pi f t)^2), peak at t = 0."""
    if center_freq_ghz <= 0.0:
        raise ValueError(f"center frequency must be positive, got {center_freq_ghz}")
    arg = (np.pi * center_freq_ghz * np.asarray(t_ns, dtype=np.float64)) ** 2
    return (1.0 - 2.0 * arg) * np.exp(-arg)


@dataclass(frozen=True)
class InterfaceEvent:
    """One reflection arrival: two-way time, signed amplitude, provenance."""

    two_way_time_ns: float
    amplitude: float
    interface: str
    bounce: int = 1  # 1 = primary, b > 1 = (b-1) extra round trips in the layer


@dataclass(frozen=True)
class SynthConfig:
    """Rendering parameters for one synthetic scan.

    ``stud_positions_m`` holds the left edge of each stud; a stud covers the
    half-open interval [p, p + stud_width_m), and trace j (at j * spacing)
    is a stud trace iff it falls inside one of those intervals.
    ``pulse_width_ns`` is the nominal pulse footprint used by consumers to
    decide whether two arrivals are resolvable; it defaults to one period of
    the center frequency.
    """

    n_traces: int = 160
    trace_spacing_m: float = 0.00635
    stud_positions_m: tuple[float, ...] = ()
    stud_width_m: float = 0.0381
    stud_eps: tuple[float, float] = MATERIAL_BOUNDS["spf wood"]
    noise_sigma: float = 0.0
    seed: int = 0
    pulse_center_freq_ghz: float = 2.7
    pulse_width_ns: float | None = None
    max_bounces: int = 2
    axis: TimeAxis = field(default_factory=TimeAxis)

    def __post_init__(self):
        if self.n_traces < 1:
            raise ValueError(f"need at least one trace, got {self.n_traces}")
        if self.trace_spacing_m <= 0.0:
            raise ValueError(f"trace spacing must be positive, got {self.trace_spacing_m}")
        if self.stud_width_m <= 0.0:
            raise ValueError(f"stud width must be positive, got {self.stud_width_m}")
        if not (1.0 <= self.stud_eps[0] <= self.stud_eps[1]):
            raise ValueError(f"stud permittivity bounds out of order: {self.stud_eps}")
        if self.noise_sigma < 0.0:
            raise ValueError(f"noise sigma must be >= 0, got {self.noise_sigma}")
        if self.pulse_center_freq_ghz <= 0.0:
            raise ValueError(f"center frequency must be positive, got {self.pulse_center_freq_ghz}")
        if self.pulse_width_ns is not None and self.pulse_width_ns <= 0.0:
            raise ValueError(f"pulse width must be positive, got {self.pulse_width_ns}")
        if self.max_bounces < 1:
            raise ValueError(f"max_bounces must be >= 1, got {self.max_bounces}")
        object.__setattr__(self, "stud_positions_m", tuple(float(p) for p in self.stud_positions_m))
        extent = self.n_traces * self.trace_spacing_m
        spans = sorted((p, p + self.stud_width_m) for p in self.stud_positions_m)
        for lo, hi in spans:
            if lo < 0.0 or hi > extent:
                raise ValueError(f"stud [{lo:.4f}, {hi:.4f}) m outside scan extent {extent:.4f} m")
        for (_, hi), (lo, _) in zip(spans, spans[1:]):
            if lo < hi:
                raise ValueError("stud intervals overlap")

    @property
    def resolved_pulse_width_ns(self) -> float:
        if self.pulse_width_ns is not None:
            return self.pulse_width_ns
        return 1.0 / self.pulse_center_freq_ghz


def cavity_layer_index(spec: WallSpec) -> int:
    """Index of the layer a stud displaces: the insulation layer if one is
    named, otherwise the thickest layer."""
    for i, layer in enumerate(spec.layers):
        if "insulation" in layer.name.lower():
            return i
    return int(np.argmax([layer.thickness_m for layer in spec.layers]))


def stud_override(spec: WallSpec, config: SynthConfig) -> tuple[int, float]:
    """(layer index, permittivity) substitution describing a stud trace."""
    return cavity_layer_index(spec), 0.5 * (config.stud_eps[0] + config.stud_eps[1])


def interface_events(
    spec: WallSpec,
    config: SynthConfig | None = None,
    override: tuple[int, float] | None = None,
) -> list[InterfaceEvent]:
    """Reflection arrivals for a layer stack, sorted by two-way time.

    One primary event fires at the back of every layer (the front air/wall
    face is the time origin and produces no event of its own).  The stack
    terminates in air, so a single-layer wall still yields one event.  Each
    primary amplitude is the interface reflection coefficient scaled by the
    two-way transmission loss (1 - R^2) of every shallower interface; each
    layer additionally contributes first-order multiples up to
    ``config.max_bounces`` round trips.  Events arriving after the listening
    window are dropped with a logged count.
    """
    config = config or SynthConfig()
    eps = [layer.eps_mid for layer in spec.layers]
    if override is not None:
        idx, value = override
        if not 0 <= idx < len(eps):
            raise ValueError(f"override layer {idx} outside stack of {len(eps)} layers")
        if value < 1.0:
            raise ValueError(f"override permittivity must be >= 1, got {value}")
        eps = list(eps)
        eps[idx] = float(value)

    media = [1.0] + eps + [1.0]  # air in front and behind the stack
    names = ["air"] + [layer.name for layer in spec.layers] + ["air"]
    # refl[i]: reflection at the back of layer i (media i+1 -> i+2), with
    # refl[-1 + 1 = 0] being the front face used only for transmission loss.
    refl = [reflection_coefficient(media[i], media[i + 1]) for i in range(len(media) - 1)]

    events: list[InterfaceEvent] = []
    t_cum = 0.0
    transmission = 1.0 - refl[0] ** 2  # through the front face
    for i, layer in enumerate(spec.layers):
        round_trip = 2.0 * layer.thickness_m * np.sqrt(eps[i]) / C_M_PER_NS
        t_cum += round_trip
        r_back = refl[i + 1]
        primary = transmission * r_back
        label = f"{names[i + 1]}/{names[i + 2]}"
        events.append(InterfaceEvent(t_cum, primary, label, bounce=1))
        # In-layer multiples: each extra round trip reflects once more off the
        # back interface and once off the top interface seen from below.
        r_top_below = reflection_coefficient(eps[i], media[i])
        for b in range(2, config.max_bounces + 1):
            amp = primary * (r_back * r_top_below) ** (b - 1)
            events.append(InterfaceEvent(t_cum + (b - 1) * round_trip, amp, label, bounce=b))
        transmission *= 1.0 - r_back**2

    events.sort(key=lambda e: e.two_way_time_ns)
    window = config.axis.duration_ns
    kept = [e for e in events if e.two_way_time_ns <= window]
    if len(kept) < len(events):
        logger.warning(
            "dropped %d event(s) beyond the %.3g ns listening window", len(events) - len(kept), window
        )
    return kept


def _trace_waveform(events: list[InterfaceEvent], config: SynthConfig) -> np.ndarray:
    t = config.axis.times()
    out = np.zeros_like(t)
    for ev in events:
        out += ev.amplitude * ricker(t - ev.two_way_time_ns, config.pulse_center_freq_ghz)
    return out


def stud_trace_mask(config: SynthConfig) -> np.ndarray:
    """Boolean mask over traces: True where the trace position falls inside a
    stud interval [p, p + width)."""
    x = np.arange(config.n_traces) * config.trace_spacing_m
    mask = np.zeros(config.n_traces, dtype=bool)
    for p in config.stud_positions_m:
        mask |= (x >= p) & (x < p + config.stud_width_m)
    return mask


def render_bscan(
    spec: WallSpec, config: SynthConfig, scan_id: str = "synthetic"
) -> tuple[BScan, StudLabels, WallLabels]:
    """Render a scan of ``spec`` with truth labels.

    Stud traces swap the cavity permittivity for the stud value before the
    event walk.  Gaussian noise (std ``noise_sigma`` before normalization) is
    drawn from an independent child stream per trace so the scan is
    reproducible for a given seed regardless of trace count changes elsewhere.
    Every nonzero trace is normalized to unit peak magnitude.
    """
    base_plain = _trace_waveform(interface_events(spec, config), config)
    mask = stud_trace_mask(config)
    if mask.any():
        base_stud = _trace_waveform(interface_events(spec, config, stud_override(spec, config)), config)
    else:
        base_stud = base_plain

    columns = np.where(mask[np.newaxis, :], base_stud[:, np.newaxis], base_plain[:, np.newaxis])
    if config.noise_sigma > 0.0:
        children = np.random.SeedSequence(config.seed).spawn(config.n_traces)
        for j, child in enumerate(children):
            columns[:, j] += np.random.default_rng(child).normal(
                0.0, config.noise_sigma, config.axis.n_samples
            )

    peaks = np.abs(columns).max(axis=0)
    nonzero = peaks > 0.0
    columns[:, nonzero] /= peaks[nonzero]

    scan = BScan(config.axis, columns, config.trace_spacing_m, scan_id)
    stud_labels = StudLabels(mask, LabelSource.SYNTHETIC_TRUTH)
    wall_labels = WallLabels(
        np.full(config.n_traces, spec.wall_class.code, dtype=np.int8), LabelSource.SYNTHETIC_TRUTH
    )
    return scan, stud_labels, wall_labels
