"""Synthetic labelled gaze and head traces.

Generates recordings that mirror a five-phase controlled stimulus: basic
eye movements (fixations, saccades, a short pursuit), fixation under
voluntary head motion, a long constant-speed pursuit, pursuit performed
with the head alone, and optokinetic nystagmus induced by fast repeating
target passes. Every sample carries exact ground-truth primary and
secondary labels derived from the constructed motion itself, which makes
the generator an independent oracle for the classifier.

Construction details that matter downstream:

- Saccades are raised-cosine speed ramps between gaze targets; their
  duration grows with amplitude within 30-60 ms and the peak speed is
  always well above the default high saccade threshold.
- Ground-truth saccade extents follow the same convention as detection:
  a sample belongs to the saccade iff the motion covered since the
  previous sample exceeds the default low saccade threshold. The slower
  ramp tails inherit the neighbouring segment's labels.
- Brief dwells are inserted around the fast OKN passes so that saccadic
  speed runs never merge with a 50 deg/s slow phase.
- Gaze noise is isotropic Gaussian jitter in the local tangent plane;
  the head trajectory is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .data import LabelTrack, PrimaryLabel, Recording, RecordingMeta, SecondaryLabel
from .detector import ThresholdSet
from .geometry import angular_speed_series, unit_vector, to_lonlat, wrap_deg

_DEFAULTS = ThresholdSet()

SACCADE_MIN_DURATION_S = 0.030
SACCADE_MAX_DURATION_S = 0.060
MIN_SACCADE_AMPLITUDE_DEG = 2.5
OKN_DWELL_S = 0.08
PURSUIT_LATENCY_S = 0.12


class PhaseKind(Enum):
    BASIC_EM = "basic_em"
    VOR_FIXATION = "vor_fixation"
    LONG_PURSUIT = "long_pursuit"
    HEAD_PURSUIT = "head_pursuit"
    OKN = "okn"


@dataclass(frozen=True)
class PhaseSpec:
    """One stimulus phase.

    target_speed means: pursuit/pass speed for BASIC_EM, LONG_PURSUIT and
    OKN; peak head speed for VOR_FIXATION; head sweep speed for
    HEAD_PURSUIT. extent_deg is the covered span (pass extent for OKN,
    oscillation span for VOR_FIXATION). head_ratio applies to LONG_PURSUIT
    only: the fraction of target motion carried by the head. pause_s is
    the gap between the two OKN pass directions.
    """

    kind: PhaseKind
    duration_s: float
    target_speed: float
    extent_deg: float
    noise_sd: float = 0.15
    head_ratio: float = 0.0
    pause_s: float = 2.5

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.target_speed <= 0:
            raise ValueError("target_speed must be positive")
        if self.extent_deg <= 0:
            raise ValueError("extent_deg must be positive")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if not 0.0 <= self.head_ratio <= 1.0:
            raise ValueError("head_ratio must be in [0, 1]")
        if self.pause_s < 0:
            raise ValueError("pause_s must be non-negative")


def saccade_duration_s(amplitude_deg: float) -> float:
    """Amplitude-dependent saccade duration, clipped to 30-60 ms."""
    return float(np.clip(0.030 + 0.0005 * amplitude_deg, SACCADE_MIN_DURATION_S,
                         SACCADE_MAX_DURATION_S))


@dataclass
class _Segment:
    start_s: float
    dur_s: float
    fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]]
    primary: PrimaryLabel
    secondary: SecondaryLabel
    saccade: bool = False


class _TraceBuilder:
    """Appends motion segments while tracking gaze/head continuity."""

    def __init__(self, gaze: tuple[float, float] = (0.0, 0.0),
                 head: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> None:
        self.segments: list[_Segment] = []
        self.t = 0.0
        self.gaze = gaze
        self.head = head

    def _add(self, dur: float, fn, primary, secondary, saccade=False) -> None:
        if dur <= 0:
            return
        self.segments.append(_Segment(self.t, dur, fn, primary, secondary, saccade))
        self.t += dur

    def hold(self, dur: float, primary=PrimaryLabel.FIXATION,
             secondary=SecondaryLabel.NONE) -> None:
        g, h = self.gaze, self.head

        def fn(tau):
            shape = tau.shape
            return (np.full(shape, g[0]), np.full(shape, g[1]),
                    np.full(shape, h[0]), np.full(shape, h[1]), np.full(shape, h[2]))

        self._add(dur, fn, primary, secondary)

    def saccade_to(self, lon: float, lat: float,
                   secondary=SecondaryLabel.NONE) -> None:
        g0, h = self.gaze, self.head
        a = unit_vector(g0[0], g0[1])
        b = unit_vector(lon, lat)
        omega = math.acos(min(1.0, max(-1.0, float(np.dot(a, b)))))
        amplitude = math.degrees(omega)
        if amplitude < MIN_SACCADE_AMPLITUDE_DEG:
            raise ValueError(f"saccade amplitude {amplitude:.2f} deg too small to synthesize")
        dur = saccade_duration_s(amplitude)

        def fn(tau):
            frac = tau / dur
            s = frac - np.sin(2 * np.pi * frac) / (2 * np.pi)  # raised-cosine speed
            sa = np.sin((1 - s) * omega)[:, None]
            sb = np.sin(s * omega)[:, None]
            v = (sa * a + sb * b) / math.sin(omega)
            slon, slat = to_lonlat(v)
            shape = tau.shape
            return (slon, slat,
                    np.full(shape, h[0]), np.full(shape, h[1]), np.full(shape, h[2]))

        self._add(dur, fn, PrimaryLabel.SACCADE, secondary, saccade=True)
        self.gaze = (lon, lat)

    def pursue(self, speed: float, dur: float, head_ratio: float = 0.0,
               primary=PrimaryLabel.SP, secondary=SecondaryLabel.NONE) -> None:
        """Gaze moves along its latitude circle at `speed` deg/s (signed);
        the head carries `head_ratio` of the longitudinal motion."""
        g0, h0 = self.gaze, self.head
        dlon_dt = speed / max(math.cos(math.radians(g0[1])), 1e-6)

        def fn(tau):
            lon = g0[0] + dlon_dt * tau
            yaw = h0[0] + head_ratio * dlon_dt * tau
            shape = tau.shape
            return (lon, np.full(shape, g0[1]), yaw,
                    np.full(shape, h0[1]), np.full(shape, h0[2]))

        self._add(dur, fn, primary, secondary)
        self.gaze = (g0[0] + dlon_dt * dur, g0[1])
        self.head = (h0[0] + head_ratio * dlon_dt * dur, h0[1], h0[2])

    def vor_fixation(self, dur: float, amplitude: float, cycles: int) -> None:
        """Head yaw oscillates sinusoidally over `cycles` full periods while
        the world gaze stays put; net head displacement is zero."""
        g, h0 = self.gaze, self.head
        omega = 2 * math.pi * cycles / dur

        def fn(tau):
            yaw = h0[0] + amplitude * np.sin(omega * tau)
            shape = tau.shape
            return (np.full(shape, g[0]), np.full(shape, g[1]),
                    yaw, np.full(shape, h0[1]), np.full(shape, h0[2]))

        self._add(dur, fn, PrimaryLabel.FIXATION, SecondaryLabel.VOR)

    def head_pursuit(self, dur: float, speed: float) -> None:
        """Head sweeps at constant speed with the gaze locked to its forward
        axis (zero eye-in-head motion)."""
        h0 = self.head

        def fn(tau):
            yaw = h0[0] + speed * tau
            shape = tau.shape
            return (yaw, np.full(shape, h0[1]),
                    yaw, np.full(shape, h0[1]), np.full(shape, h0[2]))

        self._add(dur, fn, PrimaryLabel.FIXATION, SecondaryLabel.HEAD_PURSUIT)
        self.head = (h0[0] + speed * dur, h0[1], h0[2])
        self.gaze = (self.head[0], self.head[1])


def _pad_phase(b: _TraceBuilder, t_phase_start: float, spec: PhaseSpec,
               secondary=SecondaryLabel.NONE) -> None:
    rest = spec.duration_s - (b.t - t_phase_start)
    if rest < -1e-9:
        raise ValueError(
            f"{spec.kind.value}: content needs {b.t - t_phase_start:.2f}s "
            f"but duration_s is {spec.duration_s}"
        )
    b.hold(rest, PrimaryLabel.FIXATION, secondary)


def _build_basic_em(b: _TraceBuilder, spec: PhaseSpec) -> None:
    t0 = b.t
    scale = spec.extent_deg / 40.0
    lon, lat = b.gaze
    b.hold(1.2)
    b.saccade_to(lon + 8 * scale, lat)
    b.hold(0.9)
    b.saccade_to(lon + 14 * scale, lat + 4 * scale)
    b.hold(0.8)
    b.saccade_to(lon - 4 * scale, lat + 2 * scale)
    b.hold(PURSUIT_LATENCY_S)
    b.pursue(spec.target_speed, 1.5)
    b.hold(0.9)
    # vertical jump keeps this phase's saccades non-collinear with the pursuit
    b.saccade_to(b.gaze[0], b.gaze[1] - 8 * scale)
    _pad_phase(b, t0, spec)


def _build_vor_fixation(b: _TraceBuilder, spec: PhaseSpec) -> None:
    t0 = b.t
    amplitude = spec.extent_deg / 2.0
    cycles = max(1, round(spec.target_speed * spec.duration_s / (2 * math.pi * amplitude)))
    b.vor_fixation(spec.duration_s, amplitude, cycles)
    _pad_phase(b, t0, spec, SecondaryLabel.VOR)


def _build_long_pursuit(b: _TraceBuilder, spec: PhaseSpec) -> None:
    t0 = b.t
    start_lon = b.gaze[0] - spec.extent_deg / 2.0
    b.saccade_to(start_lon, b.gaze[1] + 3.0)
    b.hold(PURSUIT_LATENCY_S)
    move_s = min(spec.duration_s - (b.t - t0), spec.extent_deg / spec.target_speed)
    head_speed = spec.head_ratio * spec.target_speed
    secondary = SecondaryLabel.VOR if head_speed > _DEFAULTS.head_low else SecondaryLabel.NONE
    b.pursue(spec.target_speed, move_s, head_ratio=spec.head_ratio, secondary=secondary)
    _pad_phase(b, t0, spec)


def _build_head_pursuit(b: _TraceBuilder, spec: PhaseSpec) -> None:
    t0 = b.t
    # dog-leg transition: a vertical then a horizontal saccade, so that the
    # surrounding intersaccadic intervals never see collinear boundaries
    b.saccade_to(b.gaze[0], b.gaze[1] - 10.0)
    b.hold(0.4)
    b.saccade_to(b.head[0], b.head[1])
    sweep_s = spec.duration_s - (b.t - t0)
    b.head_pursuit(sweep_s, spec.target_speed)
    _pad_phase(b, t0, spec, SecondaryLabel.HEAD_PURSUIT)


def _build_okn(b: _TraceBuilder, spec: PhaseSpec) -> None:
    t0 = b.t
    b.saccade_to(b.gaze[0], b.gaze[1] + 12.0)
    b.hold(0.3)
    center = b.gaze
    half = spec.extent_deg / 2.0
    pass_s = spec.extent_deg / spec.target_speed
    reset_s = saccade_duration_s(spec.extent_deg)
    cycle_s = pass_s + reset_s + 2 * OKN_DWELL_S
    per_direction = (spec.duration_s - (b.t - t0) - spec.pause_s) / 2.0
    n_pass = int(per_direction // cycle_s)
    if n_pass < 1:
        raise ValueError("okn: duration too short for a single pass")

    def run_passes(start_lon: float, direction: float) -> None:
        b.saccade_to(start_lon, center[1], secondary=SecondaryLabel.OKN)
        for _ in range(n_pass):
            b.hold(OKN_DWELL_S, PrimaryLabel.FIXATION, SecondaryLabel.OKN)
            b.pursue(direction * spec.target_speed, pass_s, secondary=SecondaryLabel.OKN)
            b.hold(OKN_DWELL_S, PrimaryLabel.FIXATION, SecondaryLabel.OKN)
            b.saccade_to(start_lon, center[1], secondary=SecondaryLabel.OKN)

    run_passes(center[0] - half, +1.0)
    b.hold(spec.pause_s, PrimaryLabel.FIXATION, SecondaryLabel.NONE)
    run_passes(center[0] + half, -1.0)
    _pad_phase(b, t0, spec)


_PHASE_BUILDERS = {
    PhaseKind.BASIC_EM: _build_basic_em,
    PhaseKind.VOR_FIXATION: _build_vor_fixation,
    PhaseKind.LONG_PURSUIT: _build_long_pursuit,
    PhaseKind.HEAD_PURSUIT: _build_head_pursuit,
    PhaseKind.OKN: _build_okn,
}


def five_phase_script(noise_sd: float = 0.15) -> list[PhaseSpec]:
    """The standard five-phase stimulus script with its default parameters."""
    return [
        PhaseSpec(PhaseKind.BASIC_EM, 10.0, 15.0, 40.0, noise_sd),
        PhaseSpec(PhaseKind.VOR_FIXATION, 10.0, 55.0, 44.0, noise_sd),
        PhaseSpec(PhaseKind.LONG_PURSUIT, 10.0, 15.0, 150.0, noise_sd),
        PhaseSpec(PhaseKind.HEAD_PURSUIT, 10.0, 20.0, 200.0, noise_sd),
        PhaseSpec(PhaseKind.OKN, 12.5, 50.0, 25.0, noise_sd),
    ]


def _refine_saccade_bounds(prim: np.ndarray, sec: np.ndarray, speeds: np.ndarray,
                           spans: list[tuple[int, int, int]]) -> None:
    """Trim ground-truth saccades to samples moving faster than the low
    saccade threshold, matching the detection convention.

    A sample is saccadic iff the motion covered since the previous sample
    exceeds the threshold. The sample right after a ramp span is a candidate
    too: its incoming motion overlaps the ramp tail. Sub-threshold head and
    tail samples inherit the neighbouring segments' labels.
    """
    n = prim.shape[0]
    for i0, i1, sacc_sec in spans:
        j1 = min(i1 + 1, n)
        fast = np.flatnonzero(speeds[i0:j1] > _DEFAULTS.sacc_low) + i0
        before = i0 - 1 if i0 > 0 else (j1 if j1 < n else None)
        after = j1 if j1 < n else before
        if fast.size == 0:
            if before is not None:
                prim[i0:i1] = prim[before]
                sec[i0:i1] = sec[before]
            continue
        lead_end = int(fast[0])
        trail_start = int(fast[-1]) + 1
        if before is not None:
            prim[i0:lead_end] = prim[before]
            sec[i0:lead_end] = sec[before]
        prim[lead_end:trail_start] = PrimaryLabel.SACCADE
        sec[lead_end:trail_start] = sacc_sec
        if after is not None:
            prim[trail_start:j1] = prim[after]
            sec[trail_start:j1] = sec[after]


def generate(phases: list[PhaseSpec], rate_hz: float = 120.0, seed: int = 0,
             video_id: str = "synthetic", observer_id: str = "synth"
             ) -> tuple[Recording, LabelTrack]:
    """Sample the phase script at rate_hz; deterministic for a given seed.

    Returns the recording and its exact per-sample ground truth.
    """
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    if not phases:
        raise ValueError("need at least one phase")
    builder = _TraceBuilder()
    for spec in phases:
        _PHASE_BUILDERS[spec.kind](builder, spec)

    n = int(round(builder.t * rate_hz))
    t_us = np.round(np.arange(n) * (1e6 / rate_hz)).astype(np.int64)
    t_s = t_us / 1e6

    lon = np.empty(n)
    lat = np.empty(n)
    yaw = np.empty(n)
    pitch = np.empty(n)
    roll = np.empty(n)
    prim = np.empty(n, dtype=np.int8)
    sec = np.empty(n, dtype=np.int8)
    sacc_spans: list[tuple[int, int, int]] = []

    starts = np.array([s.start_s for s in builder.segments])
    seg_idx = np.clip(np.searchsorted(starts, t_s, side="right") - 1, 0, len(starts) - 1)
    for k, seg in enumerate(builder.segments):
        sel = np.flatnonzero(seg_idx == k)
        if sel.size == 0:
            continue
        tau = t_s[sel] - seg.start_s
        slon, slat, syaw, spitch, sroll = seg.fn(tau)
        lon[sel], lat[sel] = slon, slat
        yaw[sel], pitch[sel], roll[sel] = syaw, spitch, sroll
        prim[sel] = seg.primary
        sec[sel] = seg.secondary
        if seg.saccade:
            sacc_spans.append((int(sel[0]), int(sel[-1]) + 1, int(seg.secondary)))

    clean_speeds = angular_speed_series(lon, lat, t_us)
    _refine_saccade_bounds(prim, sec, clean_speeds, sacc_spans)
    for i0, i1, _ in sacc_spans:
        peak = float(np.nanmax(clean_speeds[i0:min(i1 + 1, n)])) if i1 > i0 else 0.0
        if peak < _DEFAULTS.sacc_high:
            raise AssertionError(f"synthesized saccade peak {peak:.0f} deg/s below threshold")

    # per-phase gaze jitter in the local tangent plane; head stays exact
    rng = np.random.default_rng(seed)
    phase_edges = np.cumsum([0.0] + [p.duration_s for p in phases])
    phase_of = np.clip(np.searchsorted(phase_edges, t_s, side="right") - 1, 0, len(phases) - 1)
    jitter = rng.normal(0.0, 1.0, size=(n, 2))
    sd = np.array([p.noise_sd for p in phases])[phase_of]
    lat_noise = lat + jitter[:, 1] * sd
    lon_noise = lon + jitter[:, 0] * sd / np.maximum(np.cos(np.radians(lat)), 0.05)

    meta = RecordingMeta(
        sampling_rate_hz=rate_hz,
        video_id=video_id,
        observer_id=observer_id,
        fov_deg=(100.0, 100.0),
        fov_px=(1280, 1440),
        video_dims_px=(3840, 1920),
    )
    rec = Recording(
        meta=meta,
        t_us=t_us,
        gaze_lon=wrap_deg(lon_noise),
        gaze_lat=np.clip(lat_noise, -90.0, 90.0),
        head_yaw=wrap_deg(yaw),
        head_pitch=np.clip(pitch, -90.0, 90.0),
        head_roll=wrap_deg(roll),
        valid=np.ones(n, dtype=bool),
    )
    truth = LabelTrack(t_us.copy(), prim, sec)
    return rec, truth


def transition_mask(truth: LabelTrack, margin_us: int = 100_000) -> np.ndarray:
    """True for samples within margin_us of any ground-truth label change."""
    changes = np.flatnonzero(
        (np.diff(truth.primary) != 0) | (np.diff(truth.secondary) != 0)
    ) + 1
    mask = np.zeros(truth.n_samples, dtype=bool)
    t = truth.t_us
    for c in changes:
        a = int(np.searchsorted(t, t[c] - margin_us, side="left"))
        b = int(np.searchsorted(t, t[c] + margin_us, side="right"))
        mask[a:b] = True
    return mask
