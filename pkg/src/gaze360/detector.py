"""Speed-threshold eye movement classification.

The pipeline labels every sample of a recording in four steps:

1. Saccades: maximal runs of eye-in-world speed above the low saccade
   threshold that contain at least one sample at or above the high one.
   Eye-in-head speed is deliberately not used here; it can exceed 100 deg/s
   while the eyes merely compensate a fast head rotation.
2. Blinks: each tracking-loss run becomes a blink; a saccade within 40 ms
   of the run is absorbed into it. Blink samples are noise.
3. The remaining intersaccadic intervals are cut into non-overlapping
   100 ms windows. Per window, head / eye-in-head / eye-in-world speeds
   (endpoint distance over duration) feed an ordered decision table; the
   gaze thresholds are scaled up with head speed because gaze stability
   degrades while the head moves.
4. OKN: an intersaccadic interval whose eye-in-head drift opposes both
   bounding saccades (angle >= 90 deg) while those saccades are roughly
   collinear (angle <= 70 deg) gets the OKN secondary label, upgraded to
   OKN+VOR where VOR was already assigned.

Three variants exist: "combined" (everything above), and the "fov" and
"eh" ablations that see only one gaze speed, never scale thresholds, and
never emit VOR or head-pursuit labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

from .data import (
    EventSegment,
    LabelTrack,
    PrimaryLabel,
    Recording,
    SecondaryLabel,
    contiguous_runs,
    samples_to_events,
)
from .geometry import angular_speed_series, central_angle_deg, wrap_deg

Variant = Literal["combined", "fov", "eh"]
VARIANTS = ("combined", "fov", "eh")

WINDOW_US = 100_000
MIN_REMAINDER_US = 50_000
BLINK_MAX_GAP_US = 40_000
OKN_OPPOSE_MIN_DEG = 90.0
OKN_COLLINEAR_MAX_DEG = 70.0
OKN_MIN_DISPLACEMENT_DEG = 0.1


@dataclass(frozen=True)
class ThresholdSet:
    """The five speed thresholds plus the reference head speed.

    Defaults are the fitted values: saccade low/high gate episode extent and
    peak; gaze low/high quantise slow, medium and fast eye motion; head_low
    decides whether the head counts as moving; head_ref controls how strongly
    head speed inflates the gaze thresholds.
    """

    sacc_low: float = 35.0
    sacc_high: float = 150.0
    gaze_low: float = 10.0
    gaze_high: float = 65.0
    head_low: float = 7.0
    head_ref: float = 60.0

    def __post_init__(self) -> None:
        if not 0 < self.sacc_low < self.sacc_high:
            raise ValueError("need 0 < sacc_low < sacc_high")
        if not 0 < self.gaze_low < self.gaze_high:
            raise ValueError("need 0 < gaze_low < gaze_high")
        if self.head_low <= 0 or self.head_ref <= 0:
            raise ValueError("head thresholds must be positive")

    def scaled_for_head(self, v_head: float) -> "ThresholdSet":
        """Gaze thresholds scaled by head speed; head_low is never scaled."""
        factor = 1.0 + v_head / self.head_ref
        return replace(self, gaze_low=self.gaze_low * factor, gaze_high=self.gaze_high * factor)

    def to_dict(self) -> dict[str, float]:
        return {
            "sacc_low": self.sacc_low,
            "sacc_high": self.sacc_high,
            "gaze_low": self.gaze_low,
            "gaze_high": self.gaze_high,
            "head_low": self.head_low,
            "head_ref": self.head_ref,
        }

    @staticmethod
    def from_dict(d: dict) -> "ThresholdSet":
        return ThresholdSet(**{k: float(d[k]) for k in (
            "sacc_low", "sacc_high", "gaze_low", "gaze_high", "head_low", "head_ref")})


def scaled(threshold: float, v_head: float, head_ref: float) -> float:
    """A speed threshold inflated by head motion: (1 + v_head/head_ref) * threshold."""
    if threshold < 0 or v_head < 0 or head_ref <= 0:
        raise ValueError("scaled() needs non-negative speeds and positive head_ref")
    return (1.0 + v_head / head_ref) * threshold


@dataclass(frozen=True)
class WindowSpeeds:
    """Endpoint speeds of one window; invalid when the window is degenerate."""

    v_head: float
    v_fov: float
    v_eh: float
    valid: bool = True


# --- saccades and blinks ----------------------------------------------------

def saccade_runs(speeds: np.ndarray, sacc_low: float, sacc_high: float) -> list[tuple[int, int]]:
    """[start, end) sample runs with speed > sacc_low and a peak >= sacc_high.

    NaN speeds (undefined, e.g. next to tracking loss) break runs.
    """
    above = np.asarray(speeds) > sacc_low  # NaN compares False
    return [(a, b) for a, b in contiguous_runs(above) if np.max(speeds[a:b]) >= sacc_high]


def _events_from_runs(runs: Sequence[tuple[int, int]], t_us: np.ndarray, dt_us: int,
                      label: PrimaryLabel) -> list[EventSegment]:
    events = []
    for a, b in runs:
        end = int(t_us[b]) if b < len(t_us) else int(t_us[-1]) + dt_us
        flags = ("short",) if b - a == 1 else ()
        events.append(EventSegment(int(t_us[a]), end, label, b - a, flags))
    return events


def detect_saccades(speeds: np.ndarray, t_us: np.ndarray, thresholds: ThresholdSet,
                    dt_us: int = 8333) -> list[EventSegment]:
    """Two-threshold saccade episodes from an eye-in-world speed series.

    One-sample episodes are kept but flagged "short"; no minimum duration is
    imposed.
    """
    runs = saccade_runs(speeds, thresholds.sacc_low, thresholds.sacc_high)
    return _events_from_runs(runs, np.asarray(t_us, dtype=np.int64), dt_us, PrimaryLabel.SACCADE)


def absorb_saccades_into_blinks(
    valid: np.ndarray, t_us: np.ndarray, sacc_runs: list[tuple[int, int]],
    max_gap_us: int = BLINK_MAX_GAP_US,
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Blink runs from tracking loss, each absorbing its nearest saccade on
    either side when the gap is at most max_gap_us.

    Returns (blink_runs, surviving_saccade_runs). Absorbed saccades and any
    gap samples in between become part of the blink span.
    """
    t_us = np.asarray(t_us, dtype=np.int64)
    loss = contiguous_runs(~np.asarray(valid, dtype=bool))
    taken = [False] * len(sacc_runs)
    blinks: list[tuple[int, int]] = []
    for la, lb in loss:
        start, end = la, lb
        before = [
            i for i, (sa, sb) in enumerate(sacc_runs)
            if not taken[i] and sb <= la and t_us[la] - t_us[sb - 1] <= max_gap_us
        ]
        if before:
            i = max(before, key=lambda i: sacc_runs[i][1])
            taken[i] = True
            start = min(start, sacc_runs[i][0])
        after = [
            i for i, (sa, sb) in enumerate(sacc_runs)
            if not taken[i] and sa >= lb and t_us[sa] - t_us[lb - 1] <= max_gap_us
        ]
        if after:
            i = min(after, key=lambda i: sacc_runs[i][0])
            taken[i] = True
            end = max(end, sacc_runs[i][1])
        blinks.append((start, end))
    survivors = [run for i, run in enumerate(sacc_runs) if not taken[i]]
    # loss runs joined through an absorbed saccade may now touch; merge them
    merged: list[tuple[int, int]] = []
    for run in sorted(blinks):
        if merged and run[0] <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], run[1]))
        else:
            merged.append(run)
    return merged, survivors


def detect_blinks(rec: Recording, saccades: list[EventSegment],
                  thresholds: ThresholdSet | None = None) -> list[EventSegment]:
    """Blink events for a recording given already-detected saccade events."""
    t = rec.t_us
    runs = [(int(np.searchsorted(t, ev.start_us)),
             int(np.searchsorted(t, ev.end_us, side="left"))) for ev in saccades]
    blink_runs, _ = absorb_saccades_into_blinks(rec.valid, t, runs)
    return _events_from_runs(blink_runs, t, rec.meta.nominal_dt_us, PrimaryLabel.NOISE)


# --- window classification --------------------------------------------------

def classify_window(speeds: WindowSpeeds, thresholds: ThresholdSet
                    ) -> tuple[PrimaryLabel, SecondaryLabel]:
    """Ordered decision table for one intersaccadic window.

    The gaze thresholds passed in must already be scaled for the window's
    head speed (head_low is never scaled). Comparisons are strict: "below"
    is <, "above" is >, which makes the table total.
    """
    if not speeds.valid or not all(
        math.isfinite(v) for v in (speeds.v_head, speeds.v_fov, speeds.v_eh)
    ):
        return PrimaryLabel.NOISE, SecondaryLabel.NONE
    head_moving = speeds.v_head > thresholds.head_low
    if speeds.v_eh < thresholds.gaze_low:
        return PrimaryLabel.FIXATION, (SecondaryLabel.VOR if head_moving else SecondaryLabel.NONE)
    if speeds.v_eh < thresholds.gaze_high:
        if speeds.v_fov >= thresholds.gaze_high:
            return PrimaryLabel.NOISE, SecondaryLabel.NONE
        if speeds.v_fov < thresholds.gaze_low and head_moving:
            return PrimaryLabel.FIXATION, SecondaryLabel.HEAD_PURSUIT
        if head_moving:
            return PrimaryLabel.SP, SecondaryLabel.VOR
        return PrimaryLabel.SP, SecondaryLabel.NONE
    return PrimaryLabel.NOISE, SecondaryLabel.NONE


def classify_window_single(v: float, thresholds: ThresholdSet
                           ) -> tuple[PrimaryLabel, SecondaryLabel]:
    """Single-speed window rule for the fov/eh ablations (unscaled thresholds)."""
    if not math.isfinite(v):
        return PrimaryLabel.NOISE, SecondaryLabel.NONE
    if v < thresholds.gaze_low:
        return PrimaryLabel.FIXATION, SecondaryLabel.NONE
    if v < thresholds.gaze_high:
        return PrimaryLabel.SP, SecondaryLabel.NONE
    return PrimaryLabel.NOISE, SecondaryLabel.NONE


def split_windows(t_us: np.ndarray, start: int, end: int, dt_us: int,
                  window_us: int = WINDOW_US,
                  min_remainder_us: int = MIN_REMAINDER_US) -> list[tuple[int, int]]:
    """Cut samples [start, end) into consecutive windows of window_us.

    A trailing partial window shorter than min_remainder_us is merged into
    the previous window; if it is the whole interval it stands alone.
    """
    t = np.asarray(t_us, dtype=np.int64)
    t0 = int(t[start])
    bins = (t[start:end] - t0) // window_us
    change = np.flatnonzero(np.diff(bins)) + 1
    starts = np.concatenate(([0], change)) + start
    ends = np.concatenate((change, [end - start])) + start
    windows = list(zip(starts.tolist(), ends.tolist()))
    if len(windows) > 1:
        wa, wb = windows[-1]
        span_us = int(t[wb - 1]) + dt_us - (t0 + int(bins[wa - start]) * window_us)
        if span_us < min_remainder_us:
            prev_a, _ = windows[-2]
            windows[-2:] = [(prev_a, wb)]
    return windows


def _endpoint_speed(lon: np.ndarray, lat: np.ndarray, t_us: np.ndarray, a: int, b: int) -> float:
    if b - a < 2:
        return float("nan")
    dur_s = (int(t_us[b - 1]) - int(t_us[a])) / 1e6
    dist = float(central_angle_deg(lon[a], lat[a], lon[b - 1], lat[b - 1]))
    return dist / dur_s


# --- OKN --------------------------------------------------------------------

def _fov_displacement(az: np.ndarray, el: np.ndarray, i_from: int, i_to: int) -> np.ndarray:
    return np.array([float(wrap_deg(az[i_to] - az[i_from])), float(el[i_to] - el[i_from])])


def _angle_between_deg(u: np.ndarray, v: np.ndarray) -> float:
    dot = float(np.dot(u, v)) / (float(np.linalg.norm(u)) * float(np.linalg.norm(v)))
    return math.degrees(math.acos(min(1.0, max(-1.0, dot))))


def _apply_okn(
    secondary: np.ndarray,
    intervals: Sequence[tuple[int, int]],
    sacc_runs: Sequence[tuple[int, int]],
    az: np.ndarray,
    el: np.ndarray,
    force_okn_vor: bool,
) -> None:
    """Write OKN/OKN+VOR secondary labels in place; primary labels untouched.

    Only intervals with a saccade immediately on both sides are candidates.
    Displacements below OKN_MIN_DISPLACEMENT_DEG have no usable direction and
    skip the interval.
    """
    run_by_end = {b: (a, b) for a, b in sacc_runs}
    run_by_start = {a: (a, b) for a, b in sacc_runs}
    for a, b in intervals:
        prev_run = run_by_end.get(a)
        next_run = run_by_start.get(b)
        if prev_run is None or next_run is None:
            continue
        slow = _fov_displacement(az, el, a, b - 1)
        prev_d = _fov_displacement(az, el, max(prev_run[0] - 1, 0), prev_run[1] - 1)
        next_d = _fov_displacement(az, el, max(next_run[0] - 1, 0), next_run[1] - 1)
        if any(np.linalg.norm(d) < OKN_MIN_DISPLACEMENT_DEG for d in (slow, prev_d, next_d)):
            continue
        if (
            _angle_between_deg(slow, prev_d) >= OKN_OPPOSE_MIN_DEG
            and _angle_between_deg(slow, next_d) >= OKN_OPPOSE_MIN_DEG
            and _angle_between_deg(prev_d, next_d) <= OKN_COLLINEAR_MAX_DEG
        ):
            span = slice(prev_run[0], next_run[1])
            if force_okn_vor:
                secondary[span] = SecondaryLabel.OKN_VOR
            else:
                chunk = secondary[span]
                had_vor = (chunk == SecondaryLabel.VOR) | (chunk == SecondaryLabel.OKN_VOR)
                secondary[span] = np.where(had_vor, SecondaryLabel.OKN_VOR, SecondaryLabel.OKN)


def detect_okn(
    track: LabelTrack,
    saccades: Sequence[EventSegment],
    fov_az: np.ndarray,
    fov_el: np.ndarray,
    blinks: Sequence[EventSegment] = (),
    force_okn_vor: bool = False,
) -> LabelTrack:
    """Add OKN secondary labels to a classified track; returns a new track."""
    t = track.t_us
    occupied = np.zeros(track.n_samples, dtype=bool)
    sacc_runs = []
    for ev in saccades:
        a = int(np.searchsorted(t, ev.start_us))
        b = int(np.searchsorted(t, ev.end_us, side="left"))
        sacc_runs.append((a, b))
        occupied[a:b] = True
    for ev in blinks:
        a = int(np.searchsorted(t, ev.start_us))
        b = int(np.searchsorted(t, ev.end_us, side="left"))
        occupied[a:b] = True
    intervals = contiguous_runs(~occupied)
    out = track.copy()
    _apply_okn(out.secondary, intervals, sacc_runs, np.asarray(fov_az), np.asarray(fov_el),
               force_okn_vor)
    return out


# --- full pipeline ----------------------------------------------------------

def run_pipeline(rec: Recording, variant: Variant = "combined",
                 thresholds: ThresholdSet | None = None) -> LabelTrack:
    """Classify every sample of a recording; see the module docstring."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    thr = thresholds if thresholds is not None else ThresholdSet()
    n = rec.n_samples
    t = rec.t_us
    dt_us = rec.meta.nominal_dt_us
    track = LabelTrack.unlabelled(t)
    if n == 0:
        return track

    az, el = rec.fov_trajectory
    eh_speeds = angular_speed_series(rec.gaze_lon, rec.gaze_lat, t, rec.valid)
    fov_speeds = angular_speed_series(az, el, t, rec.valid)

    sacc_speed = fov_speeds if variant == "fov" else eh_speeds
    runs = saccade_runs(sacc_speed, thr.sacc_low, thr.sacc_high)
    blink_runs, runs = absorb_saccades_into_blinks(rec.valid, t, runs)

    occupied = np.zeros(n, dtype=bool)
    for a, b in runs:
        track.primary[a:b] = PrimaryLabel.SACCADE
        occupied[a:b] = True
    for a, b in blink_runs:
        track.primary[a:b] = PrimaryLabel.NOISE
        occupied[a:b] = True

    intervals = contiguous_runs(~occupied)
    for a, b in intervals:
        for wa, wb in split_windows(t, a, b, dt_us):
            if variant == "combined":
                v_head = _endpoint_speed(rec.head_yaw, rec.head_pitch, t, wa, wb)
                v_fov = _endpoint_speed(az, el, t, wa, wb)
                v_eh = _endpoint_speed(rec.gaze_lon, rec.gaze_lat, t, wa, wb)
                if math.isfinite(v_head):
                    primary, secondary = classify_window(
                        WindowSpeeds(v_head, v_fov, v_eh), thr.scaled_for_head(v_head)
                    )
                else:
                    primary, secondary = PrimaryLabel.NOISE, SecondaryLabel.NONE
            elif variant == "fov":
                primary, secondary = classify_window_single(_endpoint_speed(az, el, t, wa, wb), thr)
            else:
                primary, secondary = classify_window_single(
                    _endpoint_speed(rec.gaze_lon, rec.gaze_lat, t, wa, wb), thr
                )
            track.primary[wa:wb] = primary
            track.secondary[wa:wb] = secondary

    _apply_okn(track.secondary, intervals, runs, az, el, force_okn_vor=(variant != "combined"))
    return track


def pipeline_events(rec: Recording, track: LabelTrack
                    ) -> tuple[list[EventSegment], list[EventSegment]]:
    """Run-length events of a pipeline output, using the recording's rate."""
    return samples_to_events(track, rate_hz=rec.meta.sampling_rate_hz)
