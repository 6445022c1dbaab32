"""Recording and label data types, file formats, validation, and events.

Canonical recording format: UTF-8 text with an optional block of
``# key: value`` metadata lines, then one sample per line::

    t_us gaze_lon gaze_lat head_yaw head_pitch head_roll valid

Angles are in degrees, timestamps in microseconds, ``valid`` is 0/1.
During tracking loss (``valid=0``) gaze and head fields repeat the last
valid sample. Label files are sample-aligned lines ``t_us PRIMARY
SECONDARY`` with fixed uppercase tokens; event files are derived and
never authoritative. Serialization is canonical (fixed header-key order,
shortest round-trip float formatting), so parse -> serialize -> parse is
a fixed point with bit-identical second serialization.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

from . import geometry
from .geometry import HeadPose, SphericalDir, central_angle_deg, wrap_deg


class FormatError(ValueError):
    """Unrecoverable problem with an input file."""


class PrimaryLabel(IntEnum):
    UNLABELLED = 0
    FIXATION = 1
    SACCADE = 2
    SP = 3
    NOISE = 4


class SecondaryLabel(IntEnum):
    NONE = 0
    VOR = 1
    OKN = 2
    OKN_VOR = 3
    HEAD_PURSUIT = 4


PRIMARY_CLASSES = (PrimaryLabel.FIXATION, PrimaryLabel.SACCADE, PrimaryLabel.SP, PrimaryLabel.NOISE)
SECONDARY_CLASSES = (
    SecondaryLabel.VOR,
    SecondaryLabel.OKN,
    SecondaryLabel.OKN_VOR,
    SecondaryLabel.HEAD_PURSUIT,
)

_PRIMARY_FROM_TOKEN = {label.name: label for label in PrimaryLabel}
_SECONDARY_FROM_TOKEN = {label.name: label for label in SecondaryLabel}


@dataclass(frozen=True)
class GazeSample:
    """One timestamped record: world gaze, head pose, eye-tracking validity."""

    t_us: int
    gaze: SphericalDir
    head: HeadPose
    tracking_valid: bool


@dataclass(frozen=True)
class RecordingMeta:
    sampling_rate_hz: float = 120.0
    video_id: str = ""
    observer_id: str = ""
    fov_deg: tuple[float, float] | None = None
    fov_px: tuple[int, int] | None = None
    video_dims_px: tuple[int, int] | None = None
    extra: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if self.sampling_rate_hz <= 0:
            raise ValueError("sampling_rate_hz must be positive")
        for name in ("fov_deg", "fov_px", "video_dims_px"):
            dims = getattr(self, name)
            if dims is not None and (dims[0] <= 0 or dims[1] <= 0):
                raise ValueError(f"{name} must be positive")

    @property
    def nominal_dt_us(self) -> int:
        return int(round(1e6 / self.sampling_rate_hz))


@dataclass
class ValidationIssue:
    line: int  # 1-based line in the parsed stream; 0 for stream-level issues
    kind: str  # parse | monotonic | range | loss
    message: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)
    n_lines: int = 0
    n_samples: int = 0
    n_skipped: int = 0  # unparseable lines
    n_dropped: int = 0  # parseable lines dropped for invalid data (monotonicity)
    loss_runs: int = 0
    loss_samples: int = 0

    def add(self, line: int, kind: str, message: str) -> None:
        self.issues.append(ValidationIssue(line, kind, message))

    def ok(self) -> bool:
        return not self.issues

    def summary(self) -> str:
        lines = [
            f"samples: {self.n_samples}, skipped lines: {self.n_skipped}, "
            f"dropped samples: {self.n_dropped}, "
            f"tracking-loss runs: {self.loss_runs} ({self.loss_samples} samples)"
        ]
        lines.extend(f"line {i.line}: {i.kind}: {i.message}" for i in self.issues)
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class Recording:
    """An immutable sample sequence plus metadata.

    Samples are stored as parallel arrays for fast whole-recording math;
    ``sample(i)`` and iteration provide the per-sample view.
    """

    meta: RecordingMeta
    t_us: np.ndarray
    gaze_lon: np.ndarray
    gaze_lat: np.ndarray
    head_yaw: np.ndarray
    head_pitch: np.ndarray
    head_roll: np.ndarray
    valid: np.ndarray
    report: ValidationReport | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        n = self.t_us.shape[0]
        for name in ("gaze_lon", "gaze_lat", "head_yaw", "head_pitch", "head_roll", "valid"):
            if getattr(self, name).shape[0] != n:
                raise ValueError("all sample arrays must have equal length")
        if n > 1 and np.any(np.diff(self.t_us) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        for name in ("t_us", "gaze_lon", "gaze_lat", "head_yaw", "head_pitch", "head_roll", "valid"):
            getattr(self, name).setflags(write=False)

    @property
    def n_samples(self) -> int:
        return int(self.t_us.shape[0])

    @property
    def duration_us(self) -> int:
        if self.n_samples == 0:
            return 0
        return int(self.t_us[-1]) - int(self.t_us[0]) + self.meta.nominal_dt_us

    def sample(self, i: int) -> GazeSample:
        return GazeSample(
            t_us=int(self.t_us[i]),
            gaze=SphericalDir(float(self.gaze_lon[i]), float(self.gaze_lat[i])),
            head=HeadPose(float(self.head_yaw[i]), float(self.head_pitch[i]), float(self.head_roll[i])),
            tracking_valid=bool(self.valid[i]),
        )

    def __iter__(self) -> Iterator[GazeSample]:
        return (self.sample(i) for i in range(self.n_samples))

    @cached_property
    def fov_trajectory(self) -> tuple[np.ndarray, np.ndarray]:
        """Eye-in-head (azimuth, elevation) series derived from gaze and head."""
        az, el = geometry.world_to_fov_arr(
            self.gaze_lon, self.gaze_lat, self.head_yaw, self.head_pitch, self.head_roll
        )
        az.setflags(write=False)
        el.setflags(write=False)
        return az, el

    def fov_bounds_exceeded(self, slack_deg: float = 5.0) -> np.ndarray:
        """Mask of samples whose eye-in-head direction falls outside the
        headset FOV plus slack; flagged, never rejected. All-False when the
        metadata has no FOV dimensions.
        """
        if self.meta.fov_deg is None:
            return np.zeros(self.n_samples, dtype=bool)
        az, el = self.fov_trajectory
        half_w, half_h = self.meta.fov_deg[0] / 2.0, self.meta.fov_deg[1] / 2.0
        return (np.abs(az) > half_w + slack_deg) | (np.abs(el) > half_h + slack_deg)


@dataclass(eq=False)
class LabelTrack:
    """Sample-aligned primary and secondary labels."""

    t_us: np.ndarray
    primary: np.ndarray  # PrimaryLabel codes, int8
    secondary: np.ndarray  # SecondaryLabel codes, int8

    def __post_init__(self) -> None:
        self.t_us = np.asarray(self.t_us, dtype=np.int64)
        self.primary = np.asarray(self.primary, dtype=np.int8)
        self.secondary = np.asarray(self.secondary, dtype=np.int8)
        if not (self.t_us.shape == self.primary.shape == self.secondary.shape):
            raise ValueError("track arrays must have equal length")

    @property
    def n_samples(self) -> int:
        return int(self.t_us.shape[0])

    def is_complete(self) -> bool:
        return bool(np.all(self.primary != PrimaryLabel.UNLABELLED))

    def copy(self) -> "LabelTrack":
        return LabelTrack(self.t_us.copy(), self.primary.copy(), self.secondary.copy())

    def same_labels(self, other: "LabelTrack") -> bool:
        return (
            np.array_equal(self.t_us, other.t_us)
            and np.array_equal(self.primary, other.primary)
            and np.array_equal(self.secondary, other.secondary)
        )

    @staticmethod
    def unlabelled(t_us: np.ndarray) -> "LabelTrack":
        n = len(t_us)
        return LabelTrack(
            np.asarray(t_us, dtype=np.int64),
            np.full(n, PrimaryLabel.UNLABELLED, dtype=np.int8),
            np.full(n, SecondaryLabel.NONE, dtype=np.int8),
        )


@dataclass(frozen=True)
class EventSegment:
    """A maximal run of one label: [start_us, end_us), with derived stats."""

    start_us: int
    end_us: int
    label: PrimaryLabel | SecondaryLabel
    n_samples: int
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.start_us >= self.end_us:
            raise ValueError("event must have start_us < end_us")

    @property
    def duration_us(self) -> int:
        return self.end_us - self.start_us

    def overlaps(self, other: "EventSegment") -> bool:
        return self.start_us < other.end_us and other.start_us < self.end_us


# --- recording format -------------------------------------------------------

_HEADER_KEYS = (
    "format",
    "video_id",
    "observer_id",
    "sampling_rate_hz",
    "fov_deg",
    "fov_px",
    "video_dims_px",
)
RECORDING_FORMAT = "gaze360-recording/1"
LABELS_FORMAT = "gaze360-labels/1"
EVENTS_FORMAT = "gaze360-events/1"


def _parse_header(lines: list[str]) -> tuple[dict[str, str], int]:
    """Read the leading '#' block. Any malformed header line is a hard error."""
    header: dict[str, str] = {}
    i = 0
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped.startswith("#"):
            return header, i
        body = stripped[1:].strip()
        if ":" not in body:
            raise FormatError(f"line {i + 1}: malformed header line {stripped!r}")
        key, value = body.split(":", 1)
        key = key.strip()
        if not key:
            raise FormatError(f"line {i + 1}: malformed header line {stripped!r}")
        header[key] = value.strip()
    return header, len(lines)


def _pair(value: str, cast) -> tuple:
    parts = value.split()
    if len(parts) != 2:
        raise FormatError(f"expected two values, got {value!r}")
    return cast(parts[0]), cast(parts[1])


def _meta_from_header(header: dict[str, str]) -> RecordingMeta:
    try:
        meta = RecordingMeta(
            sampling_rate_hz=float(header.get("sampling_rate_hz", 120.0)),
            video_id=header.get("video_id", ""),
            observer_id=header.get("observer_id", ""),
            fov_deg=_pair(header["fov_deg"], float) if "fov_deg" in header else None,
            fov_px=_pair(header["fov_px"], int) if "fov_px" in header else None,
            video_dims_px=_pair(header["video_dims_px"], int) if "video_dims_px" in header else None,
            extra=tuple((k, v) for k, v in header.items() if k not in _HEADER_KEYS),
        )
    except (ValueError, FormatError) as exc:
        raise FormatError(f"bad header value: {exc}") from exc
    return meta


def _canon_angle(value: float, line: int, name: str, lat_like: bool, report: ValidationReport) -> float:
    if lat_like:
        if -90.0 <= value <= 90.0:
            return value
        clamped = min(max(value, -90.0), 90.0)
        report.add(line, "range", f"{name} {value} clamped to {clamped}")
        return clamped
    if -180.0 <= value < 180.0:
        return value
    wrapped = float(wrap_deg(value))
    report.add(line, "range", f"{name} {value} canonicalized to {wrapped}")
    return wrapped


def parse_recording(data: bytes | str) -> Recording:
    """Parse the canonical recording format.

    Recoverable problems (bad sample lines, non-monotonic timestamps,
    out-of-range angles) are repaired or skipped and listed in the attached
    ValidationReport. A malformed header or more than 10% skipped lines is a
    hard FormatError.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = data.splitlines()
    report = ValidationReport()
    header, first_data = _parse_header(lines)
    if "format" in header and header["format"] != RECORDING_FORMAT:
        raise FormatError(f"unsupported format {header['format']!r}")
    meta = _meta_from_header(header)

    cols: list[list[float]] = [[] for _ in range(7)]
    n_data_lines = 0
    last_t: int | None = None
    for lineno0, line in enumerate(lines[first_data:], start=first_data + 1):
        stripped = line.strip()
        if not stripped:
            continue
        n_data_lines += 1
        if stripped.startswith("#"):
            report.add(lineno0, "parse", "comment line inside sample block, skipped")
            report.n_skipped += 1
            continue
        parts = stripped.split()
        if len(parts) != 7:
            report.add(lineno0, "parse", f"expected 7 fields, got {len(parts)}")
            report.n_skipped += 1
            continue
        try:
            t = int(parts[0])
            values = [float(p) for p in parts[1:6]]
            valid_field = int(parts[6])
        except ValueError as exc:
            report.add(lineno0, "parse", str(exc))
            report.n_skipped += 1
            continue
        if not all(np.isfinite(values)) or valid_field not in (0, 1):
            report.add(lineno0, "parse", "non-finite value or bad valid flag")
            report.n_skipped += 1
            continue
        if last_t is not None and t <= last_t:
            # parseable but invalid: dropped and reported, yet not counted
            # against the 10% unparseable-line budget
            report.add(lineno0, "monotonic", f"timestamp {t} not after {last_t}")
            report.n_dropped += 1
            continue
        last_t = t
        lon = _canon_angle(values[0], lineno0, "gaze_lon", False, report)
        lat = _canon_angle(values[1], lineno0, "gaze_lat", True, report)
        yaw = _canon_angle(values[2], lineno0, "head_yaw", False, report)
        pitch = _canon_angle(values[3], lineno0, "head_pitch", True, report)
        roll = _canon_angle(values[4], lineno0, "head_roll", False, report)
        for col, value in zip(cols, (t, lon, lat, yaw, pitch, roll, valid_field)):
            col.append(value)

    report.n_lines = n_data_lines
    report.n_samples = len(cols[0])
    if n_data_lines > 0 and report.n_skipped / n_data_lines > 0.10:
        raise FormatError(
            f"{report.n_skipped}/{n_data_lines} lines unparseable (>10%)"
        )

    valid = np.array(cols[6], dtype=bool)
    _scan_loss_runs(valid, report)
    return Recording(
        meta=meta,
        t_us=np.array(cols[0], dtype=np.int64),
        gaze_lon=np.array(cols[1], dtype=float),
        gaze_lat=np.array(cols[2], dtype=float),
        head_yaw=np.array(cols[3], dtype=float),
        head_pitch=np.array(cols[4], dtype=float),
        head_roll=np.array(cols[5], dtype=float),
        valid=valid,
        report=report,
    )


def _scan_loss_runs(valid: np.ndarray, report: ValidationReport) -> None:
    for a, b in contiguous_runs(~valid):
        report.loss_runs += 1
        report.loss_samples += b - a
        report.add(0, "loss", f"tracking loss: samples {a}..{b - 1}")


def serialize_recording(rec: Recording) -> str:
    """Canonical serialization; see module docstring for the format."""
    out = io.StringIO()
    out.write(f"# format: {RECORDING_FORMAT}\n")
    meta = rec.meta
    if meta.video_id:
        out.write(f"# video_id: {meta.video_id}\n")
    if meta.observer_id:
        out.write(f"# observer_id: {meta.observer_id}\n")
    out.write(f"# sampling_rate_hz: {meta.sampling_rate_hz!r}\n")
    if meta.fov_deg is not None:
        out.write(f"# fov_deg: {meta.fov_deg[0]!r} {meta.fov_deg[1]!r}\n")
    if meta.fov_px is not None:
        out.write(f"# fov_px: {meta.fov_px[0]} {meta.fov_px[1]}\n")
    if meta.video_dims_px is not None:
        out.write(f"# video_dims_px: {meta.video_dims_px[0]} {meta.video_dims_px[1]}\n")
    for key, value in meta.extra:
        out.write(f"# {key}: {value}\n")
    for i in range(rec.n_samples):
        out.write(
            f"{int(rec.t_us[i])} {float(rec.gaze_lon[i])!r} {float(rec.gaze_lat[i])!r} "
            f"{float(rec.head_yaw[i])!r} {float(rec.head_pitch[i])!r} "
            f"{float(rec.head_roll[i])!r} {int(rec.valid[i])}\n"
        )
    return out.getvalue()


# --- label format -----------------------------------------------------------

def parse_labels(data: bytes | str) -> LabelTrack:
    """Parse a label file. Label files are tool-written, so errors are hard."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = data.splitlines()
    header, first_data = _parse_header(lines)
    if "format" in header and header["format"] != LABELS_FORMAT:
        raise FormatError(f"unsupported format {header['format']!r}")
    t: list[int] = []
    primary: list[int] = []
    secondary: list[int] = []
    for lineno0, line in enumerate(lines[first_data:], start=first_data + 1):
        stripped = line.strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise FormatError(f"line {lineno0}: expected 't_us PRIMARY SECONDARY'")
        try:
            t.append(int(parts[0]))
            primary.append(_PRIMARY_FROM_TOKEN[parts[1]])
            secondary.append(_SECONDARY_FROM_TOKEN[parts[2]])
        except (ValueError, KeyError) as exc:
            raise FormatError(f"line {lineno0}: {exc}") from exc
    track = LabelTrack(np.array(t, dtype=np.int64), np.array(primary), np.array(secondary))
    if track.n_samples > 1 and np.any(np.diff(track.t_us) <= 0):
        raise FormatError("label timestamps must be strictly increasing")
    return track


def serialize_labels(track: LabelTrack, provenance: Iterable[tuple[str, str]] = ()) -> str:
    out = io.StringIO()
    out.write(f"# format: {LABELS_FORMAT}\n")
    for key, value in provenance:
        out.write(f"# {key}: {value}\n")
    for i in range(track.n_samples):
        out.write(
            f"{int(track.t_us[i])} "
            f"{PrimaryLabel(track.primary[i]).name} "
            f"{SecondaryLabel(track.secondary[i]).name}\n"
        )
    return out.getvalue()


def serialize_events(events: Iterable[EventSegment], tier: str,
                     provenance: Iterable[tuple[str, str]] = ()) -> str:
    out = io.StringIO()
    out.write(f"# format: {EVENTS_FORMAT}\n")
    out.write(f"# tier: {tier}\n")
    for key, value in provenance:
        out.write(f"# {key}: {value}\n")
    for ev in events:
        out.write(f"{ev.start_us} {ev.end_us} {ev.label.name} {ev.n_samples}\n")
    return out.getvalue()


# --- run-length events ------------------------------------------------------

def contiguous_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """[start, end) index pairs of the True runs in a boolean array."""
    mask = np.asarray(mask, dtype=bool)
    if mask.size == 0:
        return []
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    diff = np.diff(padded)
    starts = np.flatnonzero(diff == 1)
    ends = np.flatnonzero(diff == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def _label_runs(codes: np.ndarray) -> list[tuple[int, int, int]]:
    """(start, end, code) for maximal runs of identical codes."""
    n = codes.shape[0]
    if n == 0:
        return []
    change = np.flatnonzero(np.diff(codes)) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [n]))
    return [(int(a), int(b), int(codes[a])) for a, b in zip(starts, ends)]


def _event_end_us(t_us: np.ndarray, end_idx: int, dt_us: int) -> int:
    if end_idx < t_us.shape[0]:
        return int(t_us[end_idx])
    return int(t_us[-1]) + dt_us


def _track_dt_us(track: LabelTrack, rate_hz: float | None) -> int:
    if rate_hz is not None:
        return int(round(1e6 / rate_hz))
    if track.n_samples > 1:
        return int(round(float(np.median(np.diff(track.t_us)))))
    return 1


def samples_to_events(track: LabelTrack, rate_hz: float | None = None
                      ) -> tuple[list[EventSegment], list[EventSegment]]:
    """Maximal runs of identical labels, one list per tier.

    UNLABELLED (primary) and NONE (secondary) runs produce no events. An
    all-UNLABELLED track yields zero primary events and a warning.
    """
    dt = _track_dt_us(track, rate_hz)
    primary_events = [
        EventSegment(int(track.t_us[a]), _event_end_us(track.t_us, b, dt), PrimaryLabel(code), b - a)
        for a, b, code in _label_runs(track.primary)
        if code != PrimaryLabel.UNLABELLED
    ]
    secondary_events = [
        EventSegment(int(track.t_us[a]), _event_end_us(track.t_us, b, dt), SecondaryLabel(code), b - a)
        for a, b, code in _label_runs(track.secondary)
        if code != SecondaryLabel.NONE
    ]
    if track.n_samples > 0 and not primary_events and not secondary_events:
        warnings.warn("track has no labelled samples", stacklevel=2)
    return primary_events, secondary_events


def events_to_samples(events: Iterable[EventSegment], t_us: np.ndarray, tier: str) -> np.ndarray:
    """Inverse of samples_to_events for one tier; gaps become UNLABELLED/NONE."""
    t_us = np.asarray(t_us, dtype=np.int64)
    if tier == "primary":
        fill = PrimaryLabel.UNLABELLED
    elif tier == "secondary":
        fill = SecondaryLabel.NONE
    else:
        raise ValueError(f"unknown tier {tier!r}")
    codes = np.full(t_us.shape[0], int(fill), dtype=np.int8)
    for ev in events:
        a = int(np.searchsorted(t_us, ev.start_us, side="left"))
        b = int(np.searchsorted(t_us, ev.end_us, side="left"))
        codes[a:b] = int(ev.label)
    return codes


# --- corpus statistics ------------------------------------------------------

def head_motion_fraction(rec: Recording, threshold_deg_s: float = 10.0,
                         window_us: int = 100_000) -> float:
    """Fraction of samples whose head speed over a centered window meets the threshold.

    Head speed uses the (yaw, pitch) direction trajectory only; roll is
    excluded. Windows are clamped at the recording edges.
    """
    n = rec.n_samples
    if n < 2:
        return 0.0
    t = rec.t_us
    half = window_us // 2
    j0 = np.searchsorted(t, t - half, side="left")
    j1 = np.searchsorted(t, t + half, side="right") - 1
    usable = j1 > j0
    speeds = np.zeros(n)
    dist = central_angle_deg(
        rec.head_yaw[j0[usable]], rec.head_pitch[j0[usable]],
        rec.head_yaw[j1[usable]], rec.head_pitch[j1[usable]],
    )
    dt_s = (t[j1[usable]] - t[j0[usable]]) / 1e6
    speeds[usable] = dist / dt_s
    return float(np.mean(speeds >= threshold_deg_s))
