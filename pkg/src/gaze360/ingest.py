"""Conversion of third-party recording layouts into the canonical format.

Source layouts vary (column order, units, whether gaze is stored in the
world frame, as equirectangular pixels, or as eye-in-head angles), so the
converter is driven by a small JSON mapping file instead of hard-coding
any particular dataset:

    {
      "delimiter": ",",              // null/absent: any whitespace
      "skip_lines": 1,               // header lines to drop
      "time": {"column": 0, "unit": "us"},          // us | ms | s
      "gaze": {"frame": "world_deg", "x": 1, "y": 2},
      "head": {"yaw": 3, "pitch": 4, "roll": 5},    // roll optional
      "valid": {"column": 6, "invalid_values": ["0", "nan"]},
      "video_dims_px": [3840, 1920], // required for equirect_px gaze
      "sampling_rate_hz": 120.0,     // optional; else inferred
      "video_id": "01_park"          // optional; else the file stem
    }

gaze.frame selects the interpretation: "world_deg" passes lon/lat through,
"equirect_px" applies the linear pixel map, and "fov_deg" composes the
eye-in-head direction with the head pose (for sources that store gaze
relative to the head).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import FormatError, Recording, RecordingMeta
from .geometry import fov_to_world_arr, wrap_deg

GAZE_FRAMES = ("world_deg", "equirect_px", "fov_deg")


@dataclass(frozen=True)
class ColumnMapping:
    time_column: int
    time_unit: str
    gaze_frame: str
    gaze_x: int
    gaze_y: int
    head_yaw: int | None
    head_pitch: int | None
    head_roll: int | None
    valid_column: int | None
    invalid_values: tuple[str, ...]
    delimiter: str | None
    skip_lines: int
    video_dims_px: tuple[int, int] | None
    sampling_rate_hz: float | None
    video_id: str | None
    observer_id: str | None

    @staticmethod
    def from_json(text: str) -> "ColumnMapping":
        raw = json.loads(text)
        gaze = raw["gaze"]
        if gaze["frame"] not in GAZE_FRAMES:
            raise FormatError(f"gaze.frame must be one of {GAZE_FRAMES}")
        head = raw.get("head") or {}
        if gaze["frame"] == "fov_deg" and "yaw" not in head:
            raise FormatError("fov_deg gaze requires a head mapping")
        if gaze["frame"] == "equirect_px" and "video_dims_px" not in raw:
            raise FormatError("equirect_px gaze requires video_dims_px")
        time = raw["time"]
        if time.get("unit", "us") not in ("us", "ms", "s"):
            raise FormatError("time.unit must be us, ms or s")
        valid = raw.get("valid") or {}
        dims = raw.get("video_dims_px")
        return ColumnMapping(
            time_column=int(time["column"]),
            time_unit=time.get("unit", "us"),
            gaze_frame=gaze["frame"],
            gaze_x=int(gaze["x"]),
            gaze_y=int(gaze["y"]),
            head_yaw=int(head["yaw"]) if "yaw" in head else None,
            head_pitch=int(head["pitch"]) if "pitch" in head else None,
            head_roll=int(head["roll"]) if "roll" in head else None,
            valid_column=int(valid["column"]) if "column" in valid else None,
            invalid_values=tuple(str(v) for v in valid.get("invalid_values", ("0",))),
            delimiter=raw.get("delimiter"),
            skip_lines=int(raw.get("skip_lines", 0)),
            video_dims_px=(int(dims[0]), int(dims[1])) if dims else None,
            sampling_rate_hz=float(raw["sampling_rate_hz"]) if "sampling_rate_hz" in raw else None,
            video_id=raw.get("video_id"),
            observer_id=raw.get("observer_id"),
        )


_TIME_TO_US = {"us": 1.0, "ms": 1e3, "s": 1e6}


def convert_recording(text: str, mapping: ColumnMapping, source_name: str = "") -> Recording:
    """Convert one source file into a canonical Recording."""
    rows: list[list[str]] = []
    for line in text.splitlines()[mapping.skip_lines:]:
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rows.append(stripped.split(mapping.delimiter) if mapping.delimiter else stripped.split())
    if not rows:
        raise FormatError(f"{source_name or 'input'}: no data rows")

    def column(idx: int) -> np.ndarray:
        try:
            return np.array([float(r[idx]) for r in rows])
        except (IndexError, ValueError) as exc:
            raise FormatError(f"{source_name or 'input'}: bad column {idx}: {exc}") from exc

    t_us = np.round(column(mapping.time_column) * _TIME_TO_US[mapping.time_unit]).astype(np.int64)
    order = np.argsort(t_us, kind="stable")
    keep = np.ones(len(rows), dtype=bool)
    t_sorted = t_us[order]
    keep[order[1:]] = np.diff(t_sorted) > 0

    x = column(mapping.gaze_x)
    y = column(mapping.gaze_y)
    yaw = column(mapping.head_yaw) if mapping.head_yaw is not None else np.zeros(len(rows))
    pitch = column(mapping.head_pitch) if mapping.head_pitch is not None else np.zeros(len(rows))
    roll = column(mapping.head_roll) if mapping.head_roll is not None else np.zeros(len(rows))

    if mapping.valid_column is not None:
        valid = np.array(
            [r[mapping.valid_column] not in mapping.invalid_values for r in rows], dtype=bool
        )
    else:
        valid = np.isfinite(x) & np.isfinite(y)

    if mapping.gaze_frame == "world_deg":
        lon, lat = x, y
    elif mapping.gaze_frame == "equirect_px":
        w, h = mapping.video_dims_px
        lon = (x / w) * 360.0 - 180.0
        lat = 90.0 - (y / h) * 180.0
    else:  # fov_deg: compose eye-in-head gaze with the head pose
        lon, lat = fov_to_world_arr(x, y, yaw, pitch, roll)

    bad = ~np.isfinite(lon) | ~np.isfinite(lat)
    lon = np.where(bad, 0.0, lon)
    lat = np.where(bad, 0.0, lat)

    sel = np.flatnonzero(keep)
    sel = sel[np.argsort(t_us[sel], kind="stable")]
    t_final = t_us[sel]
    lon = np.asarray(wrap_deg(lon), dtype=float)[sel]
    lat = np.clip(lat, -90.0, 90.0)[sel]
    yaw = np.asarray(wrap_deg(yaw), dtype=float)[sel]
    pitch = np.clip(pitch, -90.0, 90.0)[sel]
    roll = np.asarray(wrap_deg(roll), dtype=float)[sel]
    ok = (valid & ~bad)[sel]

    # canonical convention: invalid samples repeat the last valid pose
    n = len(sel)
    if np.any(ok) and not np.all(ok):
        src = np.where(ok, np.arange(n), -1)
        src = np.maximum.accumulate(src)
        src[src < 0] = int(np.argmax(ok))
        lon, lat = lon[src], lat[src]
        yaw, pitch, roll = yaw[src], pitch[src], roll[src]

    rate = mapping.sampling_rate_hz
    if rate is None:
        rate = 1e6 / float(np.median(np.diff(t_final))) if n > 1 else 120.0
    meta = RecordingMeta(
        sampling_rate_hz=rate,
        video_id=mapping.video_id or Path(source_name).stem,
        observer_id=mapping.observer_id or "",
        video_dims_px=mapping.video_dims_px,
    )
    return Recording(
        meta=meta,
        t_us=t_final,
        gaze_lon=lon,
        gaze_lat=lat,
        head_yaw=yaw,
        head_pitch=pitch,
        head_roll=roll,
        valid=ok,
    )
