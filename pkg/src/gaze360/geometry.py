"""Spherical geometry for head-free gaze analysis.

World directions live on the 360-degree video sphere as longitude in
[-180, 180) and latitude in [-90, 90], both in degrees. Equirectangular
pixels map linearly onto these coordinates, with (0, 0) at the top-left
corner of the frame.

Head orientation is an intrinsic yaw -> pitch -> roll sequence: yaw about
the world up axis, pitch about the rotated right axis, roll about the
resulting forward axis. Eye-in-head ("FOV") directions use azimuth and
elevation in the head frame under the same convention, so a zero head pose
makes the FOV frame coincide with the world frame.

All distances are great-circle central angles. Euclidean distance in
equirectangular coordinates is never used; it is badly distorted near the
poles and the +-180 seam. Directions produced from unit vectors have their
longitude canonicalized to 0 at the poles, where it is undefined.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


class GeometryWarning(UserWarning):
    """Out-of-range or ill-conditioned input that was repaired, not rejected."""


def wrap_deg(angle):
    """Wrap angle(s) in degrees into [-180, 180)."""
    return (angle + 180.0) % 360.0 - 180.0


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class SphericalDir:
    """A direction on the video sphere: longitude [-180, 180), latitude [-90, 90]."""

    lon: float
    lat: float

    def __post_init__(self) -> None:
        _require_finite(lon=self.lon, lat=self.lat)
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        object.__setattr__(self, "lon", float(wrap_deg(self.lon)))
        object.__setattr__(self, "lat", float(self.lat))


@dataclass(frozen=True)
class HeadPose:
    """Head direction (yaw, pitch) plus tilt about the forward axis (roll)."""

    yaw: float
    pitch: float
    roll: float = 0.0

    def __post_init__(self) -> None:
        _require_finite(yaw=self.yaw, pitch=self.pitch, roll=self.roll)
        if not -90.0 <= self.pitch <= 90.0:
            raise ValueError(f"pitch out of range: {self.pitch}")
        object.__setattr__(self, "yaw", float(wrap_deg(self.yaw)))
        object.__setattr__(self, "pitch", float(self.pitch))
        object.__setattr__(self, "roll", float(wrap_deg(self.roll)))


@dataclass(frozen=True)
class FovDir:
    """Eye-in-head direction: azimuth/elevation relative to the head forward axis."""

    azimuth: float
    elevation: float

    def __post_init__(self) -> None:
        _require_finite(azimuth=self.azimuth, elevation=self.elevation)
        if not -90.0 <= self.elevation <= 90.0:
            raise ValueError(f"elevation out of range: {self.elevation}")
        object.__setattr__(self, "azimuth", float(wrap_deg(self.azimuth)))
        object.__setattr__(self, "elevation", float(self.elevation))

    def in_bounds(self, half_fov_az: float, half_fov_el: float, slack: float = 5.0) -> bool:
        return (
            abs(self.azimuth) <= half_fov_az + slack
            and abs(self.elevation) <= half_fov_el + slack
        )


# --- array core -----------------------------------------------------------

def unit_vector(lon_deg, lat_deg) -> np.ndarray:
    """Unit vector(s) for direction(s): x forward, y toward +lon, z up."""
    lon = np.radians(lon_deg)
    lat = np.radians(lat_deg)
    cl = np.cos(lat)
    return np.stack([cl * np.cos(lon), cl * np.sin(lon), np.sin(lat)], axis=-1)


def to_lonlat(v: np.ndarray, pole_eps: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """(lon, lat) of unit vector(s); longitude canonicalized to 0 at the poles."""
    z = np.clip(v[..., 2], -1.0, 1.0)
    lat = np.degrees(np.arcsin(z))
    lon = wrap_deg(np.degrees(np.arctan2(v[..., 1], v[..., 0])))
    lon = np.where(90.0 - np.abs(lat) < pole_eps, 0.0, lon)
    return lon, lat


def central_angle_deg(lon1, lat1, lon2, lat2) -> np.ndarray:
    """Great-circle angle(s) in degrees between two directions, in [0, 180]."""
    a = unit_vector(lon1, lat1)
    b = unit_vector(lon2, lat2)
    dot = np.clip(np.sum(a * b, axis=-1), -1.0, 1.0)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.degrees(np.arctan2(cross, dot))


def head_matrix(yaw, pitch, roll) -> np.ndarray:
    """Rotation(s) taking head-frame vectors into the world frame."""
    y = np.radians(np.asarray(yaw, dtype=float))
    p = np.radians(np.asarray(pitch, dtype=float))
    r = np.radians(np.asarray(roll, dtype=float))
    shape = np.broadcast_shapes(y.shape, p.shape, r.shape)
    y, p, r = np.broadcast_to(y, shape), np.broadcast_to(p, shape), np.broadcast_to(r, shape)
    zero = np.zeros(shape)
    one = np.ones(shape)
    cy, sy = np.cos(y), np.sin(y)
    cp, sp = np.cos(p), np.sin(p)
    cr, sr = np.cos(r), np.sin(r)
    rz = np.stack(
        [
            np.stack([cy, -sy, zero], axis=-1),
            np.stack([sy, cy, zero], axis=-1),
            np.stack([zero, zero, one], axis=-1),
        ],
        axis=-2,
    )
    # pitch > 0 lifts the forward axis toward +z, hence Ry(-pitch)
    ry = np.stack(
        [
            np.stack([cp, zero, -sp], axis=-1),
            np.stack([zero, one, zero], axis=-1),
            np.stack([sp, zero, cp], axis=-1),
        ],
        axis=-2,
    )
    rx = np.stack(
        [
            np.stack([one, zero, zero], axis=-1),
            np.stack([zero, cr, -sr], axis=-1),
            np.stack([zero, sr, cr], axis=-1),
        ],
        axis=-2,
    )
    return rz @ ry @ rx


def world_to_fov_arr(lon, lat, yaw, pitch, roll) -> tuple[np.ndarray, np.ndarray]:
    """World direction(s) expressed in the head frame as (azimuth, elevation)."""
    v = unit_vector(lon, lat)
    m = head_matrix(yaw, pitch, roll)
    u = np.einsum("...ji,...j->...i", m, v)
    return to_lonlat(u)


def fov_to_world_arr(az, el, yaw, pitch, roll) -> tuple[np.ndarray, np.ndarray]:
    """Head-frame direction(s) expressed in the world frame as (lon, lat)."""
    u = unit_vector(az, el)
    m = head_matrix(yaw, pitch, roll)
    v = np.einsum("...ij,...j->...i", m, u)
    return to_lonlat(v)


# --- scalar operations -----------------------------------------------------

def equirect_to_spherical(x: float, y: float, video_width: float, video_height: float) -> SphericalDir:
    """Map equirectangular pixel coordinates to the sphere (linear map).

    x outside [0, width] is wrapped, y outside [0, height] clamped; both emit
    a GeometryWarning. Note x == width lands on the seam and wraps to -180.
    """
    _require_finite(x=x, y=y, video_width=video_width, video_height=video_height)
    if video_width <= 0 or video_height <= 0:
        raise ValueError("video dimensions must be positive")
    if not 0.0 <= x <= video_width:
        warnings.warn(f"x={x} outside [0, {video_width}], wrapped", GeometryWarning, stacklevel=2)
        x = x % video_width
    if not 0.0 <= y <= video_height:
        warnings.warn(f"y={y} outside [0, {video_height}], clamped", GeometryWarning, stacklevel=2)
        y = min(max(y, 0.0), video_height)
    lon = (x / video_width) * 360.0 - 180.0
    lat = 90.0 - (y / video_height) * 180.0
    return SphericalDir(lon, lat)


def spherical_to_equirect(d: SphericalDir, video_width: float, video_height: float) -> tuple[float, float]:
    """Inverse of equirect_to_spherical for the canonical longitude branch."""
    if video_width <= 0 or video_height <= 0:
        raise ValueError("video dimensions must be positive")
    x = (d.lon + 180.0) / 360.0 * video_width
    y = (90.0 - d.lat) / 180.0 * video_height
    return x, y


def great_circle_deg(a: SphericalDir, b: SphericalDir) -> float:
    """Central angle between two directions, degrees in [0, 180]."""
    return float(central_angle_deg(a.lon, a.lat, b.lon, b.lat))


def head_forward(head: HeadPose) -> SphericalDir:
    return SphericalDir(head.yaw, head.pitch)


def world_to_fov(gaze: SphericalDir, head: HeadPose) -> FovDir:
    """Rotate a world gaze direction into the head frame.

    A gaze within 1 degree of the head's backward axis is returned as-is but
    flagged with a GeometryWarning: its azimuth is numerically ill-conditioned.
    """
    if great_circle_deg(gaze, head_forward(head)) > 179.0:
        warnings.warn(
            "gaze nearly antipodal to head forward axis; azimuth ill-conditioned",
            GeometryWarning,
            stacklevel=2,
        )
    az, el = world_to_fov_arr(gaze.lon, gaze.lat, head.yaw, head.pitch, head.roll)
    return FovDir(float(az), float(el))


def fov_to_world(fov: FovDir, head: HeadPose) -> SphericalDir:
    """Rotate a head-frame direction back into the world frame."""
    lon, lat = fov_to_world_arr(fov.azimuth, fov.elevation, head.yaw, head.pitch, head.roll)
    return SphericalDir(float(lon), float(lat))


# --- speeds ----------------------------------------------------------------

def angular_speed_series(lon, lat, t_us, valid=None) -> np.ndarray:
    """Per-sample angular speed in deg/s.

    speed[i] covers the motion from sample i-1 to sample i; the first sample
    copies the second. Samples on either side of a tracking-loss sample get
    NaN (undefined), as does a single-sample series. Timestamps must be
    strictly increasing.
    """
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    t_us = np.asarray(t_us, dtype=np.int64)
    n = t_us.shape[0]
    if lon.shape[0] != n or lat.shape[0] != n:
        raise ValueError("coordinate and timestamp arrays must have equal length")
    speeds = np.full(n, np.nan)
    if n < 2:
        return speeds
    dt = np.diff(t_us)
    if np.any(dt <= 0):
        raise ValueError("timestamps must be strictly increasing")
    dist = central_angle_deg(lon[:-1], lat[:-1], lon[1:], lat[1:])
    speeds[1:] = dist / (dt / 1e6)
    if valid is not None:
        bad = ~np.asarray(valid, dtype=bool)
        speeds[1:][bad[1:] | bad[:-1]] = np.nan
        speeds[0] = np.nan if (bad[0] or bad[1]) else speeds[1]
    else:
        speeds[0] = speeds[1]
    return speeds


def window_speed(lon, lat, t_us) -> float:
    """Endpoint great-circle distance over the window divided by its duration.

    Returns NaN for windows with fewer than two samples. The path inside the
    window is deliberately ignored: back-and-forth motion scores zero.
    """
    t_us = np.asarray(t_us, dtype=np.int64)
    if t_us.shape[0] < 2:
        return float("nan")
    duration_s = (int(t_us[-1]) - int(t_us[0])) / 1e6
    if duration_s <= 0:
        raise ValueError("window timestamps must be strictly increasing")
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    dist = float(central_angle_deg(lon[0], lat[0], lon[-1], lat[-1]))
    return dist / duration_s
