import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from gaze360 import geometry as geo
from gaze360.geometry import (
    FovDir,
    GeometryWarning,
    HeadPose,
    SphericalDir,
    angular_speed_series,
    equirect_to_spherical,
    fov_to_world,
    great_circle_deg,
    spherical_to_equirect,
    window_speed,
    world_to_fov,
)

W, H = 3840, 1920

finite_lon = st.floats(-180.0, 179.999999, allow_nan=False)
finite_lat = st.floats(-90.0, 90.0, allow_nan=False)


def scipy_head_matrix(yaw, pitch, roll):
    """Independent oracle: intrinsic yaw (z), pitch (about -y), roll (x)."""
    return (
        Rotation.from_euler("z", yaw, degrees=True)
        * Rotation.from_euler("y", -pitch, degrees=True)
        * Rotation.from_euler("x", roll, degrees=True)
    ).as_matrix()


class TestEquirect:
    def test_center_is_forward(self):
        d = equirect_to_spherical(W / 2, H / 2, W, H)
        assert d.lon == pytest.approx(0.0, abs=1e-12)
        assert d.lat == pytest.approx(0.0, abs=1e-12)

    def test_top_left_corner(self):
        d = equirect_to_spherical(0, 0, W, H)
        assert d.lon == -180.0
        assert d.lat == 90.0

    def test_linear_map_point(self):
        # direct evaluation of the linear map
        d = equirect_to_spherical(0.75 * W, 0.25 * H, W, H)
        assert d.lon == pytest.approx(0.75 * 360 - 180, abs=1e-12)
        assert d.lat == pytest.approx(90 - 0.25 * 180, abs=1e-12)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            equirect_to_spherical(float("nan"), 0, W, H)

    def test_out_of_range_x_wraps_with_warning(self):
        with pytest.warns(GeometryWarning):
            d = equirect_to_spherical(W + W / 4, 10, W, H)
        assert d.lon == pytest.approx(-90.0)

    def test_out_of_range_y_clamps_with_warning(self):
        with pytest.warns(GeometryWarning):
            d = equirect_to_spherical(10, -5, W, H)
        assert d.lat == 90.0

    @given(x=st.floats(0, W, exclude_max=True), y=st.floats(0, H))
    def test_round_trip_pixels(self, x, y):
        d = equirect_to_spherical(x, y, W, H)
        x2, y2 = spherical_to_equirect(d, W, H)
        assert abs(x2 - x) < 1e-9
        assert abs(y2 - y) < 1e-9


class TestGreatCircle:
    def test_equatorial_arc(self):
        assert great_circle_deg(SphericalDir(0, 0), SphericalDir(10, 0)) == pytest.approx(10.0)

    def test_near_pole_shortcut(self):
        # oracle: dot product of explicit unit vectors
        def vec(lon, lat):
            lon, lat = math.radians(lon), math.radians(lat)
            return np.array(
                [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
            )

        expected = math.degrees(math.acos(float(np.dot(vec(0, 80), vec(180, 80)))))
        assert expected == pytest.approx(20.0, abs=1e-9)
        got = great_circle_deg(SphericalDir(0, 80), SphericalDir(180, 80))
        assert got == pytest.approx(expected, abs=1e-9)

    def test_wraparound_shortest_arc(self):
        assert great_circle_deg(SphericalDir(-179, 0), SphericalDir(179, 0)) == pytest.approx(2.0)

    @given(lon1=finite_lon, lat1=finite_lat, lon2=finite_lon, lat2=finite_lat)
    def test_symmetric_and_bounded(self, lon1, lat1, lon2, lat2):
        a, b = SphericalDir(lon1, lat1), SphericalDir(lon2, lat2)
        d1, d2 = great_circle_deg(a, b), great_circle_deg(b, a)
        assert d1 == pytest.approx(d2, abs=1e-9)
        assert 0.0 <= d1 <= 180.0

    @given(lon1=finite_lon, lat1=finite_lat, lon2=finite_lon, lat2=finite_lat, k=st.integers(-3, 3))
    def test_longitude_wrap_invariance(self, lon1, lat1, lon2, lat2, k):
        a = SphericalDir(lon1, lat1)
        aw = SphericalDir(lon1 + 360.0 * k, lat1)
        b = SphericalDir(lon2, lat2)
        assert great_circle_deg(a, b) == pytest.approx(great_circle_deg(aw, b), abs=1e-9)

    @given(
        lon1=finite_lon, lat1=finite_lat,
        lon2=finite_lon, lat2=finite_lat,
        lon3=finite_lon, lat3=finite_lat,
    )
    def test_triangle_inequality(self, lon1, lat1, lon2, lat2, lon3, lat3):
        a, b, c = SphericalDir(lon1, lat1), SphericalDir(lon2, lat2), SphericalDir(lon3, lat3)
        assert great_circle_deg(a, c) <= great_circle_deg(a, b) + great_circle_deg(b, c) + 1e-9

    def test_zero_iff_equal(self):
        assert great_circle_deg(SphericalDir(12, 34), SphericalDir(12, 34)) == 0.0


class TestHeadFrame:
    def test_looking_where_head_points(self):
        f = world_to_fov(SphericalDir(30, 0), HeadPose(30, 0, 0))
        assert f.azimuth == pytest.approx(0.0, abs=1e-9)
        assert f.elevation == pytest.approx(0.0, abs=1e-9)

    def test_identity_head_pose(self):
        f = world_to_fov(SphericalDir(30, 10), HeadPose(0, 0, 0))
        assert f.azimuth == pytest.approx(30.0, abs=1e-9)
        assert f.elevation == pytest.approx(10.0, abs=1e-9)

    def test_rolled_head(self):
        # oracle: apply the documented rotation matrices via scipy
        m = scipy_head_matrix(0, 0, 90)
        lat = math.radians(10)
        v = np.array([math.cos(lat), 0.0, math.sin(lat)])
        u = m.T @ v
        az = math.degrees(math.atan2(u[1], u[0]))
        el = math.degrees(math.asin(u[2]))
        assert (az, el) == (pytest.approx(10.0, abs=1e-9), pytest.approx(0.0, abs=1e-9))
        f = world_to_fov(SphericalDir(0, 10), HeadPose(0, 0, 90))
        assert f.azimuth == pytest.approx(az, abs=1e-9)
        assert f.elevation == pytest.approx(el, abs=1e-9)

    @given(
        lon=finite_lon, lat=st.floats(-89.0, 89.0),
        yaw=finite_lon, pitch=st.floats(-89.0, 89.0), roll=finite_lon,
    )
    @settings(max_examples=200)
    def test_matches_scipy_rotation(self, lon, lat, yaw, pitch, roll):
        import warnings as _warnings

        ours = geo.head_matrix(yaw, pitch, roll)
        oracle = scipy_head_matrix(yaw, pitch, roll)
        assert np.allclose(ours, oracle, atol=1e-12)
        gaze = SphericalDir(lon, lat)
        head = HeadPose(yaw, pitch, roll)
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore", GeometryWarning)
            f = world_to_fov(gaze, head)
        u = oracle.T @ geo.unit_vector(lon, lat)
        assert geo.central_angle_deg(
            f.azimuth, f.elevation, *geo.to_lonlat(u)
        ) < 1e-9

    @given(
        lon=finite_lon, lat=st.floats(-89.0, 89.0),
        yaw=finite_lon, pitch=st.floats(-89.0, 89.0), roll=finite_lon,
    )
    @settings(max_examples=200)
    def test_round_trip(self, lon, lat, yaw, pitch, roll):
        gaze = SphericalDir(lon, lat)
        head = HeadPose(yaw, pitch, roll)
        if great_circle_deg(gaze, geo.head_forward(head)) > 179.0:
            return  # excluded: within 1 degree of the backward axis
        back = fov_to_world(world_to_fov(gaze, head), head)
        assert great_circle_deg(gaze, back) < 1e-9

    def test_antipodal_flagged(self):
        with pytest.warns(GeometryWarning):
            world_to_fov(SphericalDir(-179.99, 0), HeadPose(0, 0, 0))


class TestSpeeds:
    def test_constant_position_zero(self):
        t = np.arange(6, dtype=np.int64) * 8333
        s = angular_speed_series(np.ones(6), np.zeros(6), t)
        assert np.allclose(s, 0.0)

    def test_one_degree_per_sample(self):
        # 1 deg per sample at exactly 120 Hz
        n = 10
        t = np.round(np.arange(n) * 1e6 / 120).astype(np.int64)
        lon = np.arange(n, dtype=float)
        s = angular_speed_series(lon, np.zeros(n), t)
        assert np.all(np.abs(s - 120.0) < 0.2)

    def test_seam_crossing(self):
        t = np.array([0, 8333], dtype=np.int64)
        s = angular_speed_series(np.array([179.75, -179.75]), np.zeros(2), t)
        assert s[1] == pytest.approx(0.5 / 0.008333, rel=1e-3)
        assert s[1] < 70  # and absolutely not ~43000

    def test_non_increasing_timestamps_rejected(self):
        with pytest.raises(ValueError):
            angular_speed_series([0, 1], [0, 0], np.array([10, 10], dtype=np.int64))

    def test_loss_adjacency_undefined(self):
        t = np.arange(5, dtype=np.int64) * 8333
        valid = np.array([True, True, False, True, True])
        s = angular_speed_series(np.zeros(5), np.zeros(5), t, valid)
        assert np.isnan(s[2]) and np.isnan(s[3])
        assert not np.isnan(s[4]) and not np.isnan(s[1])

    def test_fov_speed_equals_world_speed_with_static_head(self):
        rng = np.random.default_rng(7)
        n = 50
        lon = np.cumsum(rng.normal(0, 0.3, n)) + 10
        lat = np.cumsum(rng.normal(0, 0.2, n))
        t = np.round(np.arange(n) * 1e6 / 120).astype(np.int64)
        az, el = geo.world_to_fov_arr(lon, lat, 0.0, 0.0, 0.0)
        s_world = angular_speed_series(lon, lat, t)
        s_fov = angular_speed_series(az, el, t)
        assert np.allclose(s_world, s_fov, atol=1e-9)


class TestWindowSpeed:
    def test_stationary(self):
        t = np.arange(12, dtype=np.int64) * 8333
        assert window_speed(np.full(12, 5.0), np.full(12, 5.0), t) == 0.0

    def test_one_degree_over_100ms(self):
        t = np.array([0, 100_000], dtype=np.int64)
        assert window_speed(np.array([0.0, 1.0]), np.zeros(2), t) == pytest.approx(10.0)

    def test_back_and_forth_is_zero(self):
        t = np.array([0, 25_000, 50_000, 75_000, 100_000], dtype=np.int64)
        lon = np.array([0.0, 2.0, 4.0, 2.0, 0.0])
        assert window_speed(lon, np.zeros(5), t) == 0.0

    def test_single_sample_undefined(self):
        assert math.isnan(window_speed([1.0], [1.0], np.array([0], dtype=np.int64)))

    @given(
        yaw=finite_lon, pitch=st.floats(-80.0, 80.0), roll=finite_lon,
        base_lon=st.floats(-60.0, 60.0), base_lat=st.floats(-40.0, 40.0),
    )
    @settings(max_examples=100)
    def test_rigid_rotation_invariance(self, yaw, pitch, roll, base_lon, base_lat):
        rng = np.random.default_rng(3)
        n = 12
        lon = base_lon + np.cumsum(rng.normal(0, 0.4, n))
        lat = base_lat + np.cumsum(rng.normal(0, 0.3, n))
        t = np.round(np.arange(n) * 1e6 / 120).astype(np.int64)
        v0 = window_speed(lon, lat, t)
        rlon, rlat = geo.fov_to_world_arr(lon, lat, yaw, pitch, roll)
        v1 = window_speed(rlon, rlat, t)
        assert v1 == pytest.approx(v0, abs=1e-9)


class TestTypes:
    def test_longitude_wraps_into_range(self):
        assert SphericalDir(540, 0).lon == -180.0
        assert SphericalDir(190, 0).lon == -170.0

    def test_latitude_range_enforced(self):
        with pytest.raises(ValueError):
            SphericalDir(0, 91)

    def test_head_pose_ranges(self):
        h = HeadPose(270, 0, 360)
        assert h.yaw == -90.0
        assert h.roll == 0.0
        with pytest.raises(ValueError):
            HeadPose(0, 100, 0)

    def test_fov_bounds_helper(self):
        assert FovDir(48, 0).in_bounds(50, 50)
        assert not FovDir(60, 0).in_bounds(50, 50, slack=5)
