import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaze360.data import (
    EventSegment,
    LabelTrack,
    PrimaryLabel,
    Recording,
    RecordingMeta,
    SecondaryLabel,
)
from gaze360.detector import (
    ThresholdSet,
    WindowSpeeds,
    absorb_saccades_into_blinks,
    classify_window,
    classify_window_single,
    detect_blinks,
    detect_okn,
    detect_saccades,
    run_pipeline,
    saccade_runs,
    scaled,
    split_windows,
)
from gaze360 import synth

THR = ThresholdSet()


def t_grid(n, rate=120.0):
    return np.round(np.arange(n) * 1e6 / rate).astype(np.int64)


class TestScaled:
    def test_stationary_head(self):
        assert scaled(10, 0, 60) == 10.0

    def test_worked_half_increase(self):
        # head at 30 deg/s raises thresholds by exactly 50%
        assert scaled(10, 30, 60) == (1 + 30 / 60) * 10
        assert scaled(10, 30, 60) == 15.0

    def test_doubling_at_reference(self):
        assert scaled(65, 60, 60) == 130.0

    def test_exact_over_sweep(self):
        for v in range(0, 121):
            assert scaled(17.0, float(v), 60.0) == (1.0 + v / 60.0) * 17.0

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            scaled(10, -1, 60)
        with pytest.raises(ValueError):
            scaled(10, 0, 0)


class TestThresholdSet:
    def test_defaults(self):
        assert (THR.sacc_low, THR.sacc_high) == (35.0, 150.0)
        assert (THR.gaze_low, THR.gaze_high) == (10.0, 65.0)
        assert (THR.head_low, THR.head_ref) == (7.0, 60.0)

    def test_invariants(self):
        with pytest.raises(ValueError):
            ThresholdSet(sacc_low=150, sacc_high=35)
        with pytest.raises(ValueError):
            ThresholdSet(head_low=0)

    def test_scaled_for_head(self):
        s = THR.scaled_for_head(30.0)
        assert (s.gaze_low, s.gaze_high) == (15.0, 97.5)
        assert s.head_low == 7.0  # never scaled
        assert s.sacc_low == 35.0

    def test_dict_round_trip(self):
        assert ThresholdSet.from_dict(THR.to_dict()) == THR


class TestSaccadeRuns:
    def test_two_threshold_hand_trace(self):
        speeds = np.array([20.0, 40.0, 160.0, 40.0, 20.0])
        assert saccade_runs(speeds, 35, 150) == [(1, 4)]

    def test_sub_peak_run_is_not_a_saccade(self):
        speeds = np.array([20.0, 40.0, 100.0, 40.0, 20.0])
        assert saccade_runs(speeds, 35, 150) == []

    def test_isolated_peak_between_undefined(self):
        speeds = np.array([np.nan, 160.0, np.nan])
        assert saccade_runs(speeds, 35, 150) == [(1, 2)]
        events = detect_saccades(speeds, t_grid(3), THR)
        assert len(events) == 1
        assert events[0].n_samples == 1
        assert "short" in events[0].flags

    def test_nan_breaks_runs(self):
        speeds = np.array([40.0, 160.0, np.nan, 160.0, 40.0])
        assert saccade_runs(speeds, 35, 150) == [(0, 2), (3, 5)]

    @given(
        st.lists(
            st.one_of(st.floats(0, 400, allow_nan=False), st.just(float("nan"))),
            min_size=1, max_size=80,
        )
    )
    @settings(max_examples=200)
    def test_episode_property(self, raw):
        speeds = np.array(raw)
        for a, b in saccade_runs(speeds, 35, 150):
            chunk = speeds[a:b]
            assert np.max(chunk) >= 150.0
            assert np.all(chunk > 35.0)
            # maximality: neighbours are not > low
            if a > 0:
                assert not speeds[a - 1] > 35.0
            if b < len(speeds):
                assert not speeds[b] > 35.0


def loss_recording(valid):
    n = len(valid)
    return Recording(
        meta=RecordingMeta(),
        t_us=t_grid(n),
        gaze_lon=np.zeros(n), gaze_lat=np.zeros(n),
        head_yaw=np.zeros(n), head_pitch=np.zeros(n), head_roll=np.zeros(n),
        valid=np.asarray(valid, dtype=bool),
    )


class TestBlinks:
    def test_close_saccade_absorbed(self):
        # saccade ends 2 samples (~17 ms) before the loss run
        valid = np.ones(20, dtype=bool)
        valid[10:14] = False
        t = t_grid(20)
        blinks, survivors = absorb_saccades_into_blinks(valid, t, [(5, 8)])
        assert survivors == []
        assert blinks == [(5, 14)]

    def test_far_saccade_kept(self):
        # gap of 8 samples (~67 ms) exceeds the 40 ms rule
        valid = np.ones(30, dtype=bool)
        valid[20:24] = False
        blinks, survivors = absorb_saccades_into_blinks(valid, t_grid(30), [(5, 12)])
        assert survivors == [(5, 12)]
        assert blinks == [(20, 24)]

    def test_saccade_after_loss_absorbed(self):
        valid = np.ones(20, dtype=bool)
        valid[4:8] = False
        blinks, survivors = absorb_saccades_into_blinks(valid, t_grid(20), [(9, 12)])
        assert survivors == []
        assert blinks == [(4, 12)]

    def test_no_loss_no_blinks(self):
        rec = loss_recording(np.ones(10, dtype=bool))
        assert detect_blinks(rec, []) == []


class TestClassifyWindow:
    def test_slow_eye_static_head_is_fixation(self):
        p, s = classify_window(WindowSpeeds(0, 5, 5), THR)
        assert (p, s) == (PrimaryLabel.FIXATION, SecondaryLabel.NONE)

    def test_head_pursuit_with_scaling(self):
        # v_head=30 scales gaze_low to 15; v_eh=30 is between 15 and 97.5,
        # v_fov=2 below 15, head moving -> fixation + head pursuit
        thr = THR.scaled_for_head(30.0)
        assert thr.gaze_low == 15.0
        p, s = classify_window(WindowSpeeds(30, 2, 30), thr)
        assert (p, s) == (PrimaryLabel.FIXATION, SecondaryLabel.HEAD_PURSUIT)

    def test_pure_smooth_pursuit(self):
        p, s = classify_window(WindowSpeeds(0, 30, 30), THR)
        assert (p, s) == (PrimaryLabel.SP, SecondaryLabel.NONE)

    def test_sp_with_vor(self):
        # v_head=20: low' = 13.33, high' = 86.67; v_eh=40 medium, v_fov=25
        thr = THR.scaled_for_head(20.0)
        assert thr.gaze_low == pytest.approx(10 * (1 + 20 / 60))
        p, s = classify_window(WindowSpeeds(20, 25, 40), thr)
        assert (p, s) == (PrimaryLabel.SP, SecondaryLabel.VOR)

    def test_fixation_with_vor(self):
        p, s = classify_window(WindowSpeeds(30, 28, 3), THR.scaled_for_head(30.0))
        assert (p, s) == (PrimaryLabel.FIXATION, SecondaryLabel.VOR)

    def test_fast_fov_is_noise(self):
        thr = THR  # static head
        p, s = classify_window(WindowSpeeds(0, 70, 30), thr)
        assert (p, s) == (PrimaryLabel.NOISE, SecondaryLabel.NONE)

    def test_fast_eh_is_noise(self):
        p, s = classify_window(WindowSpeeds(0, 10, 80), THR)
        assert (p, s) == (PrimaryLabel.NOISE, SecondaryLabel.NONE)

    def test_invalid_window_is_noise(self):
        p, s = classify_window(WindowSpeeds(float("nan"), 1, 1, valid=False), THR)
        assert (p, s) == (PrimaryLabel.NOISE, SecondaryLabel.NONE)

    @given(v_fov=st.floats(0, 200), v_eh=st.floats(0, 200))
    def test_no_head_motion_never_emits_vor_or_head_pursuit(self, v_fov, v_eh):
        p, s = classify_window(WindowSpeeds(0.0, v_fov, v_eh), THR)
        assert s == SecondaryLabel.NONE
        assert p in (PrimaryLabel.FIXATION, PrimaryLabel.SP, PrimaryLabel.NOISE)

    @given(
        v_head=st.floats(0, 100), v_fov=st.floats(0, 200), v_eh=st.floats(0, 200),
        low1=st.floats(2, 20), low2=st.floats(2, 20),
    )
    @settings(max_examples=300)
    def test_raising_gaze_low_only_moves_sp_to_fixation(self, v_head, v_fov, v_eh, low1, low2):
        lo, hi = sorted([low1, low2])
        speeds = WindowSpeeds(v_head, v_fov, v_eh)
        base = ThresholdSet(gaze_low=lo).scaled_for_head(v_head)
        raised = ThresholdSet(gaze_low=hi).scaled_for_head(v_head)
        p1, _ = classify_window(speeds, base)
        p2, _ = classify_window(speeds, raised)
        if p1 == PrimaryLabel.FIXATION:
            assert p2 == PrimaryLabel.FIXATION
        if p2 == PrimaryLabel.SP:
            assert p1 == PrimaryLabel.SP

    def test_single_speed_rule(self):
        assert classify_window_single(5.0, THR)[0] == PrimaryLabel.FIXATION
        assert classify_window_single(30.0, THR)[0] == PrimaryLabel.SP
        assert classify_window_single(70.0, THR)[0] == PrimaryLabel.NOISE
        assert classify_window_single(float("nan"), THR)[0] == PrimaryLabel.NOISE


class TestSplitWindows:
    def test_exact_multiple(self):
        t = t_grid(36)  # 300 ms at 120 Hz
        wins = split_windows(t, 0, 36, 8333)
        assert len(wins) == 3
        assert wins[0] == (0, 12) and wins[-1] == (24, 36)

    def test_long_remainder_stands_alone(self):
        t = t_grid(19)  # 100 ms + ~58 ms
        wins = split_windows(t, 0, 19, 8333)
        assert wins == [(0, 12), (12, 19)]

    def test_short_remainder_merges(self):
        t = t_grid(16)  # 100 ms + ~33 ms
        wins = split_windows(t, 0, 16, 8333)
        assert wins == [(0, 16)]

    def test_whole_short_interval_alone(self):
        t = t_grid(4)
        assert split_windows(t, 0, 4, 8333) == [(0, 4)]


def okn_fixture(next_sacc_vertical=False, interval_secondary=SecondaryLabel.NONE):
    """Two saccades bounding a slow drift in the opposite direction."""
    n = 20
    t = t_grid(n)
    az = np.zeros(n)
    el = np.zeros(n)
    az[2] = 1.0
    az[3] = 2.0
    for i in range(4, 16):
        az[i] = 2.0 - 0.3 * (i - 3)
    if next_sacc_vertical:
        az[16] = az[15]
        az[17] = az[15]
        el[16] = 1.0
        el[17] = 2.0
    else:
        az[16] = az[15] + 1.0
        az[17] = az[15] + 2.0
        el[17] = 0.17  # ~5 degrees off pure horizontal
    az[18:] = az[17]
    el[18:] = el[17]
    prim = np.full(n, PrimaryLabel.FIXATION, dtype=np.int8)
    prim[2:4] = PrimaryLabel.SACCADE
    prim[16:18] = PrimaryLabel.SACCADE
    prim[4:16] = PrimaryLabel.SP
    sec = np.full(n, SecondaryLabel.NONE, dtype=np.int8)
    sec[4:16] = interval_secondary
    track = LabelTrack(t, prim, sec)
    saccades = [
        EventSegment(int(t[2]), int(t[4]), PrimaryLabel.SACCADE, 2),
        EventSegment(int(t[16]), int(t[18]), PrimaryLabel.SACCADE, 2),
    ]
    return track, saccades, az, el


class TestOkn:
    def test_opposing_slow_phase_with_collinear_saccades(self):
        track, saccades, az, el = okn_fixture()
        out = detect_okn(track, saccades, az, el)
        assert np.all(out.secondary[2:18] == SecondaryLabel.OKN)
        assert np.all(out.secondary[:2] == SecondaryLabel.NONE)
        assert np.all(out.secondary[18:] == SecondaryLabel.NONE)
        assert np.array_equal(out.primary, track.primary)

    def test_perpendicular_saccades_do_not_trigger(self):
        track, saccades, az, el = okn_fixture(next_sacc_vertical=True)
        out = detect_okn(track, saccades, az, el)
        assert np.all(out.secondary == SecondaryLabel.NONE)

    def test_vor_upgrades_to_okn_vor(self):
        track, saccades, az, el = okn_fixture(interval_secondary=SecondaryLabel.VOR)
        out = detect_okn(track, saccades, az, el)
        assert np.all(out.secondary[4:16] == SecondaryLabel.OKN_VOR)
        assert np.all(out.secondary[2:4] == SecondaryLabel.OKN)

    def test_single_variant_forces_okn_vor(self):
        track, saccades, az, el = okn_fixture()
        out = detect_okn(track, saccades, az, el, force_okn_vor=True)
        assert np.all(out.secondary[2:18] == SecondaryLabel.OKN_VOR)

    def test_tiny_displacement_skipped(self):
        track, saccades, az, el = okn_fixture()
        flat_az = np.zeros_like(az)
        flat_az[2:4] = az[2:4]
        flat_az[16:] = az[16:] - az[15]  # interval itself barely moves
        out = detect_okn(track, saccades, flat_az, np.zeros_like(el))
        assert np.all(out.secondary == SecondaryLabel.NONE)


class TestPipeline:
    def test_all_lost_tracking_is_all_noise(self):
        rec = loss_recording(np.zeros(60, dtype=bool))
        track = run_pipeline(rec, "combined")
        assert np.all(track.primary == PrimaryLabel.NOISE)

    def test_unknown_variant_rejected(self):
        rec = loss_recording(np.ones(10, dtype=bool))
        with pytest.raises(ValueError):
            run_pipeline(rec, "both")

    def test_output_is_complete(self):
        rec, _ = synth.generate(synth.five_phase_script(noise_sd=0.15), seed=5)
        for variant in ("combined", "fov", "eh"):
            track = run_pipeline(rec, variant)
            assert track.is_complete()

    def test_variant_containment(self):
        rec, _ = synth.generate(synth.five_phase_script(noise_sd=0.15), seed=6)
        for variant in ("fov", "eh"):
            track = run_pipeline(rec, variant)
            codes = set(np.unique(track.secondary).tolist())
            assert int(SecondaryLabel.VOR) not in codes
            assert int(SecondaryLabel.HEAD_PURSUIT) not in codes
            assert int(SecondaryLabel.OKN) not in codes  # positives become OKN+VOR

    def test_phase1_combined_matches_eh(self):
        phases = [synth.PhaseSpec(synth.PhaseKind.BASIC_EM, 10.0, 15.0, 40.0, noise_sd=0.0)]
        rec, _ = synth.generate(phases, seed=1)
        combined = run_pipeline(rec, "combined")
        eh = run_pipeline(rec, "eh")
        agree = np.mean(combined.primary == eh.primary)
        assert agree >= 0.99

    def test_vor_phase_combined_vs_fov_failure_mode(self):
        phases = [synth.PhaseSpec(synth.PhaseKind.VOR_FIXATION, 10.0, 55.0, 44.0, noise_sd=0.0)]
        rec, _ = synth.generate(phases, seed=2)
        combined = run_pipeline(rec, "combined")
        fov = run_pipeline(rec, "fov")
        comb_fix_vor = np.mean(
            (combined.primary == PrimaryLabel.FIXATION)
            & (combined.secondary == SecondaryLabel.VOR)
        )
        fov_sp = np.mean(fov.primary == PrimaryLabel.SP)
        assert comb_fix_vor > 0.85
        assert fov_sp > 0.60  # the documented eye-in-head-only failure mode
        assert np.mean(fov.primary == PrimaryLabel.FIXATION) < 0.30

    def test_okn_never_changes_primary(self):
        rec, _ = synth.generate(synth.five_phase_script(noise_sd=0.0), seed=3)
        track = run_pipeline(rec, "combined")
        # rebuild without OKN by zeroing secondary OKN codes and re-deriving
        okn_codes = (track.secondary == SecondaryLabel.OKN) | (
            track.secondary == SecondaryLabel.OKN_VOR
        )
        assert track.is_complete()
        assert okn_codes.sum() > 0  # OKN phase present and detected
