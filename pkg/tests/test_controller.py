import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occlink.controller import (Case, SamplingPolicy, SituationCase, TemporalConfig, classify, estimate_homography,
                                match_spots, policy_log_row, sampling_interval, stabilize, temporal_decode)
from occlink.detect import RoI, Transform2D
from occlink.detect.transform import apply_affine
from occlink.modem import Scheme
from oracles import affine_ls
from scenes import temporal_scene


def roi_at(x, y=100.0):
    return RoI((int(x) - 2, int(y) - 2, int(x) + 3, int(y) + 3), (float(x), float(y)), 20, 0.8)


class TestClassify:
    def test_spatial(self):
        assert classify([25, 40], 2, 20).case is Case.SPATIAL

    def test_temporal_nearest_vehicle(self):
        s = classify([10.2, 40], 2, 20)
        assert s.case is Case.TEMPORAL and s.voi_index == 0 and s.nearest_distance == 10.2

    def test_empty(self):
        assert classify([], 0).case is Case.NORMAL

    def test_single_far_vehicle(self):
        assert classify([35.0], 1).case is Case.NORMAL

    def test_exhaustive_table(self):
        for near, many in itertools.product([False, True], repeat=2):
            d = [10.0 if near else 30.0] + ([40.0] if many else [])
            expect = Case.TEMPORAL if near else (Case.SPATIAL if many else Case.NORMAL)
            assert classify(d, len(d), 20).case is expect

    def test_tie_goes_to_leftmost(self):
        rois = [roi_at(300), roi_at(100), roi_at(200)]
        s = classify([12.0, 12.0, 30.0], rois=rois)
        assert s.voi_index == 1 and s.voi is rois[1]

    def test_temporal_needs_voi(self):
        with pytest.raises(ValueError):
            SituationCase(Case.TEMPORAL)

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            classify([1.0], 1, 0)

    @given(st.lists(st.floats(0.5, 100), max_size=6), st.floats(1, 50), st.floats(0.01, 100))
    def test_scale_consistency(self, d, thr, k):
        a = classify(d, len(d), thr)
        b = classify([x * k for x in d], len(d), thr * k)
        assert a.case is b.case and a.voi_index == b.voi_index


class TestIntervals:
    @pytest.mark.parametrize("case,expect", [(Case.NORMAL, 10.0), (Case.SPATIAL, 15.0), (Case.TEMPORAL, 1.0)])
    def test_mapping(self, case, expect):
        assert sampling_interval(case, 10.0) == pytest.approx(expect)

    def test_exhaustive(self):
        t = 0.01
        outs = {sampling_interval(c, t) for c in Case}
        assert outs == {t, 1.5 * t, t / 10}

    def test_policy(self):
        p = SamplingPolicy(0.01)
        assert p.current_interval == 0.01
        assert p.update(Case.TEMPORAL).current_interval == pytest.approx(0.001)
        with pytest.raises(ValueError):
            SamplingPolicy(0.01, 0.02)
        with pytest.raises(ValueError):
            sampling_interval(Case.NORMAL, 0)

    def test_log_row(self):
        row = policy_log_row(1.5, classify([10.2, 40], 2), 0.001)
        assert row == {"time": 1.5, "case": "temporal", "voi_id": 0, "distance": 10.2, "interval": 0.001}


AFFINE = np.array([[1.05, 0.08, 3.0], [-0.06, 0.97, -2.0]])


def planted(rng, n=60, sigma=1.0, outliers=0.3):
    src = rng.uniform(0, 200, (n, 2))
    dst = apply_affine(AFFINE, src) + rng.normal(0, sigma, (n, 2))
    bad = rng.random(n) < outliers
    dst[bad] = rng.uniform(0, 200, (bad.sum(), 2))
    return src, dst, ~bad


class TestEstimator:
    def test_exact(self):
        src = np.random.default_rng(0).uniform(0, 100, (20, 2))
        res = estimate_homography(src, apply_affine(AFFINE, src), sigma=1e-3)
        assert np.allclose(res.transform, AFFINE, atol=1e-9) and res.inliers.all()

    def test_threshold(self):
        src = np.random.default_rng(0).uniform(0, 100, (8, 2))
        assert estimate_homography(src, src, sigma=1.0).threshold == pytest.approx(2.447, abs=1e-3)

    def test_similarity_model(self):
        t = Transform2D(1.1, 0.2, 4, -1)
        src = np.random.default_rng(1).uniform(0, 100, (10, 2))
        res = estimate_homography(src, t.apply(src), sigma=1e-3, model="similarity")
        assert np.allclose(res.transform.params(), t.params(), atol=1e-9)

    def test_outliers_recovered(self):
        rng = np.random.default_rng(2)
        src, dst, good = planted(rng)
        res = estimate_homography(src, dst, 1.0, 500, rng)
        p, se = affine_ls(src[good], dst[good])
        assert np.all(np.abs(res.transform.ravel() - p) <= 3 * se)

    def test_inliers_inside_threshold(self):
        rng = np.random.default_rng(3)
        src, dst, _ = planted(rng)
        res = estimate_homography(src, dst, 1.0, 200, rng)
        d = np.linalg.norm(res.apply(src) - dst, axis=1)
        assert np.all(d[res.inliers] < res.threshold)
        assert np.all(d[~res.inliers] >= res.threshold)

    def test_zero_noise_limit(self):
        rng = np.random.default_rng(4)
        src = rng.uniform(0, 100, (30, 2))
        dst = apply_affine(AFFINE, src) + rng.normal(0, 1e-7, (30, 2))
        res = estimate_homography(src, dst, sigma=1e-5)
        p, _ = affine_ls(src, dst)
        assert res.inliers.all() and np.allclose(res.transform.ravel(), p, atol=1e-9)

    def test_failure_and_errors(self):
        rng = np.random.default_rng(5)
        src = rng.uniform(0, 100, (6, 2))
        res = estimate_homography(src, rng.uniform(0, 100, (6, 2)), sigma=1e-3, max_rounds=50)
        assert not res.success
        with pytest.raises(ValueError):
            estimate_homography(src[:3], src[:3])
        with pytest.raises(ValueError):
            estimate_homography(src, src, sigma=0)
        with pytest.raises(ValueError):
            estimate_homography(src, src, model="projective")

    def test_match_spots(self):
        a = np.array([[0.0, 0.0], [10.0, 0.0], [50.0, 50.0]])
        b = a + [1.0, 1.0]
        s, d = match_spots(a, b[:2], 3.0)
        assert len(s) == 2 and np.allclose(d - s, 1.0)
        assert len(match_spots(a, np.empty((0, 2)), 3.0)[0]) == 0


class TestTemporal:
    def test_static_scene(self):
        frames, roi, pk = temporal_scene(seed=1, jitter_px=0.0)
        res = temporal_decode(frames, roi)
        assert res.ok and res.bits == pk.payload

    def test_jittered_scene(self):
        frames, roi, pk = temporal_scene(seed=3, jitter_px=3.0)
        res = temporal_decode(frames, roi)
        assert res.ok and res.bits == pk.payload

    def test_stabilize_follows_jitter(self):
        frames, roi, _ = temporal_scene(seed=4, jitter_px=3.0)
        cum, n = stabilize(frames[:20])
        assert n == 20
        # recovered frame-0-to-i shift of the VOI position
        c = np.array(roi.centroid)
        shifts = [h.apply(c) - c for h in cum]
        assert all(np.all(np.abs(s) <= 3.0 + 0.3) for s in shifts)

    def test_empty(self):
        assert not temporal_decode([], roi_at(10)).sync_found

    def test_tracking_loss_is_partial(self):
        frames, roi, _ = temporal_scene(seed=5, jitter_px=0.0)
        blank = [np.zeros(frames[0].shape)] * 3
        res = temporal_decode(frames[:10] + blank + frames[10:], roi)
        assert res.frames_consumed == 10

    def test_only_frame_rate_schemes(self):
        with pytest.raises(ValueError):
            TemporalConfig(scheme=Scheme.S2PSK)
