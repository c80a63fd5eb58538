import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occlink.detect import (DegenerateTransformError, IcpError, Transform2D, binarize, cumulative_transform,
                            fit_affine, fit_similarity, fit_srt, icp_align, icp_align_robust, spot_centroids,
                            track_points)
from occlink.scene import (CameraModel, ConstantDrive, FrameToggleDrive, LedArraySpec, Scene, emitter_pixels,
                           render_sequence)
from oracles import similarity_ls, srt_grid_search

transforms = st.builds(Transform2D, st.floats(0.5, 2.0), st.floats(-math.pi, math.pi),
                       st.floats(-50, 50), st.floats(-50, 50))
PTS = np.random.default_rng(9).uniform(-20, 20, size=(12, 2))


class TestTransform:
    def test_identity(self):
        assert np.allclose(Transform2D.identity().apply(PTS), PTS)
        assert np.allclose(Transform2D.identity().matrix(), np.eye(3))

    @given(transforms, transforms, transforms)
    @settings(max_examples=50)
    def test_associativity(self, a, b, c):
        left = a.compose(b).compose(c)
        right = a.compose(b.compose(c))
        assert np.allclose(left.matrix(), right.matrix(), atol=1e-8)

    @given(transforms)
    @settings(max_examples=50)
    def test_inverse(self, a):
        assert np.allclose(a.compose(a.inverse()).matrix(), np.eye(3), atol=1e-8)
        assert np.allclose(a.inverse().apply(a.apply(PTS)), PTS, atol=1e-8)

    @given(transforms, transforms)
    @settings(max_examples=50)
    def test_compose_is_matrix_product(self, a, b):
        assert np.allclose(a.compose(b).matrix(), a.matrix() @ b.matrix(), atol=1e-8)

    def test_bad_scale(self):
        with pytest.raises(DegenerateTransformError):
            Transform2D(scale=0.0)

    def test_cumulative(self):
        steps = [Transform2D(1.0, 0.1, 1, 0), Transform2D(1.1, -0.05, 0, 2), Transform2D(0.9, 0.2, -1, 1)]
        cum = cumulative_transform(steps)
        expect = steps[2].matrix() @ steps[1].matrix() @ steps[0].matrix()
        assert np.allclose(cum[-1].matrix(), expect)
        assert cumulative_transform([Transform2D()]) == [Transform2D()]
        with pytest.raises(ValueError):
            cumulative_transform([])


class TestFitSrt:
    def test_pure_similarity_is_recovered(self):
        t = Transform2D(1.3, 0.4, 5, -2)
        assert np.allclose(fit_srt(t.matrix()).params(), t.params())

    def test_against_grid_search(self):
        m = Transform2D(1.2, 0.3).matrix()
        m[0, 1] += 0.012  # 1% shear
        s, a = srt_grid_search(m, np.linspace(1.15, 1.25, 201), np.linspace(0.25, 0.35, 201))
        got = fit_srt(m)
        assert got.scale == pytest.approx(s, abs=5e-4)
        assert got.angle == pytest.approx(a, abs=5e-4)

    def test_composition_of_similarities(self):
        a, b = Transform2D(1.1, 0.2, 1, 2), Transform2D(0.8, -0.7, -3, 4)
        got = fit_srt(a.matrix() @ b.matrix())
        assert np.allclose(got.matrix(), fit_srt(a.matrix()).compose(fit_srt(b.matrix())).matrix())

    def test_degenerate(self):
        with pytest.raises(DegenerateTransformError):
            fit_srt(np.array([[1.0, 0, 0], [0, -1.0, 0]]))  # reflection has no s R part
        with pytest.raises(ValueError):
            fit_srt(np.eye(4))

    def test_fit_similarity_matches_least_squares_oracle(self):
        rng = np.random.default_rng(1)
        dst = Transform2D(1.05, 0.3, 4, -1).apply(PTS) + rng.normal(0, 0.3, PTS.shape)
        (p, q, tx, ty), _ = similarity_ls(PTS, dst)
        got = fit_similarity(PTS, dst)
        assert np.allclose(got.linear, [[p, -q], [q, p]])
        assert np.allclose(got.translation, [tx, ty])

    def test_fit_affine(self):
        m = np.array([[1.1, 0.2, 3.0], [-0.1, 0.9, -2.0]])
        dst = PTS @ m[:, :2].T + m[:, 2]
        assert np.allclose(fit_affine(PTS, dst), m)
        with pytest.raises(DegenerateTransformError):
            fit_affine(PTS[:2], dst[:2])
        with pytest.raises(DegenerateTransformError):
            line = np.column_stack([np.arange(5.0), np.arange(5.0)])
            fit_affine(line, line)


class TestIcp:
    def test_identical_sets(self):
        t, res = icp_align(PTS, PTS)
        assert np.allclose(t.matrix(), np.eye(3), atol=1e-9) and res < 1e-12

    def test_planted_motion_noiseless(self):
        truth = Transform2D(1.0, math.radians(10), 5, -3)
        t, res = icp_align(PTS, truth.apply(PTS), init=Transform2D())
        assert np.allclose(t.params(), truth.params(), atol=1e-6)

    def test_noisy_monte_carlo(self):
        truth = Transform2D(1.0, math.radians(5), 2, -1)
        rng = np.random.default_rng(5)
        sigma = 0.1
        model = rng.uniform(-40, 40, (30, 2))
        errs = []
        for _ in range(50):
            data = truth.inverse().apply(model) + rng.normal(0, sigma, model.shape)
            t, _ = icp_align_robust(data, model, sigma)
            errs.append(np.abs(t.translation - truth.translation))
        # translation SE of a 30-point fit is about sigma / sqrt(30); allow 4 SE
        assert np.mean(np.max(errs, axis=1) < 4 * sigma / math.sqrt(30) + 0.05) >= 0.9

    def test_outlier_is_ignored_by_robust_pass(self):
        truth = Transform2D(1.0, 0.05, 1.5, -0.5)
        model = truth.apply(PTS)
        data = np.vstack([PTS, [[200.0, 200.0]]])
        t, _ = icp_align_robust(data, model, 0.2, init=Transform2D())
        assert np.allclose(t.params(), truth.params(), atol=1e-6)

    def test_errors(self):
        with pytest.raises(IcpError):
            icp_align(PTS, np.empty((0, 2)))
        with pytest.raises(IcpError):
            icp_align(np.empty((0, 2)), PTS)
        with pytest.raises(IcpError):
            icp_align(PTS, PTS[:2])
        with pytest.raises(IcpError):
            icp_align(np.zeros((4, 3)), np.zeros((4, 2)))
        with pytest.raises(IcpError):
            icp_align_robust(PTS, PTS, sigma=0)


class TestTracking:
    def setup_method(self):
        self.cam = CameraModel(fps=600)
        self.blink = LedArraySpec((0.0, 0.5, 10.0), grid=(1, 1), drive=FrameToggleDrive(600.0), name="voi")
        anchors = [LedArraySpec((x, y, 25.0), grid=(1, 1), drive=ConstantDrive(), name=f"a{i}")
                   for i, (x, y) in enumerate([(-4, -1), (4, -1), (-3, 1.5), (3, 1.8)])]
        self.scene = Scene(arrays=(self.blink, *anchors))
        rng = np.random.default_rng(0)
        self.jitter = [(0.0, 0.0)] + [tuple(rng.uniform(-3, 3, 2)) for _ in range(11)]
        self.frames = render_sequence(self.scene, self.cam, 12, t0=0.5 / 600, jitter=self.jitter)

    def truth(self, i):
        return np.array([uv for uv, *_ in emitter_pixels(self.blink, self.cam.shifted(*self.jitter[i]))])

    def test_off_frames_tracked(self):
        res = track_points(self.frames, self.truth(0))
        for i in range(1, 12):
            err = np.abs(res.positions[i] - self.truth(i)).max()
            assert err <= 2.0
            if i % 2:  # OFF frame: the blinking lamps are not visible
                for u, v in np.round(self.truth(i)).astype(int):
                    assert not binarize(self.frames[i], 0.5)[v, u]
                assert not res.measured[i].any()

    def test_spot_centroids(self):
        spots = spot_centroids(self.frames[0])
        assert len(spots) == 10  # two units per array
        assert np.min(np.linalg.norm(spots - self.truth(0)[0], axis=1)) < 0.2

    def test_empty_sequence(self):
        res = track_points([], [[1.0, 2.0]])
        assert res.positions.shape == (0, 1, 2)
