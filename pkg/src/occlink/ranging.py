"""Stereo geometry: extrinsics, SAD block matching, depth and distance.

Cameras follow ``M_c = R M_w + T``.  Rectified parallel-axis pairs are
assumed throughout, so disparity is ``d = x_l - x_r = f b / z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class RangingError(ValueError):
    pass


def _check_rotation(r, name="rotation", tol=1e-9) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise RangingError(f"{name} must be 3x3")
    if not np.allclose(r @ r.T, np.eye(3), atol=tol, rtol=0) or abs(np.linalg.det(r) - 1.0) > tol:
        raise RangingError(f"{name} is not a proper orthonormal matrix")
    return r


@dataclass(frozen=True, eq=False)
class StereoExtrinsics:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = _check_rotation(self.rotation).copy()
        t = np.asarray(self.translation, dtype=float).reshape(3).copy()
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "StereoExtrinsics":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        """World (or source-camera) points into this frame; accepts (..., 3)."""
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation


def compose_extrinsics(r1, t1, r2, t2) -> StereoExtrinsics:
    """Pose of camera 2 coordinates in camera 1: ``R = R1 R2^T``, ``T = T1 - R T2``."""
    r1 = _check_rotation(r1, "R1")
    r2 = _check_rotation(r2, "R2")
    r = r1 @ r2.T
    t = -r @ np.asarray(t2, dtype=float).reshape(3) + np.asarray(t1, dtype=float).reshape(3)
    return StereoExtrinsics(r, t)


# ---------------------------------------------------------------------------
# block matching


@dataclass(frozen=True, eq=False)
class DisparityMap:
    values: np.ndarray
    valid: np.ndarray
    window: int
    max_disparity: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        ok = np.asarray(self.valid, dtype=bool)
        if v.shape != ok.shape:
            raise RangingError("values and valid must share a shape")
        if np.any(ok & ((v < 0) | (v > self.max_disparity))):
            raise RangingError("valid disparities must lie in [0, max_disparity]")

    def region(self, mask) -> np.ndarray:
        """Valid disparities inside ``mask``."""
        m = np.asarray(mask, dtype=bool) & self.valid
        return self.values[m]


def _box_sum(img: np.ndarray, half: int) -> np.ndarray:
    """Sum over a (2 half + 1)^2 window; zero where the window leaves the image."""
    h, w = img.shape
    k = 2 * half + 1
    out = np.zeros_like(img)
    if h < k or w < k:
        return out
    c = np.zeros((h + 1, w + 1))
    c[1:, 1:] = np.cumsum(np.cumsum(img, axis=0), axis=1)
    s = c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k]
    out[half:h - half, half:w - half] = s
    return out


def sad_costs(left, right, window: int, max_disp: int) -> np.ndarray:
    """SAD cost volume ``(max_disp + 1, h, w)``; ``inf`` where a window leaves the image."""
    L = np.asarray(getattr(left, "pixels", left), dtype=float)
    R = np.asarray(getattr(right, "pixels", right), dtype=float)
    if L.shape != R.shape:
        raise RangingError("stereo frames must share dimensions")
    if window < 1 or window % 2 == 0:
        raise RangingError("window must be a positive odd size")
    if max_disp < 0:
        raise RangingError("max_disp must be >= 0")
    h, w = L.shape
    if window > h or window > w:
        raise RangingError("window larger than image")
    half = window // 2
    costs = np.full((max_disp + 1, h, w), np.inf)
    inner = np.zeros((h, w), dtype=bool)
    inner[half:h - half, half:w - half] = True
    cols = np.arange(w)
    for d in range(max_disp + 1):
        diff = np.zeros((h, w))
        if d < w:
            diff[:, d:] = np.abs(L[:, d:] - R[:, :w - d])
        ok = inner & (cols - d - half >= 0)[None, :]
        costs[d][ok] = _box_sum(diff, half)[ok]
    return costs


def sad_disparity(left, right, window: int = 9, max_disp: int = 32, margin: float = 0.05,
                  subpixel: bool = False) -> DisparityMap:
    """Winner-take-all SAD disparity, left image as reference.

    A pixel is valid when every candidate window stays inside both images and
    the best cost beats every non-adjacent candidate by ``margin`` times the
    window energy (sum of left intensities).  Ties go to the smaller
    disparity.  ``subpixel`` refines valid interior minima with an
    equiangular (V-shaped) fit, which suits the L1 cost.
    """
    costs = sad_costs(left, right, window, max_disp)
    L = np.asarray(getattr(left, "pixels", left), dtype=float)
    half = window // 2
    best = np.argmin(costs, axis=0)
    best_cost = np.take_along_axis(costs, best[None], axis=0)[0]
    valid = np.all(np.isfinite(costs), axis=0)
    energy = _box_sum(L, half)
    if max_disp >= 2:
        d_idx = np.arange(max_disp + 1)[:, None, None]
        far = np.abs(d_idx - best[None]) >= 2
        runner = np.where(far, costs, np.inf).min(axis=0)
        with np.errstate(invalid="ignore"):
            valid &= runner - best_cost > margin * energy
    values = best.astype(float)
    if subpixel:
        interior = valid & (best > 0) & (best < max_disp)
        ys, xs = np.nonzero(interior)
        b = best[ys, xs]
        cm = costs[b - 1, ys, xs]
        cp = costs[b + 1, ys, xs]
        c0 = best_cost[ys, xs]
        slope = np.maximum(cm, cp) - c0
        with np.errstate(invalid="ignore", divide="ignore"):
            off = np.where(slope > 0, 0.5 * (cm - cp) / slope, 0.0)
        values[ys, xs] = b + np.clip(off, -0.5, 0.5)
    values[~valid] = 0.0
    return DisparityMap(values, valid, window, max_disp)


# ---------------------------------------------------------------------------
# depth and distance


def depth(d, f: float, b: float):
    """``z = f b / d``; raises for non-positive disparity."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise RangingError("disparity must be > 0 for a finite depth")
    z = f * b / d
    return float(z) if z.ndim == 0 else z


def triangulate(x_l, x_r, y_l, f: float, b: float) -> np.ndarray:
    """3-D point from rectified image coordinates measured from the principal point."""
    z = depth(np.asarray(x_l, dtype=float) - np.asarray(x_r, dtype=float), f, b)
    return np.stack(np.broadcast_arrays(np.asarray(x_l) * z / f, np.asarray(y_l) * z / f, z), axis=-1)


def inter_vehicle_distance(f: float, a: float, d: float, n: float) -> float:
    """Distance from the pixel separation ``n`` of two lights ``d`` metres apart.

    ``f`` is the focal length and ``a`` the pixel pitch, both in metres.
    """
    if not n > 0:
        raise RangingError("pixel separation must be > 0")
    return (f / a) * (d / n)


# ---------------------------------------------------------------------------
# re-projection


def intrinsic_matrix(fx: float, fy: float | None = None, cx: float = 0.0, cy: float = 0.0) -> np.ndarray:
    fy = fx if fy is None else fy
    return np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])


def project_points(extrinsics: StereoExtrinsics, intrinsics, world_points) -> np.ndarray:
    k = np.asarray(intrinsics, dtype=float)
    cam = extrinsics.apply(world_points)
    if np.any(cam[..., 2] <= 0):
        raise RangingError("point at or behind the camera")
    uvw = cam @ k.T
    return uvw[..., :2] / uvw[..., 2:3]


def reprojection_error(extrinsics, intrinsics, world_points, observed_pixels) -> np.ndarray:
    """Mean pixel distance between observations and projected world points, per image.

    ``extrinsics`` is one pose or a sequence of poses; ``observed_pixels`` is
    ``(n, 2)`` for one image or ``(n_images, n, 2)``.
    """
    poses = [extrinsics] if isinstance(extrinsics, StereoExtrinsics) else list(extrinsics)
    world = np.asarray(world_points, dtype=float).reshape(-1, 3)
    obs = np.asarray(observed_pixels, dtype=float)
    if obs.ndim == 2:
        obs = obs[None]
    if len(world) == 0 or obs.size == 0:
        raise RangingError("need at least one point pair")
    if obs.shape != (len(poses), len(world), 2):
        raise RangingError("observed pixels must be (n_images, n_points, 2)")
    out = np.empty(len(poses))
    for i, pose in enumerate(poses):
        diff = obs[i] - project_points(pose, intrinsics, world)
        out[i] = float(np.mean(np.hypot(diff[:, 0], diff[:, 1])))
    return out


def rayleigh_sigma(mean_error: float) -> float:
    """Per-axis Gaussian sigma implied by a mean 2-D error (Rayleigh mean ``sigma sqrt(pi/2)``)."""
    return mean_error / math.sqrt(math.pi / 2.0)


def pair_lights(rois, row_tolerance: float = 3.0) -> list[tuple]:
    """Pair left/right lamp RoIs of the same vehicle.

    Candidates must share an image row within ``row_tolerance`` pixels;
    the closest horizontal neighbours are paired first.
    """
    rois = list(rois)
    cand = []
    for i in range(len(rois)):
        for j in range(len(rois)):
            a, b = rois[i], rois[j]
            if a.centroid[0] < b.centroid[0] and abs(a.centroid[1] - b.centroid[1]) <= row_tolerance:
                cand.append((b.centroid[0] - a.centroid[0], i, j))
    used, pairs = set(), []
    for _, i, j in sorted(cand):
        if i not in used and j not in used:
            used.update((i, j))
            pairs.append((rois[i], rois[j]))
    return sorted(pairs, key=lambda p: p[0].centroid[0])
