"""Adaptive sampling policy and the fast-path temporal decoder.

The slow path detects every vehicle and classifies the situation; the fast
path follows one vehicle of interest at a tenth of the base interval,
re-registering consecutive frames with a RANSAC-style transform estimator
so the vehicle's lights stay at fixed coordinates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from . import modem
from .detect.regions import RoI
from .detect.tracking import spot_centroids
from .detect.transform import DegenerateTransformError, Transform2D, apply_affine, fit_affine, fit_similarity
from .modem import DEFAULT_THRESHOLDS, NO_SYNC, DemodResult, Scheme

CHI2_95_2DOF = 5.99
DEFAULT_TEMPORAL_THRESHOLD = 20.0


class Case(enum.Enum):
    NORMAL = "normal"
    SPATIAL = "spatial"
    TEMPORAL = "temporal"


@dataclass(frozen=True)
class SituationCase:
    case: Case
    voi: RoI | None = None
    voi_index: int | None = None
    nearest_distance: float = math.inf

    def __post_init__(self):
        if self.case is Case.TEMPORAL and self.voi_index is None:
            raise ValueError("temporal case needs a vehicle of interest")


def classify(distances, vehicle_count: int | None = None, temporal_threshold: float = DEFAULT_TEMPORAL_THRESHOLD,
             rois=None) -> SituationCase:
    """Pick the operating case from per-RoI distances (metres).

    Temporal when the nearest vehicle is closer than the threshold, Spatial
    when more than one vehicle is in view, Normal otherwise.  Equal nearest
    distances go to the leftmost RoI centroid (then the lower index).
    """
    if not temporal_threshold > 0:
        raise ValueError("temporal_threshold must be > 0")
    d = np.asarray(distances, dtype=float).reshape(-1)
    if rois is not None and len(rois) != len(d):
        raise ValueError("one RoI per distance")
    count = len(d) if vehicle_count is None else int(vehicle_count)
    if len(d) == 0:
        return SituationCase(Case.SPATIAL if count > 1 else Case.NORMAL)
    nearest = float(d.min())
    ties = np.flatnonzero(d == nearest)
    if rois is not None and len(ties) > 1:
        idx = int(min(ties, key=lambda i: (rois[i].centroid[0], i)))
    else:
        idx = int(ties[0])
    voi = rois[idx] if rois is not None else None
    if nearest < temporal_threshold:
        return SituationCase(Case.TEMPORAL, voi, idx, nearest)
    return SituationCase(Case.SPATIAL if count > 1 else Case.NORMAL, voi, idx, nearest)


INTERVAL_FACTORS = {Case.NORMAL: 1.0, Case.SPATIAL: 1.5, Case.TEMPORAL: 0.1}


def sampling_interval(case, base_interval: float) -> float:
    if not base_interval > 0:
        raise ValueError("base interval must be > 0")
    c = case.case if isinstance(case, SituationCase) else Case(case)
    return INTERVAL_FACTORS[c] * base_interval


@dataclass(frozen=True)
class SamplingPolicy:
    base_interval: float
    current_interval: float | None = None

    def __post_init__(self):
        if not self.base_interval > 0:
            raise ValueError("base interval must be > 0")
        if self.current_interval is None:
            object.__setattr__(self, "current_interval", self.base_interval)
        allowed = [f * self.base_interval for f in INTERVAL_FACTORS.values()]
        if not any(math.isclose(self.current_interval, a, rel_tol=1e-12) for a in allowed):
            raise ValueError("interval must be T, 1.5 T or T / 10")

    def update(self, case) -> "SamplingPolicy":
        return replace(self, current_interval=sampling_interval(case, self.base_interval))


def policy_log_row(time: float, situation: SituationCase, interval: float, voi_id=None) -> dict:
    """One row of the policy CSV log."""
    return {"time": time, "case": situation.case.value,
            "voi_id": "" if voi_id is None and situation.voi_index is None else (
                voi_id if voi_id is not None else situation.voi_index),
            "distance": situation.nearest_distance, "interval": interval}


# ---------------------------------------------------------------------------
# robust transform estimation


@dataclass(frozen=True, eq=False)
class EstimateResult:
    transform: object  # 2x3 affine array or Transform2D; None on failure
    inliers: np.ndarray
    threshold: float
    rounds: int
    refits: int = 0

    @property
    def success(self) -> bool:
        return self.transform is not None

    def apply(self, points) -> np.ndarray:
        if isinstance(self.transform, Transform2D):
            return self.transform.apply(points)
        return apply_affine(self.transform, points)


def _fit(model: str, src, dst):
    if model == "affine":
        return fit_affine(src, dst)
    return fit_similarity(src, dst)


def _residuals(model: str, h, src, dst) -> np.ndarray:
    moved = h.apply(src) if model == "similarity" else apply_affine(h, src)
    return np.linalg.norm(moved - dst, axis=1)


def estimate_homography(src, dst, sigma: float = 1.0, max_rounds: int = 500, rng=None, model: str = "affine",
                        max_refits: int = 20) -> EstimateResult:
    """Random-sample consensus fit of a planar transform.

    Each round fits four random correspondences and counts inliers with
    residual below ``sqrt(5.99) sigma``.  The best consensus set is refit with
    least squares and the refit repeated until the inlier set stops changing
    (at most ``max_refits`` times).
    """
    src = np.asarray(src, dtype=float).reshape(-1, 2)
    dst = np.asarray(dst, dtype=float).reshape(-1, 2)
    if len(src) != len(dst):
        raise ValueError("src and dst must pair up")
    if len(src) < 4:
        raise ValueError("need at least four correspondences")
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    if model not in ("affine", "similarity"):
        raise ValueError("model must be 'affine' or 'similarity'")
    rng = np.random.default_rng(0) if rng is None else rng
    t = math.sqrt(CHI2_95_2DOF) * sigma
    n = len(src)
    best, best_key = None, None
    for _ in range(max_rounds):
        pick = rng.choice(n, 4, replace=False)
        try:
            h = _fit(model, src[pick], dst[pick])
        except DegenerateTransformError:
            continue
        d = _residuals(model, h, src, dst)
        inl = d < t
        key = (int(inl.sum()), -float(np.sum(d[inl] ** 2)))
        if best_key is None or key > best_key:
            best, best_key = inl, key
    if best is None or best.sum() < 4:
        return EstimateResult(None, np.zeros(n, dtype=bool), t, max_rounds)
    inliers = best
    h = None
    refits = 0
    for refits in range(1, max_refits + 1):
        try:
            cand = _fit(model, src[inliers], dst[inliers])
        except DegenerateTransformError:
            break
        new = _residuals(model, cand, src, dst) < t
        if new.sum() < 4:
            break
        h = cand
        if np.array_equal(new, inliers):
            break
        inliers = new
    if h is None:
        return EstimateResult(None, np.zeros(n, dtype=bool), t, max_rounds, refits)
    inliers = _residuals(model, h, src, dst) < t
    return EstimateResult(h, inliers, t, max_rounds, refits)


def match_spots(prev_spots, spots, radius: float):
    """Mutual nearest-neighbour pairs closer than ``radius``; returns (src, dst)."""
    a = np.asarray(prev_spots, dtype=float).reshape(-1, 2)
    b = np.asarray(spots, dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        return np.empty((0, 2)), np.empty((0, 2))
    dab, iab = cKDTree(b).query(a)
    _, iba = cKDTree(a).query(b)
    keep = (dab < radius) & (iba[iab] == np.arange(len(a)))
    return a[keep], b[iab[keep]]


# ---------------------------------------------------------------------------
# fast-path decoding


@dataclass(frozen=True)
class TemporalConfig:
    scheme: Scheme = Scheme.NYQUIST_OOK
    camera_fps: float = 600.0
    thresholds: tuple = DEFAULT_THRESHOLDS
    dynamic_range: tuple | None = None
    spot_threshold: float = 0.5
    match_radius: float = 10.0
    sigma: float = 0.5
    rounds: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in (Scheme.NYQUIST_OOK, Scheme.UFSOOK):
            raise ValueError("temporal decoding supports frame-rate schemes (Nyquist OOK, UFSOOK)")


def _roi_value(img: np.ndarray, roi: RoI, shift) -> float:
    x0, y0, x1, y1 = roi.bbox
    dx, dy = int(round(shift[0])), int(round(shift[1]))
    h, w = img.shape
    r0, r1 = max(y0 + dy, 0), min(y1 + dy, h)
    c0, c1 = max(x0 + dx, 0), min(x1 + dx, w)
    if r0 >= r1 or c0 >= c1:
        return 0.0
    return float(img[r0:r1, c0:c1].max())


def stabilize(frames, config: TemporalConfig = TemporalConfig()) -> tuple[list[Transform2D], int]:
    """Frame-0-to-frame-i transforms; stops at the first frame that cannot be registered.

    Returns ``(transforms, n_tracked)``.
    """
    rng = np.random.default_rng(config.seed)
    frames = list(frames)
    if not frames:
        return [], 0
    spots = spot_centroids(frames[0], config.spot_threshold)
    cum = [Transform2D()]
    for f in frames[1:]:
        cur = spot_centroids(f, config.spot_threshold)
        src, dst = match_spots(spots, cur, config.match_radius)
        if len(src) < 4:
            break
        est = estimate_homography(src, dst, config.sigma, config.rounds, rng, model="similarity")
        if not est.success:
            break
        cum.append(est.transform.compose(cum[-1]))
        spots = cur
    return cum, len(cum)


def temporal_decode(frames, voi: RoI, config: TemporalConfig = TemporalConfig()) -> DemodResult:
    """Stabilize ``frames`` around ``voi`` (given in frame-0 coordinates) and demodulate."""
    frames = list(frames)
    if not frames:
        return NO_SYNC
    cum, tracked = stabilize(frames, config)
    c0 = np.asarray(voi.centroid)
    values = []
    for f, h in zip(frames[:tracked], cum):
        img = np.asarray(getattr(f, "pixels", f), dtype=float)
        values.append(_roi_value(img, voi, h.apply(c0) - c0))
    if config.scheme is Scheme.NYQUIST_OOK:
        res = modem.decode_nyquist_ook(values, config.thresholds, config.dynamic_range)
    else:
        res = modem.decode_ufsook(values, config.camera_fps, config.thresholds, config.dynamic_range)
    if tracked < len(frames):
        return replace(res, frames_consumed=tracked) if res.sync_found else replace(NO_SYNC, frames_consumed=tracked)
    return res
