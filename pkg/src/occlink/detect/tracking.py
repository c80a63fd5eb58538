"""Motion-history tracking of emitters through their OFF frames.

A blinking emitter vanishes from every other frame, so per-frame
thresholding cannot place it there.  The tracker registers the bright spots
of consecutive frames with ICP (always-on lights and the emitters that are
currently lit anchor the fit), carries the last known emitter positions
forward through the estimated frame-to-frame transform, and snaps back to a
measured spot whenever one reappears nearby.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .icp import IcpError, icp_align
from .regions import binarize, connected_components
from .transform import DegenerateTransformError, Transform2D, cumulative_transform


def spot_centroids(frame, threshold: float = 0.5, min_area: int = 1) -> np.ndarray:
    """Intensity-weighted (x, y) centroids of the thresholded spots."""
    img = np.asarray(getattr(frame, "pixels", frame), dtype=float)
    labels, n = connected_components(binarize(img, threshold))
    if n == 0:
        return np.empty((0, 2))
    idx = np.arange(1, n + 1)
    areas = ndimage.sum_labels(np.ones_like(img), labels, idx)
    com = np.asarray(ndimage.center_of_mass(img, labels, idx), dtype=float).reshape(-1, 2)
    keep = areas >= min_area
    return com[keep][:, ::-1].copy()


@dataclass(frozen=True)
class TrackResult:
    positions: np.ndarray  # (n_frames, n_targets, 2)
    measured: np.ndarray  # (n_frames, n_targets) bool, True where a spot was snapped
    steps: tuple  # Transform2D from frame i-1 to frame i (identity for frame 0)

    @property
    def cumulative(self) -> list[Transform2D]:
        return cumulative_transform(self.steps)


def _translation_seed(prev_spots, spots, radius: float) -> Transform2D:
    """Pairwise translation hypothesis that agrees with the most spots.

    Frame shifts can exceed the ICP gate; every (prev, current) pair proposes
    a shift and the one putting most previous spots within ``radius / 2`` of a
    current spot wins.  Ties keep the smallest shift.
    """
    tree = cKDTree(spots)
    cand = (spots[None, :, :] - prev_spots[:, None, :]).reshape(-1, 2)
    cand = cand[np.argsort(np.hypot(cand[:, 0], cand[:, 1]), kind="stable")]
    best, best_n = np.zeros(2), -1
    for t in cand:
        d, _ = tree.query(prev_spots + t)
        n = int(np.count_nonzero(d <= radius / 2))
        if n > best_n:
            best, best_n = t, n
    return Transform2D(1.0, 0.0, float(best[0]), float(best[1]))


def frame_motion(prev_spots, spots, reject_distance: float = 6.0) -> Transform2D | None:
    """Transform taking spots of the previous frame onto the current one.

    ``None`` when either frame has too few spots to register.
    """
    prev_spots = np.asarray(prev_spots, dtype=float).reshape(-1, 2)
    spots = np.asarray(spots, dtype=float).reshape(-1, 2)
    if len(prev_spots) < 2 or len(spots) < 3:
        return None
    try:
        h, _ = icp_align(prev_spots, spots, reject_distance=reject_distance,
                         init=_translation_seed(prev_spots, spots, reject_distance))
    except (IcpError, DegenerateTransformError):
        return None
    return h


def track_points(frames, initial, threshold: float = 0.5, snap_radius: float = 2.0,
                 reject_distance: float = 6.0) -> TrackResult:
    """Follow ``initial`` (x, y) targets, known in frame 0, through ``frames``."""
    frames = list(frames)
    pos = np.asarray(initial, dtype=float).reshape(-1, 2).copy()
    if not frames:
        return TrackResult(np.empty((0, len(pos), 2)), np.empty((0, len(pos)), dtype=bool), ())
    spots = [spot_centroids(f, threshold) for f in frames]
    positions = [pos.copy()]
    measured = [np.zeros(len(pos), dtype=bool)]
    steps = [Transform2D()]
    for i in range(1, len(frames)):
        h = frame_motion(spots[i - 1], spots[i], reject_distance) or Transform2D()
        pos = h.apply(pos)
        hit = np.zeros(len(pos), dtype=bool)
        if len(spots[i]):
            d = np.linalg.norm(spots[i][None, :, :] - pos[:, None, :], axis=2)
            j = np.argmin(d, axis=1)
            hit = d[np.arange(len(pos)), j] <= snap_radius
            pos[hit] = spots[i][j[hit]]
        steps.append(h)
        positions.append(pos.copy())
        measured.append(hit)
    return TrackResult(np.array(positions), np.array(measured), tuple(steps))
