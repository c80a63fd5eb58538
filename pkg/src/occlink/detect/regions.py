"""Light-source region identification.

Pipeline: differential image of consecutive frames, threshold, morphological
dilation, connected components, then a size/shape filter that keeps
spot-like regions.  Shape is scored as region area over the area of its
smallest enclosing circle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError


class RoiTag(enum.Enum):
    NEAR = "near"
    FAR = "far"
    TRAFFIC_LIGHT = "traffic_light"
    REJECTED = "rejected"


@dataclass(frozen=True)
class RoI:
    bbox: tuple[int, int, int, int]  # x0, y0, x1, y1 (exclusive upper bounds)
    centroid: tuple[float, float]  # x, y
    area: int
    circumcircle_fill: float
    tag: RoiTag = RoiTag.FAR
    label: int = 0

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        cx, cy = self.centroid
        if not (x0 - 0.5 <= cx <= x1 - 0.5 and y0 - 0.5 <= cy <= y1 - 0.5):
            raise ValueError("centroid outside bbox")
        if not 0 < self.circumcircle_fill <= 1:
            raise ValueError("circumcircle_fill must lie in (0, 1]")


def _pixels(frame) -> np.ndarray:
    return np.asarray(getattr(frame, "pixels", frame), dtype=float)


def differential_image(f1, f2) -> np.ndarray:
    a, b = _pixels(f1), _pixels(f2)
    if a.shape != b.shape:
        raise ValueError(f"frame size mismatch: {a.shape} vs {b.shape}")
    return np.abs(a - b)


def accumulate_differentials(frames) -> np.ndarray:
    """Per-pixel maximum of the differentials of consecutive frames."""
    frames = list(frames)
    if len(frames) < 2:
        raise ValueError("need at least two frames")
    out = differential_image(frames[0], frames[1])
    for a, b in zip(frames[1:], frames[2:]):
        np.maximum(out, differential_image(a, b), out=out)
    return out


def binarize(frame, threshold: float) -> np.ndarray:
    if not 0 <= threshold <= 1:
        raise ValueError("threshold must lie in [0, 1]")
    return _pixels(frame) >= threshold


def disc_footprint(radius: int) -> np.ndarray:
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return xx * xx + yy * yy <= radius * radius


def dilate(mask, radius: float) -> np.ndarray:
    if radius < 0:
        raise ValueError("radius must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=disc_footprint(radius))


def connected_components(mask) -> tuple[np.ndarray, int]:
    """8-connected labeling."""
    return ndimage.label(np.asarray(mask, dtype=bool), structure=np.ones((3, 3), dtype=bool))


# ---------------------------------------------------------------------------
# smallest enclosing circle


def _circle_two(a, b):
    c = (a + b) / 2.0
    return c, float(np.hypot(*(a - c)))


def _circle_three(a, b, c):
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-12:
        # collinear: widest pair
        pairs = [(a, b), (a, c), (b, c)]
        return max((_circle_two(p, q) for p, q in pairs), key=lambda x: x[1])
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d
    center = np.array([ux, uy])
    return center, float(np.hypot(*(a - center)))


def _inside(circle, p, eps=1e-9):
    return np.hypot(*(p - circle[0])) <= circle[1] + eps


def enclosing_circle(points) -> tuple[np.ndarray, float]:
    """Smallest circle containing ``points`` (incremental construction)."""
    pts = np.asarray(points, dtype=float)
    if len(pts) > 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass  # degenerate (collinear) input: use all points
    pts = pts[np.random.default_rng(0).permutation(len(pts))]
    circle = (pts[0], 0.0)
    for i in range(1, len(pts)):
        p = pts[i]
        if _inside(circle, p):
            continue
        circle = (p, 0.0)
        for j in range(i):
            q = pts[j]
            if _inside(circle, q):
                continue
            circle = _circle_two(p, q)
            for k in range(j):
                r = pts[k]
                if not _inside(circle, r):
                    circle = _circle_three(p, q, r)
    return circle


def circumcircle_fill(ys, xs) -> float:
    """Region pixel count over the area of its enclosing circle.

    Each pixel is a unit square, so the circle through pixel centers is
    widened by half a pixel; a 1 x L line scores ``L / (pi (L/2)^2)``.
    """
    pts = np.column_stack([xs, ys]).astype(float)
    _, r = enclosing_circle(pts)
    return min(1.0, len(pts) / (math.pi * (r + 0.5) ** 2))


# ---------------------------------------------------------------------------
# shape filter


@dataclass(frozen=True)
class ShapeFilterConfig:
    max_area_fraction: float = 0.02
    min_area: int = 4
    min_fill: float = 0.6
    near_area: int = 200
    horizon_row: float | None = None  # default: 40% of image height


def shape_filter(labels, n_labels: int | None = None, weights=None, config: ShapeFilterConfig = ShapeFilterConfig(),
                 keep_rejected: bool = False) -> list[RoI]:
    """Accept spot-like regions and tag them Near / Far / TrafficLight.

    ``weights`` (an intensity image) sets the centroid; otherwise the region
    mean position is used.
    """
    labels = np.asarray(labels)
    h, w = labels.shape
    if n_labels is None:
        n_labels = int(labels.max())
    horizon = 0.4 * h if config.horizon_row is None else config.horizon_row
    max_area = config.max_area_fraction * h * w
    out = []
    slices = ndimage.find_objects(labels, max_label=n_labels)
    for lab, sl in enumerate(slices, start=1):
        if sl is None:
            continue
        sub = labels[sl] == lab
        ys, xs = np.nonzero(sub)
        ys = ys + sl[0].start
        xs = xs + sl[1].start
        area = len(xs)
        fill = circumcircle_fill(ys, xs)
        if weights is not None:
            wv = np.asarray(weights, dtype=float)[ys, xs]
            wsum = wv.sum()
            cx, cy = (float(wv @ xs / wsum), float(wv @ ys / wsum)) if wsum > 0 else (xs.mean(), ys.mean())
        else:
            cx, cy = float(xs.mean()), float(ys.mean())
        bbox = (int(sl[1].start), int(sl[0].start), int(sl[1].stop), int(sl[0].stop))
        rejected = area > max_area or area < config.min_area or fill < config.min_fill
        if rejected:
            tag = RoiTag.REJECTED
        elif cy < horizon:
            tag = RoiTag.TRAFFIC_LIGHT
        elif area >= config.near_area:
            tag = RoiTag.NEAR
        else:
            tag = RoiTag.FAR
        if rejected and not keep_rejected:
            continue
        out.append(RoI(bbox, (float(cx), float(cy)), area, fill, tag, lab))
    return out


@dataclass(frozen=True)
class DetectionConfig:
    threshold: float = 0.3
    dilate_radius: float = 2.0
    shape: ShapeFilterConfig = ShapeFilterConfig()


def detect_rois(frames, config: DetectionConfig = DetectionConfig()) -> list[RoI]:
    """Modulated-source RoIs from a sequence of two or more frames."""
    frames = list(frames)
    diff = accumulate_differentials(frames)
    mask = dilate(binarize(diff, config.threshold), config.dilate_radius)
    labels, n = connected_components(mask)
    brightness = np.max([_pixels(f) for f in frames], axis=0)
    return shape_filter(labels, n, weights=brightness * mask, config=config.shape)


def detect_static(frame, threshold: float = 0.5, dilate_radius: float = 0.0,
                  config: ShapeFilterConfig = ShapeFilterConfig()) -> list[RoI]:
    """Single-frame thresholding (no temporal differencing)."""
    mask = dilate(binarize(frame, threshold), dilate_radius)
    labels, n = connected_components(mask)
    return shape_filter(labels, n, weights=_pixels(frame) * mask, config=config)


def roi_mask(roi: RoI, shape) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    x0, y0, x1, y1 = roi.bbox
    m[y0:y1, x0:x1] = True
    return m
