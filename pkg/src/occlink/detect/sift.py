"""Difference-of-Gaussians keypoints, orientations and descriptors.

Single-octave scale space: ``L_i = G(sigma0 * k**i) * I`` and
``D_i = L_{i+1} - L_i`` carries scale ``sigma0 * k**i``.  Extrema are strict
against the 8 in-plane neighbours by default; ``neighbourhood=26`` adds the
adjacent DoG levels.  Descriptors are the usual 4x4 cells of 8 orientation
bins (128 values), unit-normalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import cdist


@dataclass(frozen=True, eq=False)
class Keypoint:
    x: float
    y: float
    scale: float
    orientation: float = 0.0
    descriptor: np.ndarray | None = None
    response: float = 0.0
    level: int = 0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("keypoint scale must be > 0")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True, eq=False)
class ScaleSpace:
    images: np.ndarray  # (levels, h, w)
    sigmas: np.ndarray


def scale_space(image, sigma0: float = 1.6, factor: float = 2 ** (1 / 3), levels: int = 5,
                mode: str = "nearest") -> ScaleSpace:
    if not sigma0 > 0:
        raise ValueError("sigma0 must be > 0")
    if not factor > 1:
        raise ValueError("factor must be > 1")
    if levels < 3:
        raise ValueError("need at least 3 levels")
    img = np.asarray(getattr(image, "pixels", image), dtype=float)
    sigmas = sigma0 * factor ** np.arange(levels)
    stack = np.stack([ndimage.gaussian_filter(img, s, mode=mode) for s in sigmas])
    return ScaleSpace(stack, sigmas)


def dog(space: ScaleSpace) -> ScaleSpace:
    """Adjacent-level differences; map ``i`` keeps the scale of level ``i``."""
    return ScaleSpace(np.diff(space.images, axis=0), space.sigmas[:-1])


def _ring() -> np.ndarray:
    fp = np.ones((3, 3), dtype=bool)
    fp[1, 1] = False
    return fp


def find_extrema(dogs: ScaleSpace, threshold: float = 0.01, neighbourhood: int = 8,
                 edge_ratio: float | None = 10.0, border: int = 1) -> list[Keypoint]:
    """Strict local extrema of the DoG maps with ``|D| > threshold``.

    In 8-neighbour mode several maps usually fire at the same blob; those
    duplicates (within one pixel) are merged, keeping the strongest response.
    """
    d = dogs.images
    if d.ndim == 2:
        d = d[None]
    if neighbourhood not in (8, 26):
        raise ValueError("neighbourhood must be 8 or 26")
    n_lev, h, w = d.shape
    cand = []
    if neighbourhood == 8:
        fp = _ring()
        for i in range(n_lev):
            nmax = ndimage.maximum_filter(d[i], footprint=fp, mode="nearest")
            nmin = ndimage.minimum_filter(d[i], footprint=fp, mode="nearest")
            hit = ((d[i] > nmax) | (d[i] < nmin)) & (np.abs(d[i]) > threshold)
            for y, x in zip(*np.nonzero(hit)):
                cand.append((i, y, x))
    else:
        fp = np.ones((3, 3, 3), dtype=bool)
        fp[1, 1, 1] = False
        nmax = ndimage.maximum_filter(d, footprint=fp, mode="nearest")
        nmin = ndimage.minimum_filter(d, footprint=fp, mode="nearest")
        hit = ((d > nmax) | (d < nmin)) & (np.abs(d) > threshold)
        hit[0] = hit[-1] = False
        cand = list(zip(*np.nonzero(hit)))

    kps = []
    for i, y, x in cand:
        if y < border or x < border or y >= h - border or x >= w - border:
            continue
        m = d[i]
        if 0 < y < h - 1 and 0 < x < w - 1:
            dxx = m[y, x + 1] - 2 * m[y, x] + m[y, x - 1]
            dyy = m[y + 1, x] - 2 * m[y, x] + m[y - 1, x]
            dxy = (m[y + 1, x + 1] - m[y + 1, x - 1] - m[y - 1, x + 1] + m[y - 1, x - 1]) / 4.0
            det = dxx * dyy - dxy * dxy
            if edge_ratio is not None:
                tr = dxx + dyy
                if det <= 0 or tr * tr * edge_ratio >= (edge_ratio + 1) ** 2 * det:
                    continue
            # quadratic sub-pixel offset, kept only when it stays in the pixel
            dx = (m[y, x + 1] - m[y, x - 1]) / 2.0
            dy = (m[y + 1, x] - m[y - 1, x]) / 2.0
            off = np.zeros(2)
            if det != 0:
                off = -np.linalg.solve(np.array([[dxx, dxy], [dxy, dyy]]), np.array([dx, dy]))
                if np.any(np.abs(off) > 0.5):
                    off = np.zeros(2)
        else:
            off = np.zeros(2)
        kps.append(Keypoint(float(x + off[0]), float(y + off[1]), float(dogs.sigmas[i]),
                            response=float(m[y, x]), level=int(i)))
    if neighbourhood == 8:
        kps = _merge_levels(kps)
    return kps


def _merge_levels(kps: list[Keypoint], radius: float = 1.0) -> list[Keypoint]:
    kept: list[Keypoint] = []
    for kp in sorted(kps, key=lambda k: -abs(k.response)):
        if all((kp.x - o.x) ** 2 + (kp.y - o.y) ** 2 > radius * radius for o in kept):
            kept.append(kp)
    kept.sort(key=lambda k: (k.y, k.x))
    return kept


def _gradients(img):
    gy, gx = np.gradient(np.asarray(img, dtype=float))
    return np.hypot(gx, gy), np.arctan2(gy, gx)


def orientation_histogram(kp: Keypoint, image, num_bins: int = 36) -> np.ndarray:
    img = np.asarray(getattr(image, "pixels", image), dtype=float)
    sigma_w = 1.5 * kp.scale
    radius = int(round(3 * sigma_w))
    h, w = img.shape
    x0, y0 = int(round(kp.x)), int(round(kp.y))
    r0, r1 = max(y0 - radius, 1), min(y0 + radius + 1, h - 1)
    c0, c1 = max(x0 - radius, 1), min(x0 + radius + 1, w - 1)
    mag, ang = _gradients(img[r0 - 1:r1 + 1, c0 - 1:c1 + 1])
    mag, ang = mag[1:-1, 1:-1], ang[1:-1, 1:-1]
    yy, xx = np.mgrid[r0:r1, c0:c1]
    wgt = np.exp(-((xx - kp.x) ** 2 + (yy - kp.y) ** 2) / (2 * sigma_w ** 2))
    inside = (xx - kp.x) ** 2 + (yy - kp.y) ** 2 <= radius * radius
    # bin b is centred on angle b * 2pi / num_bins
    bins = np.floor((ang % (2 * math.pi)) / (2 * math.pi) * num_bins + 0.5).astype(int) % num_bins
    hist = np.zeros(num_bins)
    np.add.at(hist, bins[inside], (mag * wgt)[inside])
    return hist


def assign_orientation(kp: Keypoint, image, num_bins: int = 36, peak_ratio: float = 0.8) -> list[Keypoint]:
    """One keypoint per histogram bin holding at least ``peak_ratio`` of the peak.

    The angle is the bin center refined by a parabola through the neighbour
    bins.  A flat neighbourhood yields the input keypoint unchanged.
    """
    hist = orientation_histogram(kp, image, num_bins)
    peak = hist.max()
    if peak <= 0:
        return [kp]
    out = []
    width = 2 * math.pi / num_bins
    for b in np.flatnonzero(hist >= peak_ratio * peak):
        left, right = hist[(b - 1) % num_bins], hist[(b + 1) % num_bins]
        denom = left - 2 * hist[b] + right
        off = 0.5 * (left - right) / denom if denom < 0 else 0.0
        off = float(np.clip(off, -0.5, 0.5))
        angle = (b + off) * width
        angle = (angle + math.pi) % (2 * math.pi) - math.pi
        out.append(replace(kp, orientation=float(angle)))
    return out


def compute_descriptor(kp: Keypoint, image, cells: int = 4, bins: int = 8, cell_size: float = 3.0) -> np.ndarray:
    img = np.asarray(getattr(image, "pixels", image), dtype=float)
    h, w = img.shape
    step = cell_size * kp.scale  # cell width in pixels
    half = step * cells / 2.0
    radius = int(math.ceil(half * math.sqrt(2))) + 1
    x0, y0 = int(round(kp.x)), int(round(kp.y))
    r0, r1 = max(y0 - radius, 1), min(y0 + radius + 1, h - 1)
    c0, c1 = max(x0 - radius, 1), min(x0 + radius + 1, w - 1)
    desc = np.zeros((cells, cells, bins))
    if r0 < r1 and c0 < c1:
        mag, ang = _gradients(img[r0 - 1:r1 + 1, c0 - 1:c1 + 1])
        mag, ang = mag[1:-1, 1:-1], ang[1:-1, 1:-1]
        yy, xx = np.mgrid[r0:r1, c0:c1]
        dx, dy = xx - kp.x, yy - kp.y
        c, s = math.cos(kp.orientation), math.sin(kp.orientation)
        # coordinates in the keypoint frame, in cell units
        u = (c * dx + s * dy) / step + cells / 2.0 - 0.5
        v = (-s * dx + c * dy) / step + cells / 2.0 - 0.5
        o = ((ang - kp.orientation) % (2 * math.pi)) / (2 * math.pi) * bins
        wgt = mag * np.exp(-(dx * dx + dy * dy) / (2 * half * half))
        sel = (u > -1) & (u < cells) & (v > -1) & (v < cells)
        u, v, o, wgt = u[sel], v[sel], o[sel], wgt[sel]
        u0, v0, o0 = np.floor(u).astype(int), np.floor(v).astype(int), np.floor(o).astype(int)
        fu, fv, fo = u - u0, v - v0, o - o0
        for du in (0, 1):
            for dv in (0, 1):
                for do in (0, 1):
                    cu, cv = u0 + du, v0 + dv
                    ok = (cu >= 0) & (cu < cells) & (cv >= 0) & (cv < cells)
                    tw = (wgt * (fu if du else 1 - fu) * (fv if dv else 1 - fv) * (fo if do else 1 - fo))[ok]
                    np.add.at(desc, (cv[ok], cu[ok], (o0[ok] + do) % bins), tw)
    vec = desc.ravel()
    norm = np.linalg.norm(vec)
    if norm == 0:
        return np.full(vec.size, 1.0 / math.sqrt(vec.size))
    vec = np.minimum(vec / norm, 0.2)
    return vec / np.linalg.norm(vec)


def detect_keypoints(image, sigma0: float = 1.6, factor: float = 2 ** (1 / 3), levels: int = 5,
                     threshold: float = 0.01, neighbourhood: int = 8, with_descriptors: bool = True,
                     edge_ratio: float | None = 10.0) -> list[Keypoint]:
    space = scale_space(image, sigma0, factor, levels)
    kps = find_extrema(dog(space), threshold, neighbourhood, edge_ratio=edge_ratio)
    out = []
    for kp in kps:
        smoothed = space.images[kp.level]
        for okp in assign_orientation(kp, smoothed):
            if with_descriptors:
                okp = replace(okp, descriptor=compute_descriptor(okp, smoothed))
            out.append(okp)
    return out


def match_descriptors(a, b, ratio: float = 0.8) -> list[tuple[int, int]]:
    """Nearest-neighbour matches of ``a`` into ``b`` passing the ratio test."""
    da = np.array([k.descriptor if isinstance(k, Keypoint) else k for k in a], dtype=float)
    db = np.array([k.descriptor if isinstance(k, Keypoint) else k for k in b], dtype=float)
    if len(da) == 0 or len(db) == 0:
        raise ValueError("both keypoint sets must be non-empty")
    dist = cdist(da, db)
    out = []
    for i, row in enumerate(dist):
        order = np.argsort(row, kind="stable")
        best = row[order[0]]
        second = row[order[1]] if len(order) > 1 else math.inf
        if best < ratio * second:
            out.append((i, int(order[0])))
    return out
