"""Scale-rotation-translation transforms in the image plane.

A :class:`Transform2D` maps a point ``p`` to ``s * R(angle) @ p + t`` with
``R`` a proper rotation.  Composition ``a.compose(b)`` applies ``b`` first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DegenerateTransformError(ValueError):
    pass


@dataclass(frozen=True)
class Transform2D:
    scale: float = 1.0
    angle: float = 0.0
    tx: float = 0.0
    ty: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DegenerateTransformError("scale must be > 0")

    @classmethod
    def identity(cls) -> "Transform2D":
        return cls()

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.tx, self.ty])

    @property
    def linear(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return self.scale * np.array([[c, -s], [s, c]])

    def matrix(self) -> np.ndarray:
        m = np.eye(3)
        m[:2, :2] = self.linear
        m[:2, 2] = self.translation
        return m

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return p @ self.linear.T + self.translation

    def compose(self, other: "Transform2D") -> "Transform2D":
        """``self`` after ``other``."""
        t = self.linear @ other.translation + self.translation
        return Transform2D(self.scale * other.scale, _wrap(self.angle + other.angle), float(t[0]), float(t[1]))

    def inverse(self) -> "Transform2D":
        inv_lin = np.linalg.inv(self.linear)
        t = -inv_lin @ self.translation
        return Transform2D(1.0 / self.scale, _wrap(-self.angle), float(t[0]), float(t[1]))

    @classmethod
    def from_matrix(cls, m) -> "Transform2D":
        """Exact similarity from a 2x3 or 3x3 matrix (no projection)."""
        m = np.asarray(m, dtype=float)
        a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        return cls(math.hypot(a, c), math.atan2(c, a), float(m[0, 2]), float(m[1, 2]))

    def params(self) -> np.ndarray:
        return np.array([self.scale, self.angle, self.tx, self.ty])


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def cumulative_transform(per_frame) -> list[Transform2D]:
    """Left fold: ``cum[i] = per_frame[i] o cum[i - 1]`` with ``cum[0] = per_frame[0]``."""
    per_frame = list(per_frame)
    if not per_frame:
        raise ValueError("need at least one transform")
    out = [per_frame[0]]
    for h in per_frame[1:]:
        out.append(h.compose(out[-1]))
    return out


def fit_srt(affine) -> Transform2D:
    """Least-squares projection of an affine map onto scale*rotation + translation.

    For a linear part ``[[a, b], [c, d]]`` the Frobenius-nearest ``s R(alpha)``
    has ``s cos(alpha) = (a + d) / 2`` and ``s sin(alpha) = (c - b) / 2``.
    """
    m = np.asarray(affine, dtype=float)
    if m.shape not in ((2, 3), (3, 3)):
        raise ValueError("affine must be 2x3 or 3x3")
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    p, q = (a + d) / 2.0, (c - b) / 2.0
    s = math.hypot(p, q)
    if s == 0.0:
        raise DegenerateTransformError("linear part has no scale-rotation component")
    return Transform2D(s, math.atan2(q, p), float(m[0, 2]), float(m[1, 2]))


def apply_affine(affine, points) -> np.ndarray:
    m = np.asarray(affine, dtype=float)
    return np.asarray(points, dtype=float) @ m[:2, :2].T + m[:2, 2]


def fit_similarity(src, dst, weights=None) -> Transform2D:
    """Weighted least-squares similarity mapping ``src`` onto ``dst`` (Umeyama)."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    w = np.ones(len(src)) if weights is None else np.asarray(weights, dtype=float)
    wsum = w.sum()
    if wsum <= 0 or len(src) < 2:
        raise DegenerateTransformError("need two or more weighted correspondences")
    w = w / wsum
    mu_s = w @ src
    mu_d = w @ dst
    xs = src - mu_s
    xd = dst - mu_d
    var_s = float(w @ np.sum(xs * xs, axis=1))
    if var_s == 0:
        raise DegenerateTransformError("source points coincide")
    # 2-D closed form: rotation from the cross-covariance
    sxx = w @ (xs[:, 0] * xd[:, 0] + xs[:, 1] * xd[:, 1])
    sxy = w @ (xs[:, 0] * xd[:, 1] - xs[:, 1] * xd[:, 0])
    angle = math.atan2(sxy, sxx)
    scale = math.hypot(sxx, sxy) / var_s
    t = mu_d - Transform2D(scale, angle).apply(mu_s)
    return Transform2D(scale, angle, float(t[0]), float(t[1]))


def fit_affine(src, dst, weights=None) -> np.ndarray:
    """Least-squares 2x3 affine mapping ``src`` onto ``dst``."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if len(src) < 3:
        raise DegenerateTransformError("affine fit needs three or more points")
    a = np.hstack([src, np.ones((len(src), 1))])
    if weights is not None:
        sw = np.sqrt(np.asarray(weights, dtype=float))[:, None]
        a, dst = a * sw, dst * sw
    sol, _, rank, _ = np.linalg.lstsq(a, dst, rcond=None)
    if rank < 3:
        raise DegenerateTransformError("collinear points")
    return sol.T
