"""Iterative closest point registration of 2-D point sets."""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from .transform import Transform2D, fit_similarity


class IcpError(ValueError):
    pass


def icp_align(data, model, weights=None, max_iter: int = 50, tol: float = 1e-9,
              reject_distance: float | None = None, init: Transform2D | None = None):
    """Register ``data`` onto ``model``.

    Alternates closest-point association with a weighted least-squares
    similarity fit until the residual changes by less than ``tol``.  Pairs
    farther apart than ``reject_distance`` get zero weight, which makes the
    fit tolerant of points with no counterpart.  Without ``init`` the data
    centroid is first moved onto the model centroid.

    Returns ``(transform, residual)`` where the transform maps data onto model
    and the residual is the weighted sum of squared pair distances.
    """
    model = np.asarray(model, dtype=float)
    data = np.asarray(data, dtype=float)
    if model.size == 0:
        raise IcpError("the model point set cannot be empty")
    if model.ndim != 2 or data.ndim != 2 or model.shape[1] != data.shape[1]:
        raise IcpError("data and model points must share one dimension")
    if model.shape[1] != 2:
        raise IcpError("only planar point sets are supported")
    if len(model) <= model.shape[1]:
        raise IcpError("model needs more points than the point dimension")
    if len(data) == 0:
        raise IcpError("the data point set cannot be empty")
    base_w = np.ones(len(data)) if weights is None else np.asarray(weights, dtype=float)
    if base_w.shape != (len(data),) or np.any(base_w < 0):
        raise IcpError("weights must be one non-negative value per data point")

    tree = cKDTree(model)
    if init is None:
        shift = model.mean(axis=0) - data.mean(axis=0)
        current = Transform2D(1.0, 0.0, float(shift[0]), float(shift[1]))
    else:
        current = init
    prev = np.inf
    residual = np.inf
    for _ in range(max_iter):
        moved = current.apply(data)
        dist, idx = tree.query(moved)
        w = base_w.copy()
        if reject_distance is not None:
            w[dist > reject_distance] = 0.0
        if np.count_nonzero(w) < 2:
            break
        current = fit_similarity(data, model[idx], w)
        diff = current.apply(data) - model[idx]
        residual = float(np.sum(w * np.sum(diff * diff, axis=1)))
        if abs(prev - residual) < tol:
            break
        prev = residual
    return current, residual


def icp_align_robust(data, model, sigma: float, weights=None, coarse_distance: float | None = None,
                     max_iter: int = 50, tol: float = 1e-9, init: Transform2D | None = None):
    """Coarse-to-fine ICP for noisy point sets with outliers.

    A first pass gates pairs at ``coarse_distance`` (default ``10 sigma``) to
    converge from afar; the second pass restarts from that estimate and keeps
    only pairs closer than ``sqrt(5.99) sigma``, the 95% radius of isotropic
    Gaussian noise.
    """
    if not sigma > 0:
        raise IcpError("sigma must be > 0")
    coarse = 10.0 * sigma if coarse_distance is None else coarse_distance
    first, _ = icp_align(data, model, weights, max_iter, tol, reject_distance=coarse, init=init)
    return icp_align(data, model, weights, max_iter, tol, reject_distance=math.sqrt(5.99) * sigma, init=first)
