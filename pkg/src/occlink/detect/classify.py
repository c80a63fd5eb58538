"""LED-pattern recognition by masked normalized cross-correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PatternMatch:
    label: object
    confidence: float
    scores: tuple = ()
    index: int = -1

    @property
    def erased(self) -> bool:
        return self.index < 0

    @property
    def tie(self) -> bool:
        return not self.erased and self.confidence == 0.0


def masked_ncc(a, b, valid) -> float:
    """Zero-mean NCC of ``a`` and ``b`` over pixels where ``valid`` is set."""
    x = np.asarray(a, dtype=float)[valid]
    y = np.asarray(b, dtype=float)[valid]
    x = x - x.mean()
    y = y - y.mean()
    den = np.sqrt(np.dot(x, x) * np.dot(y, y))
    return float(np.dot(x, y) / den) if den > 0 else 0.0


def classify_pattern(roi_pixels, templates, occlusion_mask=None) -> PatternMatch:
    """Best-matching template label over the unoccluded pixels.

    ``templates`` is a sequence of ``(label, grid)`` pairs or a mapping.
    ``occlusion_mask`` is True where the RoI is blocked.  Confidence is the
    margin between the two best scores; ties go to the lower template index.
    """
    roi = np.asarray(roi_pixels, dtype=float)
    items = list(templates.items()) if isinstance(templates, dict) else list(templates)
    if not items:
        raise ValueError("need at least one template")
    if occlusion_mask is None:
        valid = np.ones(roi.shape, dtype=bool)
    else:
        mask = np.asarray(occlusion_mask, dtype=bool)
        if mask.shape != roi.shape:
            raise ValueError("occlusion mask must match the RoI size")
        valid = ~mask
    if valid.sum() < 2:
        return PatternMatch(None, 0.0)
    scores = []
    for _, grid in items:
        grid = np.asarray(grid, dtype=float)
        if grid.shape != roi.shape:
            raise ValueError("template size must match the RoI")
        scores.append(masked_ncc(roi, grid, valid))
    scores = np.asarray(scores)
    best = int(np.argmax(scores))
    rest = np.delete(scores, best)
    margin = float(scores[best] - rest.max()) if rest.size else float(scores[best])
    return PatternMatch(items[best][0], margin, tuple(scores.tolist()), best)
