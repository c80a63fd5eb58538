"""Transmitter detection, keypoints, registration and pattern recognition."""

from .classify import PatternMatch, classify_pattern, masked_ncc
from .icp import IcpError, icp_align, icp_align_robust
from .regions import (DetectionConfig, RoI, RoiTag, ShapeFilterConfig, accumulate_differentials, binarize,
                      circumcircle_fill, connected_components, detect_rois, detect_static, differential_image,
                      dilate, shape_filter)
from .sift import (Keypoint, ScaleSpace, assign_orientation, compute_descriptor, detect_keypoints, dog,
                   find_extrema, match_descriptors, scale_space)
from .tracking import TrackResult, frame_motion, spot_centroids, track_points
from .transform import DegenerateTransformError, Transform2D, cumulative_transform, fit_affine, fit_similarity, fit_srt

__all__ = [name for name in dir() if not name.startswith("_")]
