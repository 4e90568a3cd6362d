"""
Geometry Consistency

Depth inconsistency between D_a carried into view b (D^a_b) and D_b sampled
at the same projections (D'_b), normalised by their sum, the loss averaging
it over V, and the self-discovered mask derived from it.
"""

import logging
from typing import NamedTuple

import numpy as np

from geometry.models import DepthMap, Intrinsics, PoseSE3
from geometry.warping import compute_warp_field, sample_depth_ratio
from geometry.camera import check_dimensions
from utils.errors import DomainError, NoOverlapError

logger = logging.getLogger(__name__)


class DepthInconsistency(NamedTuple):
    depth_diff: np.ndarray  # H x W in [0, 1), zero outside V
    valid: np.ndarray


def normalized_difference(projected: np.ndarray, interpolated: np.ndarray) -> np.ndarray:
    """|x - y| / (x + y) for positive x, y."""
    return np.abs(projected - interpolated) / (projected + interpolated)


def depth_inconsistency(D_a: DepthMap, D_b: DepthMap, P_ab: PoseSE3, K: Intrinsics) -> DepthInconsistency:
    """
    Per-pixel depth inconsistency D_diff on V.

    Both depths are divided by D_a(p) before comparison, which leaves the
    ratio unchanged and keeps it exact under joint scaling of depths and
    translation.
    """
    check_dimensions(D_b.shape, K, "depth b")
    field = compute_warp_field(D_a, P_ab, K)
    d = np.where(D_a.validity, D_a.values, 1.0)
    ratio, sample_valid = sample_depth_ratio(D_b, field.coords, d)
    valid = field.in_front & sample_valid
    qz = np.where(valid, field.normalized_z, 1.0)
    ratio = np.where(valid, ratio, 1.0)
    depth_diff = np.where(valid, normalized_difference(qz, ratio), 0.0)
    return DepthInconsistency(depth_diff, valid)


def geometry_consistency_loss(depth_diff: np.ndarray, valid: np.ndarray) -> float:
    """Mean of D_diff over V."""
    if not valid.any():
        raise NoOverlapError("geometry consistency loss has no valid pixels")
    return float(depth_diff[valid].mean())


def self_discovered_mask(depth_diff: np.ndarray) -> np.ndarray:
    """M_s = 1 - D_diff."""
    if np.any(depth_diff < 0.0) or np.any(depth_diff >= 1.0):
        raise DomainError("depth inconsistency must lie in [0, 1)")
    return 1.0 - depth_diff
