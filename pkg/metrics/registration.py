"""
Point-Cloud Consistency

Fitness and inlier RMSE between two point clouds, and the depth-consistency
protocol that builds the clouds from two depth maps of adjacent frames.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from geometry.camera import backproject, transform
from geometry.models import DepthMap, Intrinsics, PointCloud, PoseSE3
from geometry.sampling import resize_depth
from metrics.config_loader import load_config
from metrics.models import ConsistencyReport
from utils.errors import ConfigurationError, EvaluationError

logger = logging.getLogger(__name__)

_config = load_config()
INLIER_RATIO = float(_config["consistency"]["inlier_ratio"])
# (width, height) the CLI evaluates at unless told otherwise
EVAL_SIZE = (int(_config["consistency"]["resize_width"]), int(_config["consistency"]["resize_height"]))


def consistency_metrics(source: PointCloud, target: PointCloud, threshold: float) -> ConsistencyReport:
    """
    Match every target point to its nearest source point.

    A match is an inlier when its distance is <= threshold. Fitness is the
    inlier share of the target; RMSE is taken over inliers only (0 if none).

    Raises:
        ConfigurationError: If threshold <= 0
        EvaluationError: If either cloud is empty
    """
    if not threshold > 0.0:
        raise ConfigurationError(f"inlier threshold must be positive, got {threshold}")
    if len(source) == 0 or len(target) == 0:
        raise EvaluationError(f"point clouds must be non-empty (source {len(source)}, target {len(target)})")

    distances, _ = cKDTree(source.points).query(target.points, k=1)
    inliers = distances <= threshold
    n_corr = int(inliers.sum())
    rmse = float(np.sqrt(np.mean(distances[inliers] ** 2))) if n_corr else 0.0
    return ConsistencyReport(fitness=n_corr / len(target), rmse=rmse, n_corr=n_corr,
                             n_target=len(target), threshold=threshold)


def default_threshold(depth: DepthMap, ratio: float = INLIER_RATIO) -> float:
    """ratio × median valid depth."""
    return ratio * depth.median()


def _resized(depth: DepthMap, K: Intrinsics, size: Optional[Tuple[int, int]]) -> Tuple[DepthMap, Intrinsics]:
    if size is None or (size[0] == K.width and size[1] == K.height):
        return depth, K
    width, height = size
    values, validity = resize_depth(depth.values, depth.validity, width, height)
    return DepthMap(values=np.where(validity, values, np.nan), validity=validity), K.scaled(width, height)


def _median_aligned(pred: DepthMap, gt: Optional[DepthMap]) -> DepthMap:
    if gt is None:
        return pred
    valid = pred.validity & gt.validity
    if not valid.any():
        raise EvaluationError("prediction and ground truth share no valid pixel")
    return pred.scaled(float(np.median(gt.values[valid]) / np.median(pred.values[valid])))


def depth_pair_consistency(D_a: DepthMap, D_b: DepthMap, P_ab: PoseSE3, K: Intrinsics,
                           gt_a: Optional[DepthMap] = None, gt_b: Optional[DepthMap] = None,
                           threshold: Optional[float] = None,
                           size: Optional[Tuple[int, int]] = None) -> ConsistencyReport:
    """
    Consistency of two depth maps of adjacent frames.

    Each map is median-aligned to its ground truth when given, optionally
    resized (bilinear) to `size` = (width, height), back-projected, and the
    cloud of frame a is carried into frame b by P_ab. Frame b's cloud is the
    target.

    Args:
        D_a, D_b: Predicted depths of frames a and b
        P_ab: Pose carrying frame a points into frame b
        K: Intrinsics at the depth resolution
        gt_a, gt_b: Optional ground truth for median alignment
        threshold: Inlier distance (0.02 × median depth of the target if None)
        size: Optional evaluation resolution

    Returns:
        ConsistencyReport
    """
    D_a = _median_aligned(D_a, gt_a)
    D_b = _median_aligned(D_b, gt_b)
    D_a, K_eval = _resized(D_a, K, size)
    D_b, _ = _resized(D_b, K, size)
    if threshold is None:
        threshold = default_threshold(D_b)
    source = transform(backproject(D_a, K_eval), P_ab)
    target = backproject(D_b, K_eval)
    report = consistency_metrics(source, target, threshold)
    logger.debug(f"Depth pair consistency: fitness={report.fitness:.4f} rmse={report.rmse:.5f} "
                 f"corr={report.n_corr} threshold={threshold:.5f}")
    return report
