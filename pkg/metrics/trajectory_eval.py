"""
Trajectory Evaluation

Closed-form similarity alignment of camera positions, absolute trajectory
error and the KITTI segment-based relative errors.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from metrics.config_loader import load_config
from metrics.models import OdomEvalReport, Sim3
from odometry.models import Trajectory
from utils.errors import ConfigurationError, DegenerateGeometryError, EvaluationError

logger = logging.getLogger(__name__)

_config = load_config()
SEGMENT_LENGTHS: List[float] = [float(length) for length in _config["odometry"]["segment_lengths"]]
FIRST_FRAME_STEP = int(_config["odometry"]["first_frame_step"])
DEFAULT_DOF = int(_config["odometry"]["default_dof"])
# relative size of the second singular value below which positions count as collinear
COLLINEAR_TOLERANCE = 1e-10


def umeyama(source: np.ndarray, target: np.ndarray, with_scale: bool = True) -> Sim3:
    """
    Least-squares similarity mapping source points onto target points.

    Args:
        source: N x 3 points
        target: N x 3 points
        with_scale: Estimate the scale (7 DoF) or fix it to 1 (6 DoF)

    Raises:
        DegenerateGeometryError: Fewer than 3 points or collinear source points
    """
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if source.shape != target.shape:
        raise ConfigurationError(f"point sets differ in shape: {source.shape} vs {target.shape}")
    n = source.shape[0]
    if n < 3:
        raise DegenerateGeometryError(f"alignment needs at least 3 positions, got {n}")

    mu_source = source.mean(axis=0)
    mu_target = target.mean(axis=0)
    source_c = source - mu_source
    target_c = target - mu_target

    spread = np.linalg.svd(source_c, compute_uv=False)
    if spread[0] == 0.0:
        raise DegenerateGeometryError("all positions coincide; rotation and scale are undetermined")
    if spread[1] <= COLLINEAR_TOLERANCE * spread[0]:
        raise DegenerateGeometryError("positions are collinear; rotation about the line is undetermined")

    covariance = target_c.T @ source_c / n
    U, D, Vt = np.linalg.svd(covariance)
    S = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0.0:
        S[2, 2] = -1.0
    rotation = U @ S @ Vt
    if with_scale:
        variance = np.mean(np.sum(source_c * source_c, axis=1))
        scale = float(np.trace(np.diag(D) @ S) / variance)
    else:
        scale = 1.0
    translation = mu_target - scale * rotation @ mu_source
    return Sim3(rotation=rotation, translation=translation, scale=scale)


def _check_pair(pred: Trajectory, gt: Trajectory) -> None:
    if len(pred) != len(gt):
        raise EvaluationError(f"trajectories differ in length: {len(pred)} vs {len(gt)}")


def _dof_scale(dof: int) -> bool:
    if dof not in (6, 7):
        raise ConfigurationError(f"dof must be 6 or 7, got {dof}")
    return dof == 7


def align_sim3(pred: Trajectory, gt: Trajectory, dof: int = DEFAULT_DOF) -> Sim3:
    """Similarity (dof=7) or rigid (dof=6) transform mapping pred positions onto gt."""
    _check_pair(pred, gt)
    return umeyama(pred.positions(), gt.positions(), with_scale=_dof_scale(dof))


def ate(pred: Trajectory, gt: Trajectory, dof: int = DEFAULT_DOF) -> float:
    """RMSE of camera positions after alignment."""
    alignment = align_sim3(pred, gt, dof)
    residuals = gt.positions() - alignment.apply(pred.positions())
    return float(np.sqrt(np.mean(np.sum(residuals * residuals, axis=1))))


def _trajectory_distances(positions: np.ndarray) -> np.ndarray:
    steps = np.linalg.norm(np.diff(positions, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


def _last_frame(distances: np.ndarray, first_frame: int, length: float) -> int:
    """First frame whose travelled distance exceeds the segment start by length; -1 if none."""
    beyond = np.nonzero(distances[first_frame:] > distances[first_frame] + length)[0]
    return first_frame + int(beyond[0]) if beyond.size else -1


def _rotation_error(pose_error: np.ndarray) -> float:
    d = 0.5 * (np.trace(pose_error[:3, :3]) - 1.0)
    return float(np.arccos(np.clip(d, -1.0, 1.0)))


def segment_errors(pred: Trajectory, gt: Trajectory, lengths: Optional[Sequence[float]] = None,
                   step: int = FIRST_FRAME_STEP) -> List[Tuple[int, float, float, float]]:
    """
    Per-segment errors (first_frame, length, rotation rad/m, translation m/m).

    For each first frame (every `step` frames) and each length, the segment
    ends at the first frame whose gt path distance exceeds the start by more
    than the length.
    """
    _check_pair(pred, gt)
    lengths = SEGMENT_LENGTHS if lengths is None else [float(length) for length in lengths]
    gt_poses = [pose.matrix() for pose in gt.poses]
    pred_poses = [pose.matrix() for pose in pred.poses]
    distances = _trajectory_distances(gt.positions())
    errors = []
    for first in range(0, len(gt_poses), step):
        for length in lengths:
            last = _last_frame(distances, first, length)
            if last == -1:
                continue
            delta_gt = np.linalg.inv(gt_poses[first]) @ gt_poses[last]
            delta_pred = np.linalg.inv(pred_poses[first]) @ pred_poses[last]
            pose_error = np.linalg.inv(delta_pred) @ delta_gt
            errors.append((first, length, _rotation_error(pose_error) / length,
                           float(np.linalg.norm(pose_error[:3, 3])) / length))
    return errors


def kitti_rel_errors(pred: Trajectory, gt: Trajectory, lengths: Optional[Sequence[float]] = None,
                     step: int = FIRST_FRAME_STEP) -> Tuple[float, float]:
    """
    KITTI relative errors averaged over all segments.

    Returns:
        (t_err in %, r_err in deg/100m)

    Raises:
        EvaluationError: If the gt path is too short for any segment length
    """
    errors = segment_errors(pred, gt, lengths, step)
    if not errors:
        raise EvaluationError("ground-truth path is shorter than every evaluation segment length")
    r_err = float(np.mean([e[2] for e in errors])) * (180.0 / np.pi) * 100.0
    t_err = float(np.mean([e[3] for e in errors])) * 100.0
    logger.debug(f"KITTI errors over {len(errors)} segments: t_err={t_err:.4f}% r_err={r_err:.4f} deg/100m")
    return t_err, r_err


def evaluate_trajectory(pred: Trajectory, gt: Trajectory, dof: int = DEFAULT_DOF,
                        lengths: Optional[Sequence[float]] = None) -> OdomEvalReport:
    """ATE after alignment, plus KITTI errors when the path is long enough."""
    alignment = align_sim3(pred, gt, dof)
    residuals = gt.positions() - alignment.apply(pred.positions())
    ate_rmse = float(np.sqrt(np.mean(np.sum(residuals * residuals, axis=1))))
    t_err = r_err = None
    try:
        t_err, r_err = kitti_rel_errors(pred, gt, lengths)
    except EvaluationError as e:
        logger.warning(f"Skipping KITTI relative errors: {e}")
    return OdomEvalReport(ate_rmse=ate_rmse, t_err=t_err, r_err=r_err, alignment=alignment, dof=dof)
