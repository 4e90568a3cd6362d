"""
Pseudo-RGBD Frame-to-Frame Tracker

Dense, pose-only alignment of the current image to the previous frame's
image and depth. The relative pose is refined by Gauss-Newton over a
left-multiplied 6-twist with Huber-weighted photometric residuals and,
when the current frame's depth is available, signed normalised depth
differences weighted by γ. The photometric weights carry the
self-discovered mask, and a second solve drops the pixels rejected by the
auto-mask. Depths are never modified.
"""

import logging
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from geometry.camera import check_dimensions, projection_jacobian
from geometry.lie import apply_left_update, so3_hat_batch
from geometry.models import DepthMap, ImageGrid, Intrinsics, PoseSE3
from geometry.sampling import bilinear_sample
from geometry.warping import compute_warp_field, sample_depth_ratio, warp_image
from losses.consistency import depth_inconsistency, self_discovered_mask
from losses.masks import auto_mask
from odometry.models import PoseRefinement, TrackingOptions, Trajectory
from utils.errors import ConfigurationError, TrackingLostError

logger = logging.getLogger(__name__)


class _Linearization(NamedTuple):
    residuals: np.ndarray  # M
    jacobian: np.ndarray   # M x 6
    weights: np.ndarray    # M
    cost: float
    coverage: float
    photometric_mean: float


class _Solve(NamedTuple):
    pose: PoseSE3
    lin: _Linearization
    iterations: int
    converged: bool
    stalled: bool


def _huber(residuals: np.ndarray, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Huber cost and IRLS weights."""
    magnitude = np.abs(residuals)
    inlier = magnitude <= delta
    cost = np.where(inlier, 0.5 * residuals * residuals, delta * (magnitude - 0.5 * delta))
    weights = np.where(inlier, 1.0, delta / np.maximum(magnitude, 1e-300))
    return cost, weights


def _self_mask(D_a: DepthMap, D_b: Optional[DepthMap], P_ab: PoseSE3, K: Intrinsics,
               opts: TrackingOptions) -> np.ndarray:
    """M_s = 1 - D_diff at P_ab; ones without the current depth."""
    if D_b is None or not opts.use_self_mask:
        return np.ones(K.shape)
    return self_discovered_mask(depth_inconsistency(D_a, D_b, P_ab, K).depth_diff)


def _auto_mask(I_a: ImageGrid, D_a: DepthMap, I_b: ImageGrid, P_ab: PoseSE3, K: Intrinsics) -> np.ndarray:
    warped, valid = warp_image(I_b, D_a, P_ab, K)
    return auto_mask(I_a, I_b, warped, valid)


def _linearize(I_a: ImageGrid, D_a: DepthMap, I_b: ImageGrid, D_b: Optional[DepthMap],
               P_ab: PoseSE3, K: Intrinsics, opts: TrackingOptions,
               self_mask: Optional[np.ndarray] = None,
               auto: Optional[np.ndarray] = None) -> Optional[_Linearization]:
    """
    Residuals and their Jacobian w.r.t. a left twist of P_ab.

    self_mask scales the photometric IRLS weights; pixels outside auto are
    left out of both residual kinds. Both masks are constants here.

    Returns:
        None when nothing overlaps or no photometric residual survives the masks
    """
    field = compute_warp_field(D_a, P_ab, K)
    image = bilinear_sample(I_b.values, field.coords)
    valid = field.in_front & image.valid
    kept = valid if auto is None else valid & auto
    use_depth = D_b is not None and opts.gamma > 0.0
    if use_depth:
        depth_grid = np.where(D_b.validity, D_b.values, 0.0)
        depth = bilinear_sample(depth_grid, field.coords, D_b.validity)
        depth_valid = kept & depth.valid
    count = int(valid.sum())
    coverage = count / float(valid.size)
    if count == 0 or not kept.any():
        return None

    points = field.points_b[kept]
    n_kept = len(points)
    # d X_b / d ξ for X_b <- exp(ξ) X_b
    d_points = np.concatenate([np.broadcast_to(np.eye(3), (n_kept, 3, 3)), -so3_hat_batch(points)], axis=2)
    d_coords = projection_jacobian(points, K) @ d_points  # n_kept x 2 x 6

    photo_residuals = (image.values[kept] - I_a.values[kept]).reshape(n_kept, -1)  # n_kept x C
    photo_jacobian = np.einsum("ncj,njk->nck", image.jacobian[kept], d_coords)
    photo_cost, photo_weights = _huber(photo_residuals, opts.huber_delta)
    if self_mask is not None:
        pixel_weights = self_mask[kept][:, None]
        photo_cost = photo_cost * pixel_weights
        photo_weights = photo_weights * pixel_weights
    residuals = [photo_residuals.ravel()]
    jacobians = [photo_jacobian.reshape(-1, 6)]
    weights = [photo_weights.ravel()]
    total_cost = float(photo_cost.sum())

    if use_depth and depth_valid.any():
        d = np.where(D_a.validity, D_a.values, 1.0)
        ratio, _ = sample_depth_ratio(D_b, field.coords, d)
        sel = depth_valid[kept]
        inv_d = 1.0 / d[depth_valid]
        z = field.normalized_z[depth_valid]
        b = ratio[depth_valid]
        total = z + b
        signed = (z - b) / total
        dz = d_points[sel, 2, :] * inv_d[:, None]
        db = np.einsum("nj,njk->nk", depth.jacobian[depth_valid], d_coords[sel]) * inv_d[:, None]
        geo_jacobian = (2.0 * b / total ** 2)[:, None] * dz - (2.0 * z / total ** 2)[:, None] * db
        scale = np.sqrt(opts.gamma)
        residuals.append(scale * signed)
        jacobians.append(scale * geo_jacobian)
        weights.append(np.ones(signed.size))
        total_cost += float(0.5 * opts.gamma * np.sum(signed * signed))

    return _Linearization(
        residuals=np.concatenate(residuals),
        jacobian=np.concatenate(jacobians),
        weights=np.concatenate(weights),
        cost=total_cost / count,
        coverage=coverage,
        photometric_mean=float(np.abs(photo_residuals).mean()),
    )


def _check_health(lin: Optional[_Linearization], opts: TrackingOptions, frame_index: Optional[int]) -> _Linearization:
    if lin is None:
        raise TrackingLostError("no pixel of the previous frame projects into the current frame", frame_index)
    if not np.isfinite(lin.cost):
        raise TrackingLostError(f"cost is not finite ({lin.cost})", frame_index)
    if lin.coverage < opts.min_coverage:
        raise TrackingLostError(
            f"valid coverage {lin.coverage:.3f} below {opts.min_coverage:.3f}", frame_index)
    return lin


def _gauss_newton(I_a: ImageGrid, D_a: DepthMap, I_b: ImageGrid, D_b: Optional[DepthMap], K: Intrinsics,
                  pose: PoseSE3, opts: TrackingOptions, auto: Optional[np.ndarray],
                  frame_index: Optional[int]) -> _Solve:
    """Damped Gauss-Newton from pose; M_s is re-evaluated at the start of every iteration."""
    converged = False
    stalled = False
    iterations = 0
    self_mask = _self_mask(D_a, D_b, pose, K, opts)
    lin = _check_health(_linearize(I_a, D_a, I_b, D_b, pose, K, opts, self_mask, auto), opts, frame_index)
    for iterations in range(1, opts.max_iterations + 1):
        weighted = lin.jacobian * lin.weights[:, None]
        hessian = lin.jacobian.T @ weighted
        gradient = weighted.T @ lin.residuals
        try:
            delta = -np.linalg.solve(hessian, gradient)
        except np.linalg.LinAlgError:
            raise TrackingLostError("normal equations are singular", frame_index)
        if float(np.linalg.norm(delta)) < opts.convergence_threshold:
            converged = True
            break

        step = delta
        accepted = None
        for _ in range(opts.max_halvings + 1):
            candidate = apply_left_update(step, pose)
            candidate_lin = _linearize(I_a, D_a, I_b, D_b, candidate, K, opts, self_mask, auto)
            if candidate_lin is not None and candidate_lin.cost <= lin.cost:
                accepted = candidate
                break
            step = 0.5 * step
        if accepted is None:
            stalled = True
            logger.debug(f"iteration {iterations}: no decrease after {opts.max_halvings} halvings")
            break
        pose = accepted
        self_mask = _self_mask(D_a, D_b, pose, K, opts)
        lin = _check_health(_linearize(I_a, D_a, I_b, D_b, pose, K, opts, self_mask, auto), opts, frame_index)
        step_norm = float(np.linalg.norm(step))
        logger.debug(f"iteration {iterations}: cost={lin.cost:.6e} |dxi|={step_norm:.3e}")
        if step_norm < opts.convergence_threshold:
            converged = True
            break
    return _Solve(pose, lin, iterations, converged, stalled)


def refine_pose(I_a: ImageGrid, D_a: DepthMap, I_b: ImageGrid, K: Intrinsics, init: PoseSE3,
                opts: Optional[TrackingOptions] = None, D_b: Optional[DepthMap] = None,
                frame_index: Optional[int] = None) -> PoseRefinement:
    """
    Gauss-Newton refinement of P_ab, the pose carrying points of frame a into frame b.

    The first solve uses every valid pixel. With the auto-mask enabled, the
    pixels that the unwarped current image already explains at least as well
    as the warped one are then dropped and the solve is repeated from the
    first solution with that mask held fixed.

    Args:
        I_a, D_a: Previous image and its depth
        I_b: Current image
        K: Shared intrinsics
        init: Initial P_ab
        opts: Tracking options (odometry/config.json defaults if None)
        D_b: Current depth; enables the depth-consistency residuals and M_s
        frame_index: Used in diagnostics only

    Returns:
        PoseRefinement with the refined P_ab and solver statistics

    Raises:
        TrackingLostError: On low coverage, non-finite cost, a singular system
            or a large photometric residual at the solution
    """
    opts = opts or TrackingOptions.from_config()
    for name, shape in (("previous image", I_a.shape), ("current image", I_b.shape)):
        check_dimensions(shape, K, name)
    depth_coverage = float(D_a.validity.mean())
    if depth_coverage < opts.min_depth_coverage:
        raise TrackingLostError(
            f"previous depth valid on {depth_coverage:.1%} of pixels (need {opts.min_depth_coverage:.0%})", frame_index)

    solve = _gauss_newton(I_a, D_a, I_b, D_b, K, init, opts, None, frame_index)
    iterations = solve.iterations
    if opts.use_auto_mask:
        auto = _auto_mask(I_a, D_a, I_b, solve.pose, K)
        if auto.mean() >= opts.min_coverage:
            solve = _gauss_newton(I_a, D_a, I_b, D_b, K, solve.pose, opts, auto, frame_index)
            iterations += solve.iterations
        else:
            # static pair: the unwarped frame already explains (almost) everything
            logger.debug(f"auto-mask keeps {auto.mean():.1%} of pixels; keeping the unmasked solution")

    lin = solve.lin
    if lin.photometric_mean > opts.max_photometric_mean:
        raise TrackingLostError(
            f"mean photometric residual {lin.photometric_mean:.3f} above {opts.max_photometric_mean}", frame_index)

    return PoseRefinement(P_ab=solve.pose, iterations=iterations, converged=solve.converged,
                          stalled=solve.stalled, coverage=lin.coverage, cost=lin.cost,
                          photometric_mean=lin.photometric_mean)


def init_pose(mode: str, history: Trajectory, external: Optional[PoseSE3] = None) -> PoseSE3:
    """
    Initial relative motion T_t^-1 · T_{t+1} for the next frame.

    motion_model repeats the last motion T_{t-1}^-1 · T_t (identity with fewer
    than two past poses); external returns the supplied pose.

    Raises:
        ConfigurationError: For external mode without a pose or an unknown mode
    """
    if mode == "external":
        if external is None:
            raise ConfigurationError("external initialisation requested but no pose was supplied")
        return external
    if mode != "motion_model":
        raise ConfigurationError(f"unknown init mode '{mode}'")
    if len(history) < 2:
        return PoseSE3.identity()
    previous, last = history.poses[-2], history.poses[-1]
    return previous.inverse() @ last


def track_frame(prev: Tuple[ImageGrid, DepthMap, PoseSE3], cur: ImageGrid, K: Intrinsics, init: PoseSE3,
                opts: Optional[TrackingOptions] = None, cur_depth: Optional[DepthMap] = None,
                frame_index: Optional[int] = None) -> PoseSE3:
    """
    World-from-camera pose of the current frame.

    Args:
        prev: (image, depth, world-from-camera pose) of the previous frame
        cur: Current image
        K: Shared intrinsics
        init: Initial relative motion T_prev^-1 · T_cur
        opts: Tracking options
        cur_depth: Current depth for the depth-consistency residuals

    Returns:
        T_cur = T_prev · (refined P_ab)^-1
    """
    I_prev, D_prev, T_prev = prev
    refinement = refine_pose(I_prev, D_prev, cur, K, init.inverse(), opts, cur_depth, frame_index)
    return T_prev @ refinement.motion


def run_odometry(frames: Sequence[Tuple[ImageGrid, DepthMap]], K: Intrinsics,
                 opts: Optional[TrackingOptions] = None,
                 external: Optional[Sequence[Optional[PoseSE3]]] = None) -> Trajectory:
    """
    Track a sequence frame by frame.

    Args:
        frames: (image, depth) per frame, at least 2
        K: Shared intrinsics
        opts: Tracking options; opts.init_mode picks the initialisation
        external: Predicted relative motions, entry t for frame t - 1 -> t
            (entry 0 unused); required for external initialisation

    Returns:
        Trajectory anchored at identity for frame 0

    Raises:
        TrackingLostError: With the index of the frame that failed
    """
    opts = opts or TrackingOptions.from_config()
    if len(frames) < 2:
        raise ConfigurationError("run_odometry needs at least 2 frames")
    if external is not None and len(external) != len(frames):
        raise ConfigurationError(f"expected {len(frames)} external poses, got {len(external)}")

    trajectory = Trajectory.from_poses([PoseSE3.identity()])
    for t in range(1, len(frames)):
        guess = init_pose(opts.init_mode, trajectory, external[t] if external is not None else None)
        I_prev, D_prev = frames[t - 1]
        I_cur, D_cur = frames[t]
        pose = track_frame((I_prev, D_prev, trajectory.poses[-1]), I_cur, K, guess, opts, D_cur, frame_index=t)
        trajectory.append(t, pose)
        logger.info(f"frame {t}: position {np.array2string(pose.translation, precision=4)}, "
                    f"rotation {np.degrees(pose.rotation_angle()):.3f} deg")
    return trajectory
