"""
Total Objective

L = α·L_P^M + β·L_S + γ·L_G for one ordered pair (a, b), with analytic
gradients w.r.t. every pixel of D_a and D_b and the left-multiplied twist of
P_ab. M_s and M_a enter as fixed weights: no gradient flows through them.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from geometry.camera import check_dimensions, projection_jacobian
from geometry.lie import se3_adjoint
from geometry.models import DepthMap, ImageGrid, Intrinsics, PoseSE3
from geometry.sampling import bilinear_sample, bilinear_splat
from geometry.warping import WarpField, compute_warp_field, sample_depth_ratio
from losses.consistency import normalized_difference
from losses.masks import auto_mask
from losses.models import LossBundle, LossOptions, LossWeights, MaskSet, TermGradient
from losses.photometric import photometric_gradient, photometric_map, photometric_support
from losses.smoothness import smoothness_terms
from utils.errors import ConfigurationError, FullyMaskedError, NoOverlapError

logger = logging.getLogger(__name__)


def _backpropagate(field: WarpField, K: Intrinsics, D_b: DepthMap,
                   image_jacobian: np.ndarray, depth_jacobian: np.ndarray,
                   grad_image: Optional[np.ndarray], grad_sampled_depth: Optional[np.ndarray],
                   grad_depth_b_direct: Optional[np.ndarray] = None,
                   grad_z: Optional[np.ndarray] = None) -> TermGradient:
    """
    Chain per-pixel gradients w.r.t. the warped image, the sampled D'_b and
    the carried depth D^a_b back to depth pixels and the pose twist.
    """
    H, W = field.in_front.shape
    grad_coords = np.zeros((H, W, 2))
    if grad_image is not None:
        grad_coords += np.einsum("hwc,hwcj->hwj", grad_image, image_jacobian)
    if grad_sampled_depth is not None:
        grad_coords += grad_sampled_depth[..., None] * depth_jacobian
    grad_points = np.einsum("hwi,hwij->hwj", grad_coords, projection_jacobian(field.points_b, K))
    if grad_z is not None:
        grad_points[..., 2] += grad_z

    depth_a = np.sum(grad_points * field.rotated_rays, axis=2)
    twist = np.concatenate([grad_points.sum(axis=(0, 1)),
                            np.cross(field.points_b, grad_points).sum(axis=(0, 1))])
    if grad_sampled_depth is not None:
        depth_b = bilinear_splat(grad_sampled_depth, field.coords, H, W, D_b.validity)
    else:
        depth_b = np.zeros((H, W))
    if grad_depth_b_direct is not None:
        depth_b = depth_b + grad_depth_b_direct
    return TermGradient(depth_a=depth_a, depth_b=depth_b, twist=twist)


def total_loss(I_a: ImageGrid, I_b: ImageGrid, D_a: DepthMap, D_b: DepthMap, P_ab: PoseSE3,
               K: Intrinsics, weights: Optional[LossWeights] = None,
               options: Optional[LossOptions] = None,
               frozen: Optional[MaskSet] = None) -> LossBundle:
    """
    Evaluate the full objective for the pair (a, b).

    Args:
        I_a, I_b: Reference and source images
        D_a, D_b: Depth maps of both views
        P_ab: Pose carrying points of view a into view b
        K: Intrinsics shared by both views
        weights: Loss weights (config defaults if None)
        options: Photometric options (config defaults if None)
        frozen: Masks from a previous evaluation to hold fixed

    Returns:
        LossBundle with scalars, per-pixel maps and gradients

    Raises:
        NoOverlapError: If no pixel projects validly
        FullyMaskedError: If the masks remove every valid pixel
    """
    weights = weights or LossWeights.from_config()
    options = options or LossOptions.from_config()
    for name, shape in (("image a", I_a.shape), ("image b", I_b.shape), ("depth b", D_b.shape)):
        check_dimensions(shape, K, name)
    if I_a.channels != I_b.channels:
        raise ConfigurationError("images must have the same number of channels")
    H, W = K.shape

    field = compute_warp_field(D_a, P_ab, K)
    image_sample = bilinear_sample(I_b.values, field.coords)
    depth_grid = np.where(D_b.validity, D_b.values, 0.0)
    depth_sample = bilinear_sample(depth_grid, field.coords, D_b.validity)
    valid = field.in_front & image_sample.valid & depth_sample.valid
    if frozen is not None:
        valid = valid & frozen.valid
    if not valid.any():
        raise NoOverlapError("no pixel of view a projects validly into view b")

    warped = np.where(valid[..., None], image_sample.values, 0.0)

    d = np.where(D_a.validity, D_a.values, 1.0)
    ratio, _ = sample_depth_ratio(D_b, field.coords, d)
    qz = np.where(valid, field.normalized_z, 1.0)
    depth_diff = np.where(valid, normalized_difference(qz, np.where(valid, ratio, 1.0)), 0.0)

    if frozen is not None:
        self_mask = frozen.self_mask
        auto = frozen.auto_mask & valid
    else:
        self_mask = 1.0 - depth_diff if options.use_self_mask else np.ones((H, W))
        if options.use_auto_mask:
            auto = auto_mask(I_a, I_b, ImageGrid(values=warped), valid)
        else:
            auto = valid.copy()

    support = photometric_support(valid)
    photo_set = valid & auto
    geo_set = photo_set
    if not photo_set.any():
        raise FullyMaskedError("no pixel survives the validity and auto masks")

    per_pixel = photometric_map(I_a.values, warped, valid, weights, options.similarity)
    loss_photo = float(per_pixel[valid].mean())
    loss_photo_masked = float((self_mask * per_pixel)[photo_set].mean())
    loss_geo = float(depth_diff[geo_set].mean())
    loss_smooth, grad_smooth = smoothness_terms(D_a, I_a)
    total = weights.alpha * loss_photo_masked + weights.beta * loss_smooth + weights.gamma * loss_geo

    # photometric terms
    unmasked_weights = valid / float(valid.sum())
    masked_weights = np.where(photo_set, self_mask, 0.0) / float(photo_set.sum())
    grads = {}
    for name, pixel_weights in (("photometric", unmasked_weights), ("photometric_masked", masked_weights)):
        grad_image = photometric_gradient(I_a.values, warped, pixel_weights, valid, weights,
                                          options.similarity)
        grads[name] = _backpropagate(field, K, D_b, image_sample.jacobian, depth_sample.jacobian,
                                     grad_image, None)

    # geometry term, differentiated in unnormalised depths
    z = np.where(geo_set, field.depth_b, 1.0)
    b = np.where(geo_set, depth_sample.values, 1.0)
    s, S = z - b, z + b
    coef = geo_set / float(geo_set.sum())
    grad_z = coef * (np.sign(s) / S - np.abs(s) / (S * S))
    grad_b = coef * (-np.sign(s) / S - np.abs(s) / (S * S))
    grads["geometry"] = _backpropagate(field, K, D_b, image_sample.jacobian, depth_sample.jacobian,
                                       None, grad_b, grad_z=grad_z)

    grads["smoothness"] = TermGradient(depth_a=grad_smooth, depth_b=np.zeros((H, W)), twist=np.zeros(6))

    combined = (grads["photometric_masked"].scaled(weights.alpha)
                + grads["smoothness"].scaled(weights.beta)
                + grads["geometry"].scaled(weights.gamma))

    logger.debug(
        f"total={total:.6f} LP^M={loss_photo_masked:.6f} LS={loss_smooth:.6f} LG={loss_geo:.6f} "
        f"valid={int(valid.sum())} photo_set={int(photo_set.sum())}"
    )

    return LossBundle(
        total=total,
        photometric=loss_photo,
        photometric_masked=loss_photo_masked,
        smoothness=loss_smooth,
        geometry=loss_geo,
        weights=weights,
        photometric_map=per_pixel,
        depth_diff=depth_diff,
        self_mask=self_mask,
        auto_mask=auto,
        valid=valid,
        photometric_support=support,
        warped=warped,
        grad_depth_a=combined.depth_a,
        grad_depth_b=combined.depth_b,
        grad_twist=combined.twist,
        term_gradients=grads,
    )


def inverse_twist_gradient(grad_twist_inverse: np.ndarray, P_ab: PoseSE3) -> np.ndarray:
    """
    Map a gradient w.r.t. the left twist of P_ab^-1 onto the left twist of P_ab.

    Perturbing P_ab <- exp(ξ) P_ab perturbs P_ba = P_ab^-1 by exp(-Ad_{P_ba} ξ).
    """
    return -se3_adjoint(P_ab.inverse()).T @ grad_twist_inverse


def bidirectional_loss(I_a: ImageGrid, I_b: ImageGrid, D_a: DepthMap, D_b: DepthMap, P_ab: PoseSE3,
                       K: Intrinsics, weights: Optional[LossWeights] = None,
                       options: Optional[LossOptions] = None,
                       frozen: Optional[Tuple[MaskSet, MaskSet]] = None) -> Tuple[float, TermGradient, LossBundle, LossBundle]:
    """
    Objective a -> b plus b -> a.

    Returns:
        Tuple of (total, gradient w.r.t. (D_a, D_b, twist of P_ab), forward bundle, backward bundle)
    """
    forward = total_loss(I_a, I_b, D_a, D_b, P_ab, K, weights, options, frozen[0] if frozen else None)
    backward = total_loss(I_b, I_a, D_b, D_a, P_ab.inverse(), K, weights, options, frozen[1] if frozen else None)
    gradient = TermGradient(
        depth_a=forward.grad_depth_a + backward.grad_depth_b,
        depth_b=forward.grad_depth_b + backward.grad_depth_a,
        twist=forward.grad_twist + inverse_twist_gradient(backward.grad_twist, P_ab),
    )
    return forward.total + backward.total, gradient, forward, backward
