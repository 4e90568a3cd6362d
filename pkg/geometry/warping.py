"""
Inverse Warping and Cross-View Depth Synthesis

For every pixel p of view a: back-project with D_a, transform by P_ab,
project into view b and sample there. Coordinates are computed from the
depth-normalised point q = R·ray + t/d, so jointly scaling depths and
translation leaves them unchanged.
"""

import logging
from typing import NamedTuple, Tuple

import numpy as np

from geometry.camera import Z_EPS, check_dimensions, pixel_rays
from geometry.models import DepthMap, ImageGrid, Intrinsics, PoseSE3
from geometry.sampling import bilinear_sample, bilinear_stencil

logger = logging.getLogger(__name__)


class WarpField(NamedTuple):
    """Per-pixel geometry of the a -> b reprojection."""
    rays: np.ndarray          # H x W x 3 rays of view a
    rotated_rays: np.ndarray  # R · ray
    points_b: np.ndarray      # H x W x 3 points in view b
    coords: np.ndarray        # H x W x 2 continuous pixel coords in view b
    depth_b: np.ndarray       # H x W z-component in view b (D^a_b)
    normalized_z: np.ndarray  # depth_b / D_a
    in_front: np.ndarray      # D_a valid and depth_b > Z_EPS


class DepthSynthesis(NamedTuple):
    projected: np.ndarray     # D^a_b, zero outside V
    interpolated: np.ndarray  # D'_b, zero outside V
    valid: np.ndarray         # V


def compute_warp_field(D_a: DepthMap, P_ab: PoseSE3, K: Intrinsics) -> WarpField:
    check_dimensions(D_a.shape, K)
    rays = pixel_rays(K)
    valid_a = D_a.validity
    d = np.where(valid_a, D_a.values, 1.0)
    rotated = rays @ P_ab.rotation.T
    q = rotated + P_ab.translation / d[..., None]
    qz = q[..., 2]
    in_front = valid_a & (d * qz > Z_EPS)
    safe_qz = np.where(in_front, qz, 1.0)
    coords = np.stack([K.fx * q[..., 0] / safe_qz + K.cx,
                       K.fy * q[..., 1] / safe_qz + K.cy], axis=-1)
    points_b = d[..., None] * q
    return WarpField(rays, rotated, points_b, coords, points_b[..., 2], qz, in_front)


def warp_image(I_b: ImageGrid, D_a: DepthMap, P_ab: PoseSE3, K: Intrinsics) -> Tuple[ImageGrid, np.ndarray]:
    """
    Synthesize view a from the source image I_b.

    Returns:
        Tuple of (I'_a, V). Pixels outside V are zero.
    """
    check_dimensions(I_b.shape, K, "source image")
    field = compute_warp_field(D_a, P_ab, K)
    sample = bilinear_sample(I_b.values, field.coords)
    valid = field.in_front & sample.valid
    warped = np.where(valid[..., None], sample.values, 0.0)
    return ImageGrid(values=warped), valid


def sample_depth_ratio(D_b: DepthMap, coords: np.ndarray, denominator: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bilinear sample of D_b / denominator at coords.

    Each neighbour is divided before blending so that jointly scaled inputs
    give bit-identical ratios.
    """
    height, width = D_b.shape
    st = bilinear_stencil(coords, height, width, D_b.validity)
    x1 = np.minimum(st.x0 + 1, width - 1)
    y1 = np.minimum(st.y0 + 1, height - 1)
    values = np.where(D_b.validity, D_b.values, 1.0)
    a, b = st.frac_x, st.frac_y
    ratio = ((1 - a) * (1 - b) * (values[st.y0, st.x0] / denominator)
             + a * (1 - b) * (values[st.y0, x1] / denominator)
             + (1 - a) * b * (values[y1, st.x0] / denominator)
             + a * b * (values[y1, x1] / denominator))
    return np.where(st.valid, ratio, 0.0), st.valid


def synthesize_depth(D_a: DepthMap, D_b: DepthMap, P_ab: PoseSE3, K: Intrinsics) -> DepthSynthesis:
    """
    Depth of view a's points as seen from view b (D^a_b) next to D_b
    interpolated at the same projections (D'_b). Both are defined on V.
    """
    check_dimensions(D_b.shape, K, "depth b")
    field = compute_warp_field(D_a, P_ab, K)
    sample = bilinear_sample(np.where(D_b.validity, D_b.values, 0.0), field.coords, D_b.validity)
    valid = field.in_front & sample.valid
    projected = np.where(valid, field.depth_b, 0.0)
    interpolated = np.where(valid, sample.values, 0.0)
    return DepthSynthesis(projected, interpolated, valid)
