"""
Pinhole Camera Operations

Back-projection of depth maps to point clouds, rigid transformation of points
and perspective projection back to continuous pixel coordinates.
"""

import logging
from typing import Tuple

import numpy as np

from geometry.config_loader import load_config
from geometry.models import DepthMap, Intrinsics, PointCloud, PoseSE3, ImageGrid
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

_config = load_config()
# Points with z <= Z_EPS are behind (or on) the camera plane
Z_EPS = float(_config["camera"]["z_eps"])


def check_dimensions(shape: Tuple[int, int], K: Intrinsics, what: str = "depth") -> None:
    """Raise ConfigurationError when an H x W field does not match K."""
    if tuple(shape) != K.shape:
        raise ConfigurationError(
            f"{what} is {shape[0]}x{shape[1]} (HxW) but intrinsics describe {K.height}x{K.width}"
        )


def pixel_grid(K: Intrinsics) -> Tuple[np.ndarray, np.ndarray]:
    """Integer pixel coordinates (u, v) as float H x W arrays."""
    v, u = np.mgrid[0:K.height, 0:K.width].astype(np.float64)
    return u, v


def pixel_rays(K: Intrinsics) -> np.ndarray:
    """H x W x 3 rays ((u - cx)/fx, (v - cy)/fy, 1)."""
    u, v = pixel_grid(K)
    rays = np.empty((K.height, K.width, 3))
    rays[..., 0] = (u - K.cx) / K.fx
    rays[..., 1] = (v - K.cy) / K.fy
    rays[..., 2] = 1.0
    return rays


def backproject(depth: DepthMap, K: Intrinsics, image: ImageGrid = None) -> PointCloud:
    """
    Lift every valid depth pixel to a 3D point in the camera frame.

    Args:
        depth: Depth map matching K
        K: Camera intrinsics
        image: Optional image whose colors are attached to the points

    Returns:
        PointCloud with one point per valid pixel, row-major order
    """
    check_dimensions(depth.shape, K)
    points = pixel_rays(K) * depth.values[..., None]
    valid = depth.validity
    colors = None
    if image is not None:
        check_dimensions(image.shape, K, "image")
        pixel_colors = image.values if image.channels == 3 else np.repeat(image.values, 3, axis=2)
        colors = pixel_colors[valid]
    return PointCloud(points=points[valid], colors=colors)


def transform(points: PointCloud, P: PoseSE3) -> PointCloud:
    """p' = R p + t for every point."""
    return PointCloud(points=P.apply(points.points), colors=points.colors)


def project_array(points: np.ndarray, K: Intrinsics) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Projection of an (..., 3) array; see project."""
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    in_front = z > Z_EPS
    safe_z = np.where(in_front, z, 1.0)
    coords = np.stack([K.fx * x / safe_z + K.cx, K.fy * y / safe_z + K.cy], axis=-1)
    return coords, z.copy(), in_front


def project(points: PointCloud, K: Intrinsics) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Perspective projection.

    Returns:
        Tuple of (coords N x 2, depths N, in_front N). Points with z <= Z_EPS are
        flagged in in_front and get finite placeholder coordinates.
    """
    return project_array(points.points, K)


def projection_jacobian(points: np.ndarray, K: Intrinsics) -> np.ndarray:
    """d(u, v)/d(x, y, z) for (..., 3) points, shape (..., 2, 3)."""
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    safe_z = np.where(z > Z_EPS, z, 1.0)
    inv_z = 1.0 / safe_z
    J = np.zeros(points.shape[:-1] + (2, 3))
    J[..., 0, 0] = K.fx * inv_z
    J[..., 0, 2] = -K.fx * x * inv_z * inv_z
    J[..., 1, 1] = K.fy * inv_z
    J[..., 1, 2] = -K.fy * y * inv_z * inv_z
    return J
