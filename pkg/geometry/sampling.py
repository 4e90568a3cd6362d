"""
Differentiable Bilinear Sampling

Samples H x W (or H x W x C) fields at continuous pixel coordinates and
returns the analytic derivative of the sampled value with respect to the
coordinates. A sample is valid only when all four neighbouring pixels lie
inside the grid (and, when a validity mask is given, are themselves valid).
"""

import logging
from typing import NamedTuple, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)


class Stencil(NamedTuple):
    """Top-left neighbour indices, fractional offsets and validity per sample."""
    x0: np.ndarray
    y0: np.ndarray
    frac_x: np.ndarray
    frac_y: np.ndarray
    valid: np.ndarray


class Sample(NamedTuple):
    values: np.ndarray
    valid: np.ndarray
    jacobian: np.ndarray


def bilinear_stencil(coords: np.ndarray, height: int, width: int,
                     validity: Optional[np.ndarray] = None) -> Stencil:
    """Neighbour stencil for (..., 2) coordinates on an H x W grid."""
    u, v = coords[..., 0], coords[..., 1]
    finite = np.isfinite(u) & np.isfinite(v)
    u = np.where(finite, u, -1.0)
    v = np.where(finite, v, -1.0)
    x0f = np.floor(u)
    y0f = np.floor(v)
    valid = finite & (x0f >= 0) & (x0f + 1 <= width - 1) & (y0f >= 0) & (y0f + 1 <= height - 1)
    x0 = np.clip(x0f, 0, max(width - 2, 0)).astype(np.int64)
    y0 = np.clip(y0f, 0, max(height - 2, 0)).astype(np.int64)
    frac_x = np.where(valid, u - x0f, 0.0)
    frac_y = np.where(valid, v - y0f, 0.0)
    if validity is not None:
        x1 = np.minimum(x0 + 1, width - 1)
        y1 = np.minimum(y0 + 1, height - 1)
        valid = valid & validity[y0, x0] & validity[y0, x1] & validity[y1, x0] & validity[y1, x1]
    return Stencil(x0, y0, frac_x, frac_y, valid)


def bilinear_sample(grid: np.ndarray, coords: np.ndarray,
                    validity: Optional[np.ndarray] = None) -> Sample:
    """
    Sample grid at continuous coordinates.

    Args:
        grid: H x W or H x W x C array
        coords: (..., 2) array of (u, v) pixel coordinates
        validity: Optional H x W boolean mask of usable grid pixels

    Returns:
        Sample(values (..., [C]), valid (...), jacobian (..., [C,] 2)).
        Invalid samples hold finite placeholder values and zero jacobians.
    """
    height, width = grid.shape[:2]
    st = bilinear_stencil(coords, height, width, validity)
    x1 = np.minimum(st.x0 + 1, width - 1)
    y1 = np.minimum(st.y0 + 1, height - 1)
    g00 = grid[st.y0, st.x0]
    g10 = grid[st.y0, x1]
    g01 = grid[y1, st.x0]
    g11 = grid[y1, x1]
    a, b = st.frac_x, st.frac_y
    if grid.ndim == 3:
        a = a[..., None]
        b = b[..., None]
    values = (1 - a) * (1 - b) * g00 + a * (1 - b) * g10 + (1 - a) * b * g01 + a * b * g11
    d_du = (1 - b) * (g10 - g00) + b * (g11 - g01)
    d_dv = (1 - a) * (g01 - g00) + a * (g11 - g10)
    jacobian = np.stack([d_du, d_dv], axis=-1)
    mask = st.valid if grid.ndim == 2 else st.valid[..., None]
    values = np.where(mask, values, 0.0)
    jacobian = np.where(mask[..., None], jacobian, 0.0)
    return Sample(values, st.valid, jacobian)


def bilinear_splat(weights: np.ndarray, coords: np.ndarray, height: int, width: int,
                   validity: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Adjoint of bilinear_sample with respect to the grid values.

    Distributes each weight onto the four neighbours of its coordinate with
    the bilinear weights; invalid samples contribute nothing.
    """
    st = bilinear_stencil(coords, height, width, validity)
    w = np.where(st.valid, weights, 0.0).ravel()
    a, b = st.frac_x.ravel(), st.frac_y.ravel()
    x0, y0 = st.x0.ravel(), st.y0.ravel()
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    out = np.zeros(height * width)
    np.add.at(out, y0 * width + x0, w * (1 - a) * (1 - b))
    np.add.at(out, y0 * width + x1, w * a * (1 - b))
    np.add.at(out, y1 * width + x0, w * (1 - a) * b)
    np.add.at(out, y1 * width + x1, w * a * b)
    return out.reshape(height, width)


def resize_depth(values: np.ndarray, validity: np.ndarray, width: int, height: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bilinear resampling of a depth field to width x height.

    Pixel centres are mapped with the align-corners convention so the four
    corners of the source map onto the four corners of the target.
    """
    src_h, src_w = values.shape
    us = np.linspace(0.0, src_w - 1, width)
    vs = np.linspace(0.0, src_h - 1, height)
    # keep the last row/column inside the strict sampling domain
    us = np.minimum(us, np.nextafter(src_w - 1, 0))
    vs = np.minimum(vs, np.nextafter(src_h - 1, 0))
    uu, vv = np.meshgrid(us, vs)
    sample = bilinear_sample(np.where(validity, values, 0.0), np.stack([uu, vv], axis=-1), validity)
    return np.where(sample.valid, sample.values, np.nan), sample.valid
