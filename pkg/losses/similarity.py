"""
Windowed Image Similarity

SSIM and NCC over 3 x 3 patches. Statistics use "valid" windows only, so an
H x W image yields (H-2) x (W-2) similarities, one per interior pixel.

Besides the similarity itself every routine returns coefficients (alpha,
beta, gamma) per window such that for any pixel k of window q

    d sim_q / d y_k = alpha_q + beta_q * x_k + gamma_q * y_k

where x is the reference image and y the synthesized one. Gradients of a
weighted sum of similarities then reduce to three window scatters.
"""

import logging
from typing import NamedTuple

import numpy as np

from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

WINDOW = 3
WINDOW_SIZE = WINDOW * WINDOW


class SimilarityTerms(NamedTuple):
    similarity: np.ndarray  # (H-2) x (W-2) x C
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray


def _as_hwc(values: np.ndarray) -> np.ndarray:
    return values[:, :, None] if values.ndim == 2 else values


def box_mean(x: np.ndarray) -> np.ndarray:
    """Mean over every 3 x 3 window fully inside the image."""
    H, W = x.shape[:2]
    acc = np.zeros((H - 2, W - 2) + x.shape[2:])
    for dy in range(WINDOW):
        for dx in range(WINDOW):
            acc += x[dy:dy + H - 2, dx:dx + W - 2]
    return acc / WINDOW_SIZE


def window_scatter(m: np.ndarray, height: int, width: int) -> np.ndarray:
    """Adjoint of the window sum: add each window value to its 9 pixels."""
    out = np.zeros((height, width) + m.shape[2:])
    for dy in range(WINDOW):
        for dx in range(WINDOW):
            out[dy:dy + height - 2, dx:dx + width - 2] += m
    return out


def window_min(mask: np.ndarray) -> np.ndarray:
    """True where the whole 3 x 3 window is True (interior pixels only)."""
    H, W = mask.shape
    acc = np.ones((H - 2, W - 2), dtype=bool)
    for dy in range(WINDOW):
        for dx in range(WINDOW):
            acc &= mask[dy:dy + H - 2, dx:dx + W - 2]
    return acc


def _moments(x: np.ndarray, y: np.ndarray):
    mu_x = box_mean(x)
    mu_y = box_mean(y)
    sigma_x = box_mean(x * x) - mu_x * mu_x
    sigma_y = box_mean(y * y) - mu_y * mu_y
    sigma_xy = box_mean(x * y) - mu_x * mu_y
    return mu_x, mu_y, sigma_x, sigma_y, sigma_xy


def ssim_terms(x: np.ndarray, y: np.ndarray, c1: float, c2: float) -> SimilarityTerms:
    x, y = _as_hwc(x), _as_hwc(y)
    mu_x, mu_y, sigma_x, sigma_y, sigma_xy = _moments(x, y)
    A = 2.0 * mu_x * mu_y + c1
    B = 2.0 * sigma_xy + c2
    C = mu_x * mu_x + mu_y * mu_y + c1
    D = sigma_x + sigma_y + c2
    ssim = A * B / (C * D)
    n = WINDOW_SIZE
    beta = 2.0 * A / (n * C * D)
    gamma = -2.0 * ssim / (n * D)
    alpha = 2.0 * mu_x * B / (n * C * D) - beta * mu_x - 2.0 * ssim * mu_y / (n * C) - gamma * mu_y
    return SimilarityTerms(ssim, alpha, beta, gamma)


def ncc_terms(x: np.ndarray, y: np.ndarray, c2: float) -> SimilarityTerms:
    """NCC regularised by c = c2/2 on covariance and both variances; stays in [-1, 1]."""
    x, y = _as_hwc(x), _as_hwc(y)
    mu_x, mu_y, sigma_x, sigma_y, sigma_xy = _moments(x, y)
    c = 0.5 * c2
    P = sigma_xy + c
    Q = sigma_x + c
    R = sigma_y + c
    root = np.sqrt(Q * R)
    ncc = P / root
    n = WINDOW_SIZE
    beta = 1.0 / (n * root)
    gamma = -P / (n * R * root)
    alpha = -beta * mu_x - gamma * mu_y
    return SimilarityTerms(ncc, alpha, beta, gamma)


def similarity_terms(x: np.ndarray, y: np.ndarray, kind: str, c1: float, c2: float) -> SimilarityTerms:
    if kind == "ssim":
        return ssim_terms(x, y, c1, c2)
    if kind == "ncc":
        return ncc_terms(x, y, c2)
    raise ConfigurationError(f"Unknown similarity '{kind}'. Must be 'ssim' or 'ncc'")


def ssim_map(I_a, I_warped, c1: float = 0.0001, c2: float = 0.0009) -> np.ndarray:
    """
    Per-pixel SSIM between I_a and I'_a, averaged over channels.

    Args:
        I_a: Reference ImageGrid or H x W [x C] array
        I_warped: Synthesized ImageGrid or array of the same shape
        c1, c2: Stabilising constants

    Returns:
        (H-2) x (W-2) array; entry (i, j) belongs to pixel (i+1, j+1).
    """
    x = getattr(I_a, "values", I_a)
    y = getattr(I_warped, "values", I_warped)
    if x.shape != y.shape:
        raise ConfigurationError(f"image shapes differ: {x.shape} vs {y.shape}")
    return ssim_terms(x, y, c1, c2).similarity.mean(axis=2)
