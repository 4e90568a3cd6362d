"""
Photometric Loss

Per-pixel blend of the channel-averaged L1 difference and the windowed
dissimilarity (1 - SSIM)/2 (or NCC), averaged over the valid pixels V.

The λ·L1 term is evaluated at every pixel of V. The (1 - λ) window term only
exists where the whole 3 x 3 window lies inside the image and inside V (the
window support); the remaining pixels of V carry the λ·L1 term alone.
"""

import logging
from typing import NamedTuple, Optional

import numpy as np

from geometry.models import ImageGrid
from losses.models import LossWeights
from losses.similarity import similarity_terms, window_min, window_scatter
from utils.errors import ConfigurationError, NoOverlapError

logger = logging.getLogger(__name__)


class PhotometricResult(NamedTuple):
    loss: float
    per_pixel: np.ndarray  # H x W, zero outside V
    support: np.ndarray    # H x W bool, pixels carrying the window term


def photometric_support(valid: np.ndarray) -> np.ndarray:
    """Pixels of V whose 3 x 3 window is entirely inside the image and V."""
    support = np.zeros_like(valid, dtype=bool)
    if valid.shape[0] >= 3 and valid.shape[1] >= 3:
        support[1:-1, 1:-1] = window_min(valid)
    return support


def l1_map(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Channel-averaged absolute difference."""
    return np.abs(x - y).mean(axis=2)


def photometric_map(I_a: np.ndarray, I_warped: np.ndarray, valid: np.ndarray,
                    weights: LossWeights, similarity: str = "ssim") -> np.ndarray:
    H, W = valid.shape
    support = photometric_support(valid)
    per_pixel = weights.lam * l1_map(I_a, I_warped)
    if weights.lam < 1.0 and support.any():
        terms = similarity_terms(I_a, I_warped, similarity, weights.c1, weights.c2)
        dissimilarity = np.zeros((H, W))
        dissimilarity[1:-1, 1:-1] = 0.5 * (1.0 - terms.similarity.mean(axis=2))
        per_pixel = per_pixel + (1.0 - weights.lam) * np.where(support, dissimilarity, 0.0)
    return np.where(valid, per_pixel, 0.0)


def photometric_loss(I_a: ImageGrid, I_warped: ImageGrid, valid: np.ndarray,
                     weights: Optional[LossWeights] = None, similarity: str = "ssim") -> PhotometricResult:
    """
    Photometric loss between the reference image and its synthesis.

    Args:
        I_a: Reference image
        I_warped: Image synthesized from the source view
        valid: H x W validity mask V
        weights: Loss weights (λ, C1, C2 are used)
        similarity: "ssim" or "ncc"

    Returns:
        PhotometricResult(loss, per_pixel, support)

    Raises:
        NoOverlapError: If V is empty
    """
    weights = weights or LossWeights.from_config()
    if I_a.values.shape != I_warped.values.shape or I_a.shape != valid.shape:
        raise ConfigurationError("photometric_loss inputs must share dimensions")
    valid = np.asarray(valid, dtype=bool)
    if not valid.any():
        raise NoOverlapError("photometric loss has no valid pixels")
    per_pixel = photometric_map(I_a.values, I_warped.values, valid, weights, similarity)
    return PhotometricResult(float(per_pixel[valid].mean()), per_pixel, photometric_support(valid))


def photometric_gradient(I_a: np.ndarray, I_warped: np.ndarray, pixel_weights: np.ndarray,
                         valid: np.ndarray, weights: LossWeights, similarity: str = "ssim") -> np.ndarray:
    """
    Gradient of sum_p pixel_weights(p) * photometric(p) w.r.t. the synthesized image.

    pixel_weights must vanish outside V; the window term only contributes on
    the window support of V.

    Returns:
        H x W x C array
    """
    H, W, C = I_warped.shape
    pixel_weights = np.where(valid, pixel_weights, 0.0)
    grad = (pixel_weights * weights.lam / C)[..., None] * np.sign(I_warped - I_a)
    support = photometric_support(valid)
    if weights.lam < 1.0 and support.any():
        terms = similarity_terms(I_a, I_warped, similarity, weights.c1, weights.c2)
        window_weights = np.where(support, pixel_weights, 0.0)
        coef = (-(1.0 - weights.lam) / (2.0 * C)) * window_weights[1:-1, 1:-1, None]
        grad = grad + window_scatter(coef * terms.alpha, H, W)
        grad = grad + I_a * window_scatter(coef * terms.beta, H, W)
        grad = grad + I_warped * window_scatter(coef * terms.gamma, H, W)
    return grad
