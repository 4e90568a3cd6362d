"""
Auto-Mask and Masked Photometric Loss

The auto-mask keeps a pixel only when the warped source explains the
reference strictly better than the unwarped source does. The masked
photometric loss weights each surviving pixel by the self-discovered mask.
"""

import logging

import numpy as np

from geometry.models import ImageGrid
from losses.photometric import l1_map
from utils.errors import ConfigurationError, FullyMaskedError

logger = logging.getLogger(__name__)


def auto_mask(I_a: ImageGrid, I_b: ImageGrid, I_warped: ImageGrid, valid: np.ndarray) -> np.ndarray:
    """M_a(p) = 1 iff ||I_a(p) - I'_a(p)||_1 < ||I_a(p) - I_b(p)||_1, restricted to V."""
    if not (I_a.values.shape == I_b.values.shape == I_warped.values.shape):
        raise ConfigurationError("auto_mask images must share dimensions")
    warped_error = l1_map(I_a.values, I_warped.values)
    identity_error = l1_map(I_a.values, I_b.values)
    return valid & (warped_error < identity_error)


def masked_photometric_loss(per_pixel: np.ndarray, self_mask: np.ndarray,
                            valid: np.ndarray, auto: np.ndarray) -> float:
    """Mean of M_s · L_P over {p in V : M_a(p) = 1}."""
    keep = valid & auto
    if not keep.any():
        raise FullyMaskedError("no pixel survives the validity and auto masks")
    return float((self_mask * per_pixel)[keep].mean())
