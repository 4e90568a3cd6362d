"""
Edge-Aware Smoothness Loss

Forward differences of depth, each weighted by exp(-|∇I|) with the image
gradient magnitude averaged over channels, squared and summed over both
directions, then normalised by the pixel count.
"""

from typing import Tuple

import numpy as np

from geometry.models import DepthMap, ImageGrid
from utils.errors import ConfigurationError


def _edge_weights(image: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    grad_x = np.abs(image[:, 1:] - image[:, :-1]).mean(axis=2)
    grad_y = np.abs(image[1:, :] - image[:-1, :]).mean(axis=2)
    return np.exp(-grad_x), np.exp(-grad_y)


def smoothness_terms(D_a: DepthMap, I_a: ImageGrid) -> Tuple[float, np.ndarray]:
    """
    L_S and its gradient w.r.t. the depth pixels.

    Differences touching an invalid depth pixel are skipped.
    """
    if D_a.shape != I_a.shape:
        raise ConfigurationError(f"depth {D_a.shape} and image {I_a.shape} dimensions differ")
    H, W = D_a.shape
    n = float(H * W)
    depth = np.where(D_a.validity, D_a.values, 0.0)
    valid = D_a.validity
    w_x, w_y = _edge_weights(I_a.values)

    e_x = np.where(valid[:, 1:] & valid[:, :-1], w_x * (depth[:, 1:] - depth[:, :-1]), 0.0)
    e_y = np.where(valid[1:, :] & valid[:-1, :], w_y * (depth[1:, :] - depth[:-1, :]), 0.0)
    loss = (np.sum(e_x * e_x) + np.sum(e_y * e_y)) / n

    g_x = 2.0 * w_x * e_x / n
    g_y = 2.0 * w_y * e_y / n
    grad = np.zeros((H, W))
    grad[:, 1:] += g_x
    grad[:, :-1] -= g_x
    grad[1:, :] += g_y
    grad[:-1, :] -= g_y
    return float(loss), grad


def smoothness_loss(D_a: DepthMap, I_a: ImageGrid) -> float:
    return smoothness_terms(D_a, I_a)[0]
