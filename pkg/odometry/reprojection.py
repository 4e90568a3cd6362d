"""
Reprojection Residuals

Pixel reprojection error of a correspondence, optionally extended by the
disparity difference so that depth disagreement is penalised alongside the
2D offset.
"""

from typing import Literal

import numpy as np

from odometry.models import Correspondence
from utils.errors import ConfigurationError

Mode = Literal["2D", "3D"]


def _check_mode(mode: str) -> None:
    if mode not in ("2D", "3D"):
        raise ConfigurationError(f"reprojection mode must be '2D' or '3D', got '{mode}'")


def reprojection_error(c: Correspondence, mode: Mode = "2D") -> float:
    """
    E_2D = sqrt(du² + dv²); E_3D additionally includes the disparity difference.

    Disparities enter in raw inverse-depth units.
    """
    _check_mode(mode)
    du = c.p[0] - c.p_prime[0]
    dv = c.p[1] - c.p_prime[1]
    squared = du * du + dv * dv
    if mode == "3D":
        dd = c.p[2] - c.p_prime[2]
        squared += dd * dd
    return float(np.sqrt(squared))


def reprojection_errors(p: np.ndarray, p_prime: np.ndarray, mode: Mode = "2D") -> np.ndarray:
    """Vectorised reprojection_error for N x 3 arrays of (u, v, disparity)."""
    _check_mode(mode)
    p = np.asarray(p, dtype=np.float64).reshape(-1, 3)
    p_prime = np.asarray(p_prime, dtype=np.float64).reshape(-1, 3)
    if p.shape != p_prime.shape:
        raise ConfigurationError(f"correspondence arrays differ in shape: {p.shape} vs {p_prime.shape}")
    delta = p - p_prime
    columns = 2 if mode == "2D" else 3
    return np.sqrt(np.sum(delta[:, :columns] ** 2, axis=1))
