"""
Bounded Depth Parameterization

A sigmoid output x in (0, 1) maps to depth D = 1 / (a·x + b). a and b follow
from the range endpoints: x -> 0 gives d_max, x -> 1 gives d_min.
"""

from typing import Tuple, Union

import numpy as np
from scipy.special import expit

from geometry.config_loader import load_config
from utils.errors import DomainError

ArrayLike = Union[float, np.ndarray]

_config = load_config()
MIN_DEPTH = float(_config["depth_range"]["min_depth"])
MAX_DEPTH = float(_config["depth_range"]["max_depth"])


def depth_coefficients(min_depth: float = MIN_DEPTH, max_depth: float = MAX_DEPTH) -> Tuple[float, float]:
    """(a, b) with b = 1/d_max and a = 1/d_min - 1/d_max."""
    b = 1.0 / max_depth
    a = 1.0 / min_depth - b
    return a, b


def sigmoid_to_depth(x: ArrayLike, min_depth: float = MIN_DEPTH, max_depth: float = MAX_DEPTH) -> ArrayLike:
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(~(x_arr > 0.0)) or np.any(~(x_arr < 1.0)):
        raise DomainError("sigmoid_to_depth expects values strictly inside (0, 1)")
    a, b = depth_coefficients(min_depth, max_depth)
    depth = 1.0 / (a * x_arr + b)
    return float(depth) if np.ndim(x) == 0 else depth


def depth_to_sigmoid(depth: ArrayLike, min_depth: float = MIN_DEPTH, max_depth: float = MAX_DEPTH) -> ArrayLike:
    depth_arr = np.asarray(depth, dtype=np.float64)
    if np.any(~(depth_arr > min_depth)) or np.any(~(depth_arr < max_depth)):
        raise DomainError(f"depth must lie strictly inside ({min_depth}, {max_depth})")
    a, b = depth_coefficients(min_depth, max_depth)
    x = (1.0 / depth_arr - b) / a
    return float(x) if np.ndim(depth) == 0 else x


def logit_to_depth(logit: np.ndarray, min_depth: float = MIN_DEPTH, max_depth: float = MAX_DEPTH) -> Tuple[np.ndarray, np.ndarray]:
    """
    Depth and dDepth/dlogit for unconstrained logits.

    Returns:
        Tuple of (depth, derivative); depth stays within [min_depth, max_depth].
    """
    a, b = depth_coefficients(min_depth, max_depth)
    x = expit(logit)
    depth = 1.0 / (a * x + b)
    derivative = -a * depth * depth * x * (1.0 - x)
    return depth, derivative


def depth_to_logit(depth: np.ndarray, min_depth: float = MIN_DEPTH, max_depth: float = MAX_DEPTH) -> np.ndarray:
    x = np.asarray(depth_to_sigmoid(depth, min_depth, max_depth))
    return np.log(x) - np.log1p(-x)
