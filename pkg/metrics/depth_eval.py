"""
Depth Evaluation

Median-scaled depth error statistics over pixels with valid ground truth up
to a depth cap.
"""

import logging
from typing import Optional

import numpy as np

from geometry.models import DepthMap
from metrics.config_loader import load_config
from metrics.models import DepthEvalReport
from utils.errors import ConfigurationError, EvaluationError

logger = logging.getLogger(__name__)

_config = load_config()
MIN_EVAL_DEPTH = float(_config["depth"]["min_eval"])
DEFAULT_CAP = float(_config["depth"]["default_cap"])


def depth_metrics(pred: DepthMap, gt: DepthMap, cap: Optional[float] = None,
                  median_scaling: bool = True, min_eval: float = MIN_EVAL_DEPTH) -> DepthEvalReport:
    """
    Evaluate a predicted depth map against ground truth.

    Pixels count when gt is valid and <= cap and pred is valid. The prediction
    is multiplied by median(gt)/median(pred) (when median_scaling) and clamped
    to [min_eval, cap] before the statistics are computed.

    Args:
        pred: Predicted depth
        gt: Ground-truth depth, same shape
        cap: Maximum evaluated depth (config default_cap if None)
        median_scaling: Apply the median ratio to pred
        min_eval: Floor applied to pred before log-based metrics

    Returns:
        DepthEvalReport

    Raises:
        ConfigurationError: If the shapes differ or cap <= 0
        EvaluationError: If no pixel qualifies
    """
    cap = DEFAULT_CAP if cap is None else float(cap)
    if cap <= 0.0:
        raise ConfigurationError(f"depth cap must be positive, got {cap}")
    if pred.shape != gt.shape:
        raise ConfigurationError(f"prediction {pred.shape} and ground truth {gt.shape} differ in shape")

    mask = gt.validity & (gt.values <= cap) & pred.validity
    n_valid = int(mask.sum())
    if n_valid == 0:
        raise EvaluationError(f"no pixel has valid ground truth in (0, {cap}]")

    g = gt.values[mask]
    p = pred.values[mask]
    scale = float(np.median(g) / np.median(p)) if median_scaling else 1.0
    p = np.clip(p * scale, min_eval, cap)

    thresh = np.maximum(g / p, p / g)
    diff = g - p
    report = DepthEvalReport(
        abs_rel=float(np.mean(np.abs(diff) / g)),
        sq_rel=float(np.mean(diff * diff / g)),
        rms=float(np.sqrt(np.mean(diff * diff))),
        rms_log=float(np.sqrt(np.mean((np.log(g) - np.log(p)) ** 2))),
        log10=float(np.mean(np.abs(np.log10(g) - np.log10(p)))),
        delta1=float(np.mean(thresh < 1.25)),
        delta2=float(np.mean(thresh < 1.25 ** 2)),
        delta3=float(np.mean(thresh < 1.25 ** 3)),
        n_valid=n_valid,
        scale=scale,
    )
    logger.debug(f"Depth metrics over {n_valid} pixels (scale {scale:.4f}): AbsRel={report.abs_rel:.4f}")
    return report
