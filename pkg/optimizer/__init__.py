"""
Optimizer package for desk-scale depth training.

This package provides:
- TrainConfig / TrainState models and optimizer/config.json defaults
- optimize_snippet: fixed-step gradient descent over depth logits and poses
- consistency_probe: per-frame median scale ratios against ground truth
"""

from . import models
from . import trainer

__all__ = ["models", "trainer"]
