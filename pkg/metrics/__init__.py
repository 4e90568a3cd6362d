"""
Metrics package for depth, trajectory and consistency evaluation.

This package provides:
- Depth metrics with median scaling, depth caps and an evaluation floor
- Similarity alignment, ATE and KITTI relative errors
- Point-cloud fitness / inlier RMSE and the depth-pair consistency protocol
"""

from . import models
from . import depth_eval
from . import trajectory_eval
from . import registration

__all__ = ["models", "depth_eval", "trajectory_eval", "registration"]
