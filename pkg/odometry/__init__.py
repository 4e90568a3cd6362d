"""
Odometry package for pseudo-RGBD tracking.

This package provides:
- Trajectory, Correspondence and TrackingOptions models
- 2D and depth-augmented 3D reprojection errors
- Dense Gauss-Newton frame-to-frame tracking and trajectory accumulation
"""

from . import models
from . import reprojection
from . import tracker

__all__ = ["models", "reprojection", "tracker"]
