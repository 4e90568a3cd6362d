"""
Geometry package for multi-view depth and pose.

This package provides:
- Models: Intrinsics, PoseSE3, DepthMap, ImageGrid, PointCloud
- Camera: back-projection, rigid transformation, projection
- Lie: SE(3) exponential / logarithm, composition, inverse
- Sampling: differentiable bilinear sampling and its adjoint
- Warping: inverse image warping and cross-view depth synthesis
- Depth parameterization: bounded sigmoid-to-depth mapping
"""

from . import models
from . import lie
from . import camera
from . import sampling
from . import warping
from . import depth_param

__all__ = [
    'models',
    'lie',
    'camera',
    'sampling',
    'warping',
    'depth_param'
]
