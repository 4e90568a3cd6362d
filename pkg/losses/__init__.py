"""
Losses package for the scale-consistent depth objective.

This package provides:
- Similarity: SSIM / NCC over 3x3 windows with analytic gradients
- Photometric: blended L1 + structural loss over valid pixels
- Smoothness: edge-aware depth smoothness
- Consistency: depth inconsistency, geometry consistency loss, self-discovered mask
- Masks: auto-mask and masked photometric loss
- Objective: total loss with gradients w.r.t. depths and pose twist
"""

from . import models
from . import similarity
from . import photometric
from . import smoothness
from . import consistency
from . import masks
from . import objective

__all__ = [
    'models',
    'similarity',
    'photometric',
    'smoothness',
    'consistency',
    'masks',
    'objective'
]
