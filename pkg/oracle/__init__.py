"""
Oracle package for synthetic ground truth.

This package provides:
- Scene and sequence models (planes, moving patches, camera trajectories)
- An analytic ray-plane renderer with view-consistent procedural textures
- Sequence builders and the plain-text scene config parser
"""

from . import models
from . import renderer
from . import sequences
from . import scene_config

__all__ = ["models", "renderer", "sequences", "scene_config"]
