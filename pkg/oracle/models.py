"""
Pydantic Models for the Synthetic Scene Oracle

Planes with procedural textures, independently moving patches and camera
sequences. Everything the renderer needs to produce exact depth and
view-consistent images.
"""

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from geometry.models import Intrinsics, PoseSE3

MAX_STEP_ROTATION_DEG = 10.0
MIN_SCENE_DEPTH = 0.5
MAX_SCENE_DEPTH = 50.0


def _unit_vector(value) -> np.ndarray:
    vec = np.array(value, dtype=np.float64).reshape(-1)
    if vec.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {vec.shape}")
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise ValueError("normal must be non-zero")
    return vec / norm


class PlaneSpec(BaseModel):
    """Infinite plane n·X = offset in world coordinates."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    normal: np.ndarray
    offset: float
    seed: int = 0

    @field_validator("normal", mode="before")
    @classmethod
    def _normalize(cls, value) -> np.ndarray:
        return _unit_vector(value)


class MovingPatch(BaseModel):
    """
    Fronto-parallel rectangle that moves independently of the scene.

    rect is (u_min, v_min, u_max, v_max) in the image of a camera at the world
    origin; together with depth it fixes the rectangle in 3D at frame 0. At
    frame k the rectangle and its texture are displaced by k · translation.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rect: Tuple[float, float, float, float]
    depth: float = Field(gt=0.0)
    translation: np.ndarray
    seed: int = 1000

    @field_validator("translation", mode="before")
    @classmethod
    def _vector(cls, value) -> np.ndarray:
        vec = np.array(value, dtype=np.float64).reshape(-1)
        if vec.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got shape {vec.shape}")
        return vec

    @model_validator(mode="after")
    def _ordered_rect(self) -> "MovingPatch":
        u_min, v_min, u_max, v_max = self.rect
        if not (u_min < u_max and v_min < v_max):
            raise ValueError(f"rect must satisfy u_min < u_max and v_min < v_max, got {self.rect}")
        return self


class SceneSpec(BaseModel):
    """Static planes, moving patches and an optional fronto-parallel background."""
    planes: List[PlaneSpec] = Field(default_factory=list)
    moving_patches: List[MovingPatch] = Field(default_factory=list)
    background_depth: Optional[float] = Field(default=None, gt=0.0)
    background_seed: int = 7
    texture_frequency: float = Field(default=1.5, gt=0.0, description="Angular frequency of the texture in rad per scene unit")
    noise_sigma: float = Field(default=0.0, ge=0.0, description="Std of additive Gaussian image noise")
    seed: int = 0

    @model_validator(mode="after")
    def _has_surface(self) -> "SceneSpec":
        if not self.planes and self.background_depth is None:
            raise ValueError("scene needs at least one plane or a background depth")
        return self


class SequenceSpec(BaseModel):
    """World-from-camera poses of a camera sequence."""
    intrinsics: Intrinsics
    poses: List[PoseSE3]

    @model_validator(mode="after")
    def _small_steps(self) -> "SequenceSpec":
        if not self.poses:
            raise ValueError("sequence needs at least one pose")
        for k in range(1, len(self.poses)):
            step = self.poses[k - 1].inverse().compose(self.poses[k])
            angle = np.degrees(step.rotation_angle())
            if angle >= MAX_STEP_ROTATION_DEG:
                raise ValueError(f"rotation between frames {k - 1} and {k} is {angle:.2f} deg (limit {MAX_STEP_ROTATION_DEG})")
        return self

    @property
    def n_frames(self) -> int:
        return len(self.poses)

    @property
    def image_size(self) -> Tuple[int, int]:
        return self.intrinsics.width, self.intrinsics.height
