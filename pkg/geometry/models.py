"""
Pydantic Models for Geometry

Camera intrinsics, rigid poses and the dense per-pixel fields every loss and
tracker consumes. Arrays are numpy (float64, validity as bool) and checked on
construction.
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ORTHONORMAL_TOLERANCE = 1e-9


class Intrinsics(BaseModel):
    """Pinhole camera parameters in pixels."""
    model_config = ConfigDict(frozen=True)

    fx: float = Field(gt=0.0, description="Focal length along x in pixels")
    fy: float = Field(gt=0.0, description="Focal length along y in pixels")
    cx: float = Field(ge=0.0, description="Principal point x in pixels")
    cy: float = Field(ge=0.0, description="Principal point y in pixels")
    width: int = Field(gt=0)
    height: int = Field(gt=0)

    @model_validator(mode="after")
    def _principal_point_inside(self) -> "Intrinsics":
        if not self.cx < self.width:
            raise ValueError(f"cx={self.cx} must be < width={self.width}")
        if not self.cy < self.height:
            raise ValueError(f"cy={self.cy} must be < height={self.height}")
        return self

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    def scaled(self, width: int, height: int) -> "Intrinsics":
        """Intrinsics for the same camera resampled to width x height."""
        sx = width / self.width
        sy = height / self.height
        return Intrinsics(fx=self.fx * sx, fy=self.fy * sy, cx=self.cx * sx, cy=self.cy * sy,
                          width=width, height=height)


class PoseSE3(BaseModel):
    """Rigid transform p' = R p + t."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rotation: np.ndarray
    translation: np.ndarray

    @field_validator("rotation", mode="before")
    @classmethod
    def _rotation_shape(cls, value) -> np.ndarray:
        rotation = np.array(value, dtype=np.float64)
        if rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rotation.shape}")
        return rotation

    @field_validator("translation", mode="before")
    @classmethod
    def _translation_shape(cls, value) -> np.ndarray:
        translation = np.array(value, dtype=np.float64).reshape(-1)
        if translation.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got {translation.shape}")
        return translation

    @model_validator(mode="after")
    def _orthonormal(self) -> "PoseSE3":
        R = self.rotation
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(self.translation)):
            raise ValueError("pose contains non-finite values")
        drift = np.max(np.abs(R @ R.T - np.eye(3)))
        if drift > ORTHONORMAL_TOLERANCE:
            raise ValueError(f"rotation is not orthonormal (max |RR^T - I| = {drift:.3e})")
        if np.linalg.det(R) <= 0.0:
            raise ValueError("rotation must have det = +1")
        return self

    @classmethod
    def identity(cls) -> "PoseSE3":
        return cls(rotation=np.eye(3), translation=np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> "PoseSE3":
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(rotation=matrix[:3, :3], translation=matrix[:3, 3])

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def compose(self, other: "PoseSE3") -> "PoseSE3":
        """self ∘ other: apply other first, then self."""
        return PoseSE3(rotation=self.rotation @ other.rotation,
                       translation=self.rotation @ other.translation + self.translation)

    def __matmul__(self, other: "PoseSE3") -> "PoseSE3":
        return self.compose(other)

    def inverse(self) -> "PoseSE3":
        Rt = self.rotation.T
        return PoseSE3(rotation=Rt, translation=-Rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (..., 3) array of points."""
        return points @ self.rotation.T + self.translation

    def scaled(self, s: float) -> "PoseSE3":
        """Same rotation, translation multiplied by s."""
        return PoseSE3(rotation=self.rotation, translation=self.translation * s)

    def rotation_angle(self) -> float:
        """Rotation angle in radians."""
        cos_angle = np.clip(0.5 * (np.trace(self.rotation) - 1.0), -1.0, 1.0)
        return float(np.arccos(cos_angle))


class DepthMap(BaseModel):
    """H x W positive depths with a validity mask."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray
    validity: Optional[np.ndarray] = None

    @field_validator("values", mode="before")
    @classmethod
    def _values_2d(cls, value) -> np.ndarray:
        values = np.array(value, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"depth values must be H x W, got shape {values.shape}")
        return values

    @model_validator(mode="after")
    def _validity(self) -> "DepthMap":
        finite_positive = np.isfinite(self.values) & (self.values > 0.0)
        if self.validity is None:
            validity = finite_positive
        else:
            validity = np.array(self.validity, dtype=bool)
            if validity.shape != self.values.shape:
                raise ValueError("validity shape must match depth values")
            if np.any(validity & ~finite_positive):
                raise ValueError("valid depth pixels must be finite and positive")
        self.validity = validity
        return self

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def scaled(self, s: float) -> "DepthMap":
        return DepthMap(values=self.values * s, validity=self.validity)

    def median(self) -> float:
        return float(np.median(self.values[self.validity]))


class ImageGrid(BaseModel):
    """H x W x C intensities in [0, 1], C in {1, 3}."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _values_hwc(cls, value) -> np.ndarray:
        values = np.array(value, dtype=np.float64)
        if values.ndim == 2:
            values = values[:, :, None]
        if values.ndim != 3 or values.shape[2] not in (1, 3):
            raise ValueError(f"image must be H x W x C with C in (1, 3), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("image contains non-finite values")
        return values

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape[:2]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


class PointCloud(BaseModel):
    """N x 3 points with optional N x 3 colors."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    points: np.ndarray
    colors: Optional[np.ndarray] = None

    @field_validator("points", mode="before")
    @classmethod
    def _points_n3(cls, value) -> np.ndarray:
        points = np.array(value, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(points)):
            raise ValueError("point coordinates must be finite")
        return points

    @model_validator(mode="after")
    def _colors_match(self) -> "PointCloud":
        if self.colors is not None:
            colors = np.array(self.colors, dtype=np.float64).reshape(-1, 3)
            if colors.shape[0] != self.points.shape[0]:
                raise ValueError("colors must have one row per point")
            self.colors = colors
        return self

    def __len__(self) -> int:
        return self.points.shape[0]
