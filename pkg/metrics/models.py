"""
Pydantic Models for Metrics

Evaluation reports for depth, odometry and point-cloud consistency, and the
similarity transform produced by trajectory alignment.
"""

from typing import Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class DepthEvalReport(BaseModel):
    """Standard depth error and accuracy statistics."""
    abs_rel: float = Field(ge=0.0)
    sq_rel: float = Field(ge=0.0)
    rms: float = Field(ge=0.0)
    rms_log: float = Field(ge=0.0)
    log10: float = Field(ge=0.0)
    delta1: float = Field(ge=0.0, le=1.0)
    delta2: float = Field(ge=0.0, le=1.0)
    delta3: float = Field(ge=0.0, le=1.0)
    n_valid: int = Field(ge=1)
    scale: float = Field(gt=0.0, description="Median ratio applied to the prediction")

    @model_validator(mode="after")
    def _ordered_deltas(self) -> "DepthEvalReport":
        if not self.delta1 <= self.delta2 <= self.delta3:
            raise ValueError("accuracies must satisfy delta1 <= delta2 <= delta3")
        return self

    def as_row(self) -> Dict[str, float]:
        return {
            "AbsRel": self.abs_rel, "SqRel": self.sq_rel, "RMS": self.rms, "RMSlog": self.rms_log,
            "Log10": self.log10, "delta1": self.delta1, "delta2": self.delta2, "delta3": self.delta3,
            "n_valid": self.n_valid, "scale": self.scale,
        }


class Sim3(BaseModel):
    """x -> scale · R x + t."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    rotation: np.ndarray
    translation: np.ndarray
    scale: float = Field(default=1.0, gt=0.0)

    @field_validator("rotation", mode="before")
    @classmethod
    def _rotation(cls, value) -> np.ndarray:
        rotation = np.array(value, dtype=np.float64)
        if rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rotation.shape}")
        return rotation

    @field_validator("translation", mode="before")
    @classmethod
    def _translation(cls, value) -> np.ndarray:
        return np.array(value, dtype=np.float64).reshape(3)

    @classmethod
    def identity(cls) -> "Sim3":
        return cls(rotation=np.eye(3), translation=np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform (..., 3) points."""
        return self.scale * (np.asarray(points) @ self.rotation.T) + self.translation

    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.scale * self.rotation
        T[:3, 3] = self.translation
        return T


class OdomEvalReport(BaseModel):
    """Trajectory accuracy after alignment."""
    ate_rmse: float = Field(ge=0.0)
    t_err: Optional[float] = Field(default=None, ge=0.0, description="KITTI translation error in %")
    r_err: Optional[float] = Field(default=None, ge=0.0, description="KITTI rotation error in deg/100m")
    alignment: Sim3
    dof: int

    def as_row(self) -> Dict[str, float]:
        row = {"ATE": self.ate_rmse, "dof": self.dof, "scale": self.alignment.scale}
        if self.t_err is not None:
            row["t_err"] = self.t_err
            row["r_err"] = self.r_err
        return row


class ConsistencyReport(BaseModel):
    """Overlap between two point clouds under a distance threshold."""
    fitness: float = Field(ge=0.0, le=1.0)
    rmse: float = Field(ge=0.0, description="RMSE over inlier correspondences")
    n_corr: int = Field(ge=0)
    n_target: int = Field(ge=1)
    threshold: float = Field(gt=0.0)

    @model_validator(mode="after")
    def _fitness_ratio(self) -> "ConsistencyReport":
        if not np.isclose(self.fitness, self.n_corr / self.n_target, rtol=0.0, atol=1e-12):
            raise ValueError("fitness must equal n_corr / n_target")
        return self

    def as_row(self) -> Dict[str, float]:
        return {"Fitness": self.fitness, "RMSE": self.rmse, "Corr": self.n_corr, "threshold": self.threshold}
