"""
Pydantic Models for Odometry

Trajectories, reprojection correspondences, tracking options and the result
of a single pose refinement.
"""

from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from geometry.models import PoseSE3
from odometry.config_loader import get_tracking_config


class TrajectoryEntry(BaseModel):
    index: int = Field(ge=0)
    pose: PoseSE3 = Field(description="World-from-camera pose")


class Trajectory(BaseModel):
    """Frame-indexed world-from-camera poses, indices strictly increasing."""
    entries: List[TrajectoryEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def _increasing(self) -> "Trajectory":
        indices = [entry.index for entry in self.entries]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError(f"trajectory indices must be strictly increasing, got {indices}")
        return self

    @classmethod
    def from_poses(cls, poses: Sequence[PoseSE3], start: int = 0) -> "Trajectory":
        return cls(entries=[TrajectoryEntry(index=start + k, pose=pose) for k, pose in enumerate(poses)])

    @classmethod
    def from_relatives(cls, relatives: Sequence[PoseSE3], origin: Optional[PoseSE3] = None) -> "Trajectory":
        """T_0 = origin (identity by default), T_k = T_{k-1} · relatives[k-1]."""
        pose = origin or PoseSE3.identity()
        poses = [pose]
        for motion in relatives:
            pose = pose @ motion
            poses.append(pose)
        return cls.from_poses(poses)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def poses(self) -> List[PoseSE3]:
        return [entry.pose for entry in self.entries]

    @property
    def indices(self) -> List[int]:
        return [entry.index for entry in self.entries]

    def positions(self) -> np.ndarray:
        """N x 3 camera centers."""
        return np.array([entry.pose.translation for entry in self.entries]).reshape(-1, 3)

    def relative_poses(self) -> List[PoseSE3]:
        """T_{k-1}^-1 · T_k for consecutive entries."""
        poses = self.poses
        return [a.inverse() @ b for a, b in zip(poses, poses[1:])]

    def is_anchored(self, tolerance: float = 0.0) -> bool:
        """First pose equals identity."""
        if not self.entries:
            return False
        return bool(np.max(np.abs(self.entries[0].pose.matrix() - np.eye(4))) <= tolerance)

    def append(self, index: int, pose: PoseSE3) -> "Trajectory":
        if self.entries and index <= self.entries[-1].index:
            raise ValueError(f"index {index} does not follow {self.entries[-1].index}")
        self.entries.append(TrajectoryEntry(index=index, pose=pose))
        return self


class Correspondence(BaseModel):
    """A point (u, v, disparity) and its reprojection (u', v', disparity')."""
    p: Tuple[float, float, float]
    p_prime: Tuple[float, float, float]

    @field_validator("p", "p_prime")
    @classmethod
    def _positive_disparity(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if not value[2] > 0.0:
            raise ValueError(f"disparity must be positive, got {value[2]}")
        return value

    @classmethod
    def from_depths(cls, u: float, v: float, depth: float,
                    u_prime: float, v_prime: float, depth_prime: float) -> "Correspondence":
        """Build from depths; disparity = 1 / depth."""
        return cls(p=(u, v, 1.0 / depth), p_prime=(u_prime, v_prime, 1.0 / depth_prime))


class TrackingOptions(BaseModel):
    """Frame-to-frame tracking parameters."""
    model_config = ConfigDict(frozen=True)

    init_mode: Literal["motion_model", "external"] = "motion_model"
    max_iterations: int = Field(default=50, ge=1)
    convergence_threshold: float = Field(default=1e-8, gt=0.0, description="Stop when the twist update norm falls below")
    huber_delta: float = Field(default=0.1, gt=0.0)
    gamma: float = Field(default=0.5, ge=0.0, description="Weight of the depth-consistency residuals")
    max_halvings: int = Field(default=10, ge=0)
    min_coverage: float = Field(default=0.10, ge=0.0, le=1.0, description="Tracking lost below this valid fraction")
    max_photometric_mean: float = Field(default=0.5, gt=0.0, description="Tracking lost above this mean |residual|")
    min_depth_coverage: float = Field(default=0.20, ge=0.0, le=1.0)
    use_self_mask: bool = Field(default=True, description="Weight photometric residuals by 1 - D_diff")
    use_auto_mask: bool = Field(default=True, description="Re-solve without pixels the unwarped frame explains better")

    @classmethod
    def from_config(cls, config: Optional[Dict] = None, **overrides) -> "TrackingOptions":
        values = dict(config if config is not None else get_tracking_config())
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


class PoseRefinement(BaseModel):
    """Outcome of Gauss-Newton refinement of P_ab (previous frame into current frame)."""
    P_ab: PoseSE3
    iterations: int
    converged: bool
    stalled: bool = Field(default=False, description="No step-halving lowered the cost before convergence")
    coverage: float = Field(description="Fraction of pixels with a valid warp")
    cost: float
    photometric_mean: float

    @property
    def motion(self) -> PoseSE3:
        """Relative camera motion T_prev^-1 · T_cur."""
        return self.P_ab.inverse()
