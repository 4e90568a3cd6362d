"""
Pydantic Models for the Optimizer

Training configuration, the mutable training state (per-frame depth logits and
per-pair relative poses) and the per-step loss record.
"""

from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from geometry.depth_param import logit_to_depth
from geometry.lie import se3_log
from geometry.models import DepthMap, PoseSE3
from losses.models import LossOptions, LossWeights
from optimizer.config_loader import get_training_config


class TrainConfig(BaseModel):
    """Hyper-parameters of one optimize_snippet run."""
    weights: LossWeights = Field(default_factory=LossWeights.from_config)
    options: LossOptions = Field(default_factory=LossOptions.from_config)
    step_size: float = Field(default=0.01, gt=0.0, description="Gradient step on depth logits (per-pixel normalised)")
    pose_step_size: float = Field(default=0.0005, gt=0.0, description="Gradient step on pose twists in joint mode")
    iterations: int = Field(default=400, ge=1)
    seed: int = 0
    snippet_length: int = Field(default=3, ge=2)
    bidirectional: bool = True
    pose_mode: Literal["frozen", "joint"] = "frozen"
    init_depth: float = Field(default=5.0, gt=0.1, lt=100.0, description="Constant depth used when no initial depths are given")
    init_noise: float = Field(default=0.0, ge=0.0, description="Std of seeded Gaussian noise added to the initial logits")
    log_every: int = Field(default=50, ge=1)

    @classmethod
    def from_config(cls, config: Optional[Dict] = None, **overrides) -> "TrainConfig":
        """Build from the training section of optimizer/config.json, then apply overrides."""
        values = dict(config if config is not None else get_training_config())
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


class LossRecord(BaseModel):
    """Loss scalars of one step, summed over all evaluated pairs."""
    step: int
    total: float
    LP: float
    LS: float
    LG: float


class TrainState(BaseModel):
    """Per-frame logits, per-adjacent-pair relative poses and the loss history."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    logits: List[np.ndarray]
    poses: List[PoseSE3] = Field(description="P_{i,i+1}: frame i into frame i+1")
    step: int = 0
    history: List[LossRecord] = Field(default_factory=list)

    def depths(self) -> List[DepthMap]:
        return [DepthMap(values=logit_to_depth(x)[0]) for x in self.logits]

    @property
    def twists(self) -> List[np.ndarray]:
        return [se3_log(pose) for pose in self.poses]

    def smoothed_history(self) -> List[float]:
        """Running minimum of the total loss."""
        totals = np.array([record.total for record in self.history])
        return np.minimum.accumulate(totals).tolist() if totals.size else []

    def identical_to(self, other: "TrainState") -> bool:
        """Bit-wise equality of logits, poses and history."""
        return (
            len(self.logits) == len(other.logits)
            and all(np.array_equal(x, y) for x, y in zip(self.logits, other.logits))
            and all(np.array_equal(p.matrix(), q.matrix()) for p, q in zip(self.poses, other.poses))
            and [r.model_dump() for r in self.history] == [r.model_dump() for r in other.history]
        )


class ProbeReport(BaseModel):
    """Per-frame median depth ratios against ground truth."""
    ratios: List[float]
    spread: float = Field(description="max ratio / min ratio")
