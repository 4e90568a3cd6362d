"""
Pydantic Models for Losses

Loss weights, photometric options, the stop-gradient mask set and the bundle
returned by the full objective.
"""

from typing import Dict, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from losses.config_loader import load_config


class LossWeights(BaseModel):
    """Weights of the total objective and the photometric blend."""
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    alpha: float = Field(default=1.0, ge=0.0, description="Weight of the masked photometric loss")
    beta: float = Field(default=0.1, ge=0.0, description="Weight of the smoothness loss")
    gamma: float = Field(default=0.5, ge=0.0, description="Weight of the geometry consistency loss")
    lam: float = Field(default=0.15, ge=0.0, le=1.0, alias="lambda", description="L1 share of the photometric loss")
    c1: float = Field(default=0.0001, gt=0.0)
    c2: float = Field(default=0.0009, gt=0.0)

    @classmethod
    def from_config(cls, config: Dict = None) -> "LossWeights":
        config = config or load_config()
        return cls(**config.get("loss_weights", {}))


class LossOptions(BaseModel):
    """Switches of the photometric term."""
    model_config = ConfigDict(frozen=True)

    similarity: Literal["ssim", "ncc"] = "ssim"
    use_auto_mask: bool = True
    use_self_mask: bool = True

    @classmethod
    def from_config(cls, config: Dict = None) -> "LossOptions":
        config = config or load_config()
        return cls(**config.get("photometric", {}))


class MaskSet(BaseModel):
    """Validity and the two masks, held fixed when re-evaluating a loss."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    valid: np.ndarray
    self_mask: np.ndarray
    auto_mask: np.ndarray


class TermGradient(BaseModel):
    """Gradient of one scalar w.r.t. both depth maps and the pose twist."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    depth_a: np.ndarray
    depth_b: np.ndarray
    twist: np.ndarray

    def scaled(self, s: float) -> "TermGradient":
        return TermGradient(depth_a=s * self.depth_a, depth_b=s * self.depth_b, twist=s * self.twist)

    def __add__(self, other: "TermGradient") -> "TermGradient":
        return TermGradient(depth_a=self.depth_a + other.depth_a,
                            depth_b=self.depth_b + other.depth_b,
                            twist=self.twist + other.twist)


class LossBundle(BaseModel):
    """Scalars, per-pixel maps and gradients of the objective for one a -> b pair."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    total: float
    photometric: float = Field(description="L_P over V")
    photometric_masked: float = Field(description="L_P^M")
    smoothness: float = Field(description="L_S")
    geometry: float = Field(description="L_G")
    weights: LossWeights

    photometric_map: np.ndarray
    depth_diff: np.ndarray
    self_mask: np.ndarray
    auto_mask: np.ndarray
    valid: np.ndarray
    photometric_support: np.ndarray
    warped: np.ndarray

    grad_depth_a: np.ndarray
    grad_depth_b: np.ndarray
    grad_twist: np.ndarray
    term_gradients: Dict[str, TermGradient]

    @property
    def masks(self) -> MaskSet:
        return MaskSet(valid=self.valid, self_mask=self.self_mask, auto_mask=self.auto_mask)

    def gradient(self) -> TermGradient:
        return TermGradient(depth_a=self.grad_depth_a, depth_b=self.grad_depth_b, twist=self.grad_twist)

    def scalars(self) -> Dict[str, float]:
        return {
            "total": self.total,
            "LP": self.photometric_masked,
            "LS": self.smoothness,
            "LG": self.geometry,
        }
