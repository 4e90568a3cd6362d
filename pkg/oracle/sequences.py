"""
Camera Sequence Builders

Ground-truth world-from-camera trajectories for the oracle: constant body-frame
velocity, pure rotation about the optical center and a closed circular loop.
"""

from typing import Optional

import numpy as np

from geometry.lie import se3_exp, so3_exp
from geometry.models import Intrinsics, PoseSE3
from oracle.models import SequenceSpec


def constant_velocity_sequence(K: Intrinsics, n_frames: int, twist: np.ndarray,
                               start: Optional[PoseSE3] = None) -> SequenceSpec:
    """T_k = T_{k-1} · exp(twist), twist = (v, ω) in the camera frame."""
    pose = start or PoseSE3.identity()
    step = se3_exp(np.asarray(twist, dtype=np.float64))
    poses = [pose]
    for _ in range(1, n_frames):
        pose = pose @ step
        poses.append(pose)
    return SequenceSpec(intrinsics=K, poses=poses)


def rotation_sequence(K: Intrinsics, n_frames: int, degrees_per_frame: float,
                      axis=(0.0, 1.0, 0.0)) -> SequenceSpec:
    """Camera turning in place about `axis`; every translation is zero."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    step = np.radians(degrees_per_frame)
    poses = [PoseSE3(rotation=so3_exp(axis * step * k), translation=np.zeros(3)) for k in range(n_frames)]
    return SequenceSpec(intrinsics=K, poses=poses)


def circle_sequence(K: Intrinsics, n_frames: int, radius: float, center=(0.0, 0.0, 0.0),
                    closed: bool = True) -> SequenceSpec:
    """
    Camera translating around a circle in the x-y plane, optical axis fixed along +z.

    With closed=True the last frame sits one step before the start, so the path
    returns to its origin after n_frames steps.
    """
    center = np.asarray(center, dtype=np.float64)
    span = 2.0 * np.pi if closed else np.pi
    poses = []
    for k in range(n_frames):
        angle = span * k / n_frames
        position = center + radius * np.array([np.cos(angle) - 1.0, np.sin(angle), 0.0])
        poses.append(PoseSE3(rotation=np.eye(3), translation=position))
    return SequenceSpec(intrinsics=K, poses=poses)


def path_length(seq: SequenceSpec) -> float:
    """Sum of frame-to-frame camera displacements."""
    positions = np.array([pose.translation for pose in seq.poses])
    return float(np.linalg.norm(np.diff(positions, axis=0), axis=1).sum())
