"""
SO(3) / SE(3) Lie Algebra

Twists are ordered (v, ω): translational part first, rotational part second.
Pose updates are left-multiplied, P <- exp(ξ) · P.
"""

import logging

import numpy as np

from geometry.models import PoseSE3
from utils.errors import DomainError

logger = logging.getLogger(__name__)

# Below this angle the closed forms are replaced by their Taylor series
SMALL_ANGLE = 1e-4
# se3_log refuses rotations this close to π
LOG_ANGLE_MARGIN = 1e-6


def so3_hat(w: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix [w]x with [w]x v = w x v."""
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy],
                     [wz, 0.0, -wx],
                     [-wy, wx, 0.0]])


def so3_vee(S: np.ndarray) -> np.ndarray:
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def so3_hat_batch(vectors: np.ndarray) -> np.ndarray:
    """(..., 3, 3) skew matrices of (..., 3) vectors."""
    hat = np.zeros(vectors.shape[:-1] + (3, 3))
    x, y, z = vectors[..., 0], vectors[..., 1], vectors[..., 2]
    hat[..., 0, 1], hat[..., 0, 2] = -z, y
    hat[..., 1, 0], hat[..., 1, 2] = z, -x
    hat[..., 2, 0], hat[..., 2, 1] = -y, x
    return hat


def _rodrigues_coefficients(theta: float):
    """sin(θ)/θ, (1 - cos θ)/θ², (θ - sin θ)/θ³ with small-angle series."""
    if theta < SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0, 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    s, c = np.sin(theta), np.cos(theta)
    return s / theta, (1.0 - c) / theta ** 2, (theta - s) / theta ** 3


def so3_exp(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    theta = float(np.linalg.norm(w))
    A, B, _ = _rodrigues_coefficients(theta)
    K = so3_hat(w)
    return np.eye(3) + A * K + B * (K @ K)


def so3_log(R: np.ndarray) -> np.ndarray:
    """Rotation vector of R. Raises DomainError at angles within 1e-6 of π."""
    R = np.asarray(R, dtype=np.float64)
    axis_part = so3_vee(R - R.T)
    sin_theta = 0.5 * np.linalg.norm(axis_part)
    cos_theta = 0.5 * (np.trace(R) - 1.0)
    theta = float(np.arctan2(sin_theta, cos_theta))
    if theta >= np.pi - LOG_ANGLE_MARGIN:
        raise DomainError(f"so3_log undefined for rotation angle {theta:.9f} (>= pi - {LOG_ANGLE_MARGIN})")
    if theta < SMALL_ANGLE:
        factor = 0.5 * (1.0 + theta * theta / 6.0 + 7.0 * theta ** 4 / 360.0)
    else:
        factor = theta / (2.0 * np.sin(theta))
    return factor * axis_part


def se3_left_jacobian(w: np.ndarray) -> np.ndarray:
    """V matrix coupling rotation into the translation of exp((v, ω))."""
    theta = float(np.linalg.norm(w))
    _, B, C = _rodrigues_coefficients(theta)
    K = so3_hat(w)
    return np.eye(3) + B * K + C * (K @ K)


def se3_exp(twist: np.ndarray) -> PoseSE3:
    """Exponential map of a (v, ω) twist."""
    twist = np.asarray(twist, dtype=np.float64).reshape(6)
    v, w = twist[:3], twist[3:]
    R = so3_exp(w)
    t = se3_left_jacobian(w) @ v
    return PoseSE3(rotation=R, translation=t)


def se3_log(pose: PoseSE3) -> np.ndarray:
    """Logarithm map; inverse of se3_exp for rotation angles below π."""
    w = so3_log(pose.rotation)
    v = np.linalg.solve(se3_left_jacobian(w), pose.translation)
    return np.concatenate([v, w])


def se3_compose(a: PoseSE3, b: PoseSE3) -> PoseSE3:
    """a ∘ b."""
    return a.compose(b)


def se3_inverse(pose: PoseSE3) -> PoseSE3:
    return pose.inverse()


def apply_left_update(twist: np.ndarray, pose: PoseSE3) -> PoseSE3:
    """P <- exp(ξ) · P."""
    return se3_exp(twist).compose(pose)


def nearest_rotation(M: np.ndarray) -> np.ndarray:
    """Closest rotation matrix to M in the Frobenius norm."""
    U, _, Vt = np.linalg.svd(M)
    D = np.eye(3)
    if np.linalg.det(U @ Vt) < 0:
        D[2, 2] = -1.0
    return U @ D @ Vt


def se3_adjoint(pose: PoseSE3) -> np.ndarray:
    """6 x 6 adjoint for (v, ω) twists: exp(Ad_T ξ) = T exp(ξ) T^-1."""
    R, t = pose.rotation, pose.translation
    Ad = np.zeros((6, 6))
    Ad[:3, :3] = R
    Ad[:3, 3:] = so3_hat(t) @ R
    Ad[3:, 3:] = R
    return Ad
