"""
Analytic Scene Renderer

Per-pixel ray-plane intersection against every surface of a SceneSpec. The
nearest hit gives the exact depth; its color is a smooth procedural texture
evaluated at the 3D intersection point, so images of a static scene satisfy
photometric constancy exactly between views.
"""

import logging
from typing import List, NamedTuple, Optional

import numpy as np

from geometry.camera import pixel_rays
from geometry.models import DepthMap, ImageGrid, Intrinsics, PoseSE3
from oracle.models import MAX_SCENE_DEPTH, MIN_SCENE_DEPTH, MovingPatch, PlaneSpec, SceneSpec, SequenceSpec
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

MAX_STEP_TRANSLATION_FRACTION = 0.1
TEXTURE_COMPONENTS = 3
PARALLEL_EPS = 1e-12


class RenderedFrame(NamedTuple):
    image: ImageGrid
    depth: DepthMap
    pose: PoseSE3


class ProceduralTexture:
    """
    Sum of three 3D sinusoids per color channel.

    Wave directions are drawn from the seed and projected onto the surface
    plane so the pattern never degenerates to a constant on that surface.
    Values stay inside [0.05, 0.95].
    """

    def __init__(self, seed: int, frequency: float, normal: np.ndarray):
        rng = np.random.default_rng(seed)
        directions = rng.normal(size=(TEXTURE_COMPONENTS, 3))
        directions -= np.outer(directions @ normal, normal)
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        self.directions = directions / np.maximum(norms, 1e-12)
        self.frequencies = frequency * rng.uniform(0.6, 1.0, size=TEXTURE_COMPONENTS)
        self.phases = rng.uniform(0.0, 2.0 * np.pi, size=(TEXTURE_COMPONENTS, 3))
        self.amplitudes = rng.uniform(0.08, 0.15, size=(TEXTURE_COMPONENTS, 3))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Colors (..., 3) for points (..., 3)."""
        angles = (points @ self.directions.T) * self.frequencies  # (..., components)
        waves = np.sin(angles[..., :, None] + self.phases)  # (..., components, channels)
        return 0.5 + np.sum(self.amplitudes * waves, axis=-2)


def _nearest_hit(origin: np.ndarray, directions: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Ray parameter of the intersection with n·X = offset; inf where the plane is missed."""
    denom = directions @ normal
    facing = np.abs(denom) > PARALLEL_EPS
    lam = np.full(denom.shape, np.inf)
    lam[facing] = (offset - normal @ origin) / denom[facing]
    lam[~(lam > 0.0)] = np.inf
    return lam


def _patch_bounds(patch: MovingPatch, K: Intrinsics) -> np.ndarray:
    """(x_min, y_min, x_max, y_max) of the patch rectangle on its plane at frame 0."""
    u_min, v_min, u_max, v_max = patch.rect
    return np.array([(u_min - K.cx) / K.fx * patch.depth, (v_min - K.cy) / K.fy * patch.depth,
                     (u_max - K.cx) / K.fx * patch.depth, (v_max - K.cy) / K.fy * patch.depth])


def render(scene: SceneSpec, pose: PoseSE3, K: Intrinsics, frame_index: int = 0) -> RenderedFrame:
    """
    Render one view of the scene.

    Args:
        scene: Scene description
        pose: World-from-camera pose of the view
        K: Camera intrinsics
        frame_index: Frame number; moving patches sit at frame_index · translation

    Returns:
        RenderedFrame with the image, exact depth and the pose

    Raises:
        ConfigurationError: If a ray misses every surface or a depth leaves [0.5, 50]
    """
    H, W = K.shape
    origin = pose.translation
    directions = pixel_rays(K) @ pose.rotation.T
    # camera rays have unit z, so the ray parameter is the camera-frame depth
    depth = np.full((H, W), np.inf)
    color = np.zeros((H, W, 3))

    def composite(lam: np.ndarray, texture: ProceduralTexture, shift: np.ndarray, inside: Optional[np.ndarray] = None):
        closer = lam < depth
        if inside is not None:
            closer &= inside
        if not closer.any():
            return
        points = origin + lam[closer][:, None] * directions[closer]
        depth[closer] = lam[closer]
        color[closer] = texture(points - shift)

    no_shift = np.zeros(3)
    surfaces: List[PlaneSpec] = list(scene.planes)
    if scene.background_depth is not None:
        surfaces.append(PlaneSpec(normal=[0.0, 0.0, 1.0], offset=scene.background_depth, seed=scene.background_seed))
    for plane in surfaces:
        lam = _nearest_hit(origin, directions, plane.normal, plane.offset)
        composite(lam, ProceduralTexture(plane.seed, scene.texture_frequency, plane.normal), no_shift)

    patch_normal = np.array([0.0, 0.0, 1.0])
    for patch in scene.moving_patches:
        shift = frame_index * patch.translation
        lam = _nearest_hit(origin, directions, patch_normal, patch.depth + shift[2])
        with np.errstate(invalid="ignore"):
            hit = origin + np.where(np.isfinite(lam), lam, 0.0)[..., None] * directions - shift
        x_min, y_min, x_max, y_max = _patch_bounds(patch, K)
        inside = (np.isfinite(lam) & (hit[..., 0] >= x_min) & (hit[..., 0] <= x_max)
                  & (hit[..., 1] >= y_min) & (hit[..., 1] <= y_max))
        composite(lam, ProceduralTexture(patch.seed, scene.texture_frequency, patch_normal), shift, inside)

    missed = ~np.isfinite(depth)
    if missed.any():
        raise ConfigurationError(f"{int(missed.sum())} camera rays miss every surface of the scene")
    if depth.min() < MIN_SCENE_DEPTH or depth.max() > MAX_SCENE_DEPTH:
        raise ConfigurationError(
            f"rendered depth range [{depth.min():.3f}, {depth.max():.3f}] leaves [{MIN_SCENE_DEPTH}, {MAX_SCENE_DEPTH}]"
        )

    if scene.noise_sigma > 0.0:
        noise_rng = np.random.default_rng([scene.seed, frame_index])
        color = np.clip(color + noise_rng.normal(scale=scene.noise_sigma, size=color.shape), 0.0, 1.0)

    return RenderedFrame(image=ImageGrid(values=color), depth=DepthMap(values=depth), pose=pose)


def render_sequence(scene: SceneSpec, seq: SequenceSpec) -> List[RenderedFrame]:
    """
    Render every frame of a sequence.

    Raises:
        ConfigurationError: If a frame-to-frame translation exceeds 10% of the
            median depth of the earlier frame, or a render fails
    """
    frames: List[RenderedFrame] = []
    for k, pose in enumerate(seq.poses):
        frame = render(scene, pose, seq.intrinsics, frame_index=k)
        if frames:
            step = np.linalg.norm(pose.translation - frames[-1].pose.translation)
            limit = MAX_STEP_TRANSLATION_FRACTION * frames[-1].depth.median()
            if step >= limit:
                raise ConfigurationError(
                    f"translation between frames {k - 1} and {k} is {step:.4f} (limit {limit:.4f}, 10% of median depth)"
                )
        frames.append(frame)
    logger.info(f"Rendered {len(frames)} frames at {seq.intrinsics.width}x{seq.intrinsics.height}")
    return frames
