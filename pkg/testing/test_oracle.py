"""
Unit Tests: Synthetic Scene Oracle

Renderer exactness, view consistency of rendered frames, moving patches,
sequence builders and the scene config grammar.

Run with: pytest testing/test_oracle.py -v
"""

import pytest
import sys
import os

import numpy as np
from pydantic import ValidationError

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from geometry.camera import pixel_rays
from geometry.lie import so3_exp
from geometry.models import PoseSE3
from geometry.warping import warp_image
from losses.consistency import depth_inconsistency
from oracle.models import PlaneSpec, SceneSpec, SequenceSpec
from oracle.renderer import render, render_sequence
from oracle.scene_config import load_scene_config, parse_scene_config
from oracle.sequences import circle_sequence, constant_velocity_sequence, path_length, rotation_sequence
from utils.errors import ConfigurationError, ParseError
from scene_fixtures import DUMMY_DATA, make_intrinsics, patch_scene, pose, render_pair, room_scene, wall_scene


# =============================================================================
# Test Fixtures & Helpers
# =============================================================================

MOTION = [0.25, -0.1, 0.3, 0.01, -0.02, 0.005]

SCENE_TEXT = """
# wall with one moving patch
scene.texture_frequency = 1.2
scene.noise_sigma = 0.01
plane.0.normal = 0 0 1
plane.0.offset = 10
patch.3.rect = 10 10 20 20
patch.3.depth = 6
patch.3.translation = 0.05 0 0
camera.intrinsics = 32 32 64 64 16 16
sequence.frames = 5
sequence.motion = rotation
sequence.degrees_per_frame = 1.5
"""


# =============================================================================
# Test Suite: Rendering
# =============================================================================

class TestRender:

    def test_fronto_parallel_wall_has_constant_depth(self):
        frame = render(wall_scene(depth=10.0), PoseSE3.identity(), make_intrinsics(32))
        np.testing.assert_array_equal(frame.depth.values, 10.0)
        assert frame.depth.validity.all()

    def test_tilted_plane_matches_ray_plane_formula(self):
        K = make_intrinsics(32)
        normal = np.array([0.0, -0.2, 1.0])
        scene = SceneSpec(planes=[PlaneSpec(normal=normal, offset=9.0)])
        frame = render(scene, PoseSE3.identity(), K)
        unit = normal / np.linalg.norm(normal)
        expected = 9.0 / (pixel_rays(K) @ unit)
        np.testing.assert_allclose(frame.depth.values, expected, rtol=1e-12)

    def test_texture_stays_in_range(self):
        frame = render(room_scene(), PoseSE3.identity(), make_intrinsics(48))
        assert frame.image.channels == 3
        assert frame.image.values.min() >= 0.05 and frame.image.values.max() <= 0.95

    def test_zero_motion_gives_identical_frames(self):
        frame_a, frame_b, _ = render_pair(room_scene(), make_intrinsics(32), PoseSE3.identity())
        np.testing.assert_array_equal(frame_a.image.values, frame_b.image.values)
        np.testing.assert_array_equal(frame_a.depth.values, frame_b.depth.values)

    def test_warp_residual_between_views_is_small(self):
        K = make_intrinsics(64)
        frame_a, frame_b, P_ab = render_pair(wall_scene(), K, pose(MOTION))
        warped, valid = warp_image(frame_b.image, frame_a.depth, P_ab, K)
        assert valid.mean() > 0.5
        assert np.abs(warped.values - frame_a.image.values)[valid].mean() < 1e-3

    @pytest.mark.parametrize("scene_builder", [wall_scene, room_scene])
    def test_ground_truth_depths_are_consistent(self, scene_builder):
        K = make_intrinsics(64)
        frame_a, frame_b, P_ab = render_pair(scene_builder(), K, pose(MOTION))
        result = depth_inconsistency(frame_a.depth, frame_b.depth, P_ab, K)
        assert np.mean(result.depth_diff[result.valid] < 1e-3) >= 0.99

    def test_ray_missing_every_surface_raises(self):
        behind = SceneSpec(planes=[PlaneSpec(normal=[0.0, 0.0, 1.0], offset=-5.0)])
        with pytest.raises(ConfigurationError):
            render(behind, PoseSE3.identity(), make_intrinsics(16))

    def test_depth_outside_scene_range_raises(self):
        with pytest.raises(ConfigurationError):
            render(wall_scene(depth=80.0), PoseSE3.identity(), make_intrinsics(16))

    def test_background_fills_rays_missing_the_planes(self):
        floor_only = SceneSpec(planes=[PlaneSpec(normal=[0.0, 1.0, 0.0], offset=1.5)], background_depth=20.0)
        frame = render(floor_only, PoseSE3.identity(), make_intrinsics(32))
        assert frame.depth.values[0, 0] == 20.0
        assert frame.depth.values[-1, 16] < 20.0

    def test_noise_is_deterministic_per_frame(self):
        K = make_intrinsics(16)
        scene = wall_scene(noise_sigma=0.02, seed=4)
        first = render(scene, PoseSE3.identity(), K, frame_index=2)
        again = render(scene, PoseSE3.identity(), K, frame_index=2)
        other = render(scene, PoseSE3.identity(), K, frame_index=3)
        np.testing.assert_array_equal(first.image.values, again.image.values)
        assert not np.array_equal(first.image.values, other.image.values)


# =============================================================================
# Test Suite: Moving Patches
# =============================================================================

class TestMovingPatch:

    def test_patch_is_nearer_than_the_wall(self):
        frame = render(patch_scene([0.0, 0.0, 0.0]), PoseSE3.identity(), make_intrinsics(64))
        assert frame.depth.values[32, 32] == pytest.approx(6.0)
        assert frame.depth.values[2, 2] == pytest.approx(10.0)

    def test_patch_moves_between_frames(self):
        K = make_intrinsics(64)
        scene = patch_scene([0.6, 0.0, 0.0])
        first = render(scene, PoseSE3.identity(), K, frame_index=0)
        second = render(scene, PoseSE3.identity(), K, frame_index=1)
        # 0.6 units at depth 6 shift the patch by 12.8 px to the right
        assert first.depth.values[32, 21] == pytest.approx(6.0)
        assert second.depth.values[32, 21] == pytest.approx(10.0)
        assert second.depth.values[32, 52] == pytest.approx(6.0)

    def test_patch_at_camera_velocity_looks_static(self):
        K = make_intrinsics(64)
        frame_a, frame_b, _ = render_pair(patch_scene([0.3, 0.0, 0.0]), K, pose([0.3, 0.0, 0.0, 0.0, 0.0, 0.0]))
        np.testing.assert_allclose(frame_b.image.values[24:40, 24:40], frame_a.image.values[24:40, 24:40], atol=1e-12)


# =============================================================================
# Test Suite: Sequences
# =============================================================================

class TestSequences:

    def test_constant_velocity_steps_are_equal(self):
        K = make_intrinsics(16)
        seq = constant_velocity_sequence(K, 4, [0.1, 0.0, 0.05, 0.0, 0.01, 0.0])
        steps = [seq.poses[k].inverse() @ seq.poses[k + 1] for k in range(3)]
        for step in steps[1:]:
            np.testing.assert_allclose(step.matrix(), steps[0].matrix(), atol=1e-12)
        assert seq.n_frames == 4 and seq.image_size == (16, 16)

    def test_rotation_sequence_has_no_translation(self):
        seq = rotation_sequence(make_intrinsics(16), 5, 2.0)
        assert all(not p.translation.any() for p in seq.poses)
        assert np.degrees(seq.poses[4].rotation_angle()) == pytest.approx(8.0)

    def test_circle_path_length(self):
        seq = circle_sequence(make_intrinsics(16), 40, 1.0)
        assert path_length(seq) == pytest.approx(39 * 2.0 * np.sin(np.pi / 40))
        np.testing.assert_array_equal(seq.poses[0].translation, 0.0)

    def test_large_rotation_step_rejected(self):
        K = make_intrinsics(16)
        with pytest.raises(ValidationError):
            SequenceSpec(intrinsics=K, poses=[PoseSE3.identity(),
                                              PoseSE3(rotation=so3_exp([0.0, np.radians(12.0), 0.0]), translation=np.zeros(3))])

    def test_large_translation_step_rejected_at_render(self):
        K = make_intrinsics(16)
        seq = constant_velocity_sequence(K, 2, [1.5, 0.0, 0.0, 0.0, 0.0, 0.0])
        with pytest.raises(ConfigurationError):
            render_sequence(wall_scene(), seq)

    def test_render_sequence_returns_poses(self):
        K = make_intrinsics(16)
        seq = constant_velocity_sequence(K, 3, [0.1, 0.0, 0.0, 0.0, 0.0, 0.0])
        frames = render_sequence(wall_scene(), seq)
        assert len(frames) == 3
        assert frames[2].pose.translation[0] == pytest.approx(0.2)


# =============================================================================
# Test Suite: Scene Config Files
# =============================================================================

class TestSceneConfig:

    def test_parse_full_description(self):
        parsed = parse_scene_config(SCENE_TEXT)
        assert parsed.scene.texture_frequency == 1.2
        assert len(parsed.scene.planes) == 1 and len(parsed.scene.moving_patches) == 1
        patch = parsed.scene.moving_patches[0]
        assert patch.seed == 1003
        np.testing.assert_array_equal(patch.translation, [0.05, 0.0, 0.0])
        assert parsed.sequence.n_frames == 5
        assert np.degrees(parsed.sequence.poses[2].rotation_angle()) == pytest.approx(3.0)

    def test_load_dummy_scene_file(self):
        parsed = load_scene_config(os.path.join(DUMMY_DATA, "plane_scene.cfg"))
        assert parsed.scene.background_depth == 20.0
        assert [p.seed for p in parsed.scene.planes] == [5, 9]
        assert parsed.sequence.intrinsics.width == 48
        frames = render_sequence(parsed.scene, parsed.sequence)
        assert len(frames) == 4

    def test_scene_without_camera_has_no_sequence(self):
        parsed = parse_scene_config("plane.0.normal = 0 0 1\nplane.0.offset = 5\n")
        assert parsed.sequence is None

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError):
            parse_scene_config("plane.0.normal = 0 0 1\nplane.0.offset = 5\nplane.0.colour = red\n")

    def test_missing_equals_reports_line(self):
        with pytest.raises(ParseError) as excinfo:
            parse_scene_config("plane.0.normal = 0 0 1\nplane.0.offset 5\n")
        assert excinfo.value.line_number == 2

    def test_sequence_keys_need_camera(self):
        with pytest.raises(ConfigurationError):
            parse_scene_config("scene.background_depth = 10\nsequence.frames = 2\n")

    def test_too_fast_rotation_is_a_configuration_error(self):
        text = "scene.background_depth = 10\ncamera.intrinsics = 16 16 32 32 8 8\n" \
               "sequence.frames = 3\nsequence.motion = rotation\nsequence.degrees_per_frame = 12\n"
        with pytest.raises(ConfigurationError):
            parse_scene_config(text)

    def test_empty_scene_rejected(self):
        with pytest.raises(ConfigurationError):
            parse_scene_config("scene.seed = 1\n")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_scene_config(str(tmp_path / "missing.cfg"))
