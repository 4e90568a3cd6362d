"""
Unit Tests: Geometry Models, Camera, Sampling and Warping

Run with: pytest testing/test_geometry.py -v
"""

import pytest
import sys
import os

import numpy as np
from pydantic import ValidationError

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from geometry import camera, depth_param
from geometry.camera import backproject, project, project_array, projection_jacobian, transform
from geometry.config_loader import load_config
from geometry.depth_param import depth_to_logit, depth_to_sigmoid, logit_to_depth, sigmoid_to_depth
from geometry.models import DepthMap, ImageGrid, Intrinsics, PoseSE3
from geometry.sampling import bilinear_sample, bilinear_splat, resize_depth
from geometry.warping import compute_warp_field, synthesize_depth, warp_image
from utils.errors import ConfigurationError, DomainError
from scene_fixtures import make_intrinsics, pose


# =============================================================================
# Test Fixtures & Helpers
# =============================================================================

def constant_depth(K: Intrinsics, value: float) -> DepthMap:
    return DepthMap(values=np.full(K.shape, value))


# =============================================================================
# Test Suite: Models
# =============================================================================

class TestModels:

    def test_intrinsics_reject_non_positive_focal(self):
        with pytest.raises(ValidationError):
            Intrinsics(fx=0.0, fy=10.0, cx=5.0, cy=5.0, width=10, height=10)

    def test_intrinsics_reject_principal_point_outside(self):
        with pytest.raises(ValidationError):
            Intrinsics(fx=10.0, fy=10.0, cx=10.0, cy=5.0, width=10, height=10)

    def test_pose_rejects_non_orthonormal_rotation(self):
        R = np.eye(3)
        R[0, 0] = 1.0 + 1e-6
        with pytest.raises(ValidationError):
            PoseSE3(rotation=R, translation=np.zeros(3))

    def test_pose_rejects_reflection(self):
        with pytest.raises(ValidationError):
            PoseSE3(rotation=np.diag([1.0, 1.0, -1.0]), translation=np.zeros(3))

    def test_depth_validity_defaults_to_finite_positive(self):
        D = DepthMap(values=[[1.0, np.nan], [0.0, 2.0]])
        np.testing.assert_array_equal(D.validity, [[True, False], [False, True]])

    def test_depth_rejects_valid_flag_on_nan(self):
        with pytest.raises(ValidationError):
            DepthMap(values=[[np.nan]], validity=[[True]])

    def test_image_gray_is_expanded(self):
        assert ImageGrid(values=np.zeros((4, 5))).values.shape == (4, 5, 1)

    def test_intrinsics_scaled(self):
        K = make_intrinsics(64).scaled(32, 16)
        assert (K.fx, K.fy, K.cx, K.cy) == (64.0, 32.0, 16.0, 8.0)


# =============================================================================
# Test Suite: Camera
# =============================================================================

class TestCamera:

    def test_backproject_then_project_returns_pixels(self):
        K = make_intrinsics(16)
        D = DepthMap(values=np.random.default_rng(0).uniform(1.0, 5.0, size=K.shape))
        cloud = backproject(D, K)
        coords, z, in_front = project(cloud, K)
        v, u = np.mgrid[0:16, 0:16]
        np.testing.assert_allclose(coords, np.stack([u.ravel(), v.ravel()], axis=1), atol=1e-12)
        np.testing.assert_allclose(z, D.values.ravel(), atol=1e-15)
        assert in_front.all()

    def test_backproject_skips_invalid_pixels(self):
        K = make_intrinsics(4)
        values = np.ones(K.shape)
        values[0, 0] = np.nan
        assert len(backproject(DepthMap(values=values), K)) == 15

    def test_backproject_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            backproject(DepthMap(values=np.ones((3, 4))), make_intrinsics(4))

    def test_points_behind_camera_are_flagged(self):
        K = make_intrinsics(8)
        _, _, in_front = project(transform(backproject(constant_depth(K, 1.0), K),
                                           PoseSE3(rotation=np.eye(3), translation=[0.0, 0.0, -2.0])), K)
        assert not in_front.any()

    def test_projection_jacobian_matches_finite_differences(self):
        K = make_intrinsics(32)
        X = np.array([0.3, -0.2, 4.0])
        J = projection_jacobian(X, K)
        eps = 1e-6
        for k in range(3):
            dX = np.zeros(3)
            dX[k] = eps
            plus, _, _ = project_array(X + dX, K)
            minus, _, _ = project_array(X - dX, K)
            np.testing.assert_allclose(J[:, k], (plus - minus) / (2 * eps), rtol=1e-6, atol=1e-8)


# =============================================================================
# Test Suite: Bilinear Sampling
# =============================================================================

class TestSampling:

    def test_integer_coordinates_return_grid_values(self):
        grid = np.arange(20.0).reshape(4, 5)
        coords = np.array([[1.0, 2.0], [3.0, 0.0]])
        sample = bilinear_sample(grid, coords)
        np.testing.assert_array_equal(sample.values, [grid[2, 1], grid[0, 3]])
        assert sample.valid.all()

    def test_last_row_and_column_are_outside_the_domain(self):
        grid = np.ones((4, 5))
        sample = bilinear_sample(grid, np.array([[4.0, 1.0], [1.0, 3.0], [-0.1, 1.0]]))
        assert not sample.valid.any()

    def test_linear_field_is_reproduced_with_exact_jacobian(self):
        v, u = np.mgrid[0:6, 0:7].astype(float)
        grid = 2.0 * u - 3.0 * v + 1.0
        coords = np.array([[2.25, 1.5], [4.75, 3.125]])
        sample = bilinear_sample(grid, coords)
        np.testing.assert_allclose(sample.values, 2.0 * coords[:, 0] - 3.0 * coords[:, 1] + 1.0, atol=1e-13)
        np.testing.assert_allclose(sample.jacobian, [[2.0, -3.0], [2.0, -3.0]], atol=1e-13)

    def test_jacobian_matches_central_differences_on_random_grid(self):
        rng = np.random.default_rng(9)
        grid = rng.normal(size=(7, 8, 2))
        cells = rng.integers(1, 5, size=(20, 2)).astype(float)
        coords = cells + rng.uniform(0.1, 0.9, size=(20, 2))
        sample = bilinear_sample(grid, coords)
        assert sample.valid.all()
        h = 1e-6
        for axis in range(2):
            step = np.zeros(2)
            step[axis] = h
            numeric = (bilinear_sample(grid, coords + step).values
                       - bilinear_sample(grid, coords - step).values) / (2 * h)
            np.testing.assert_allclose(sample.jacobian[..., axis], numeric, rtol=1e-6, atol=1e-8)

    def test_invalid_neighbour_invalidates_sample(self):
        validity = np.ones((4, 4), dtype=bool)
        validity[1, 2] = False
        sample = bilinear_sample(np.ones((4, 4)), np.array([[1.5, 0.5], [1.5, 1.5]]), validity)
        np.testing.assert_array_equal(sample.valid, [False, False])

    def test_splat_is_adjoint_of_sampling(self):
        rng = np.random.default_rng(1)
        grid = rng.normal(size=(6, 7))
        coords = rng.uniform(-0.5, 6.5, size=(30, 2))
        weights = rng.normal(size=30)
        lhs = np.sum(weights * bilinear_sample(grid, coords).values)
        rhs = np.sum(grid * bilinear_splat(weights, coords, 6, 7))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_resize_keeps_corners(self):
        values = np.random.default_rng(2).uniform(1.0, 2.0, size=(5, 8))
        resized, valid = resize_depth(values, np.ones_like(values, dtype=bool), 16, 10)
        assert valid.all()
        assert resized[0, 0] == pytest.approx(values[0, 0], abs=1e-12)
        assert resized[-1, -1] == pytest.approx(values[-1, -1], abs=1e-12)


# =============================================================================
# Test Suite: Warping
# =============================================================================

class TestWarping:

    def test_identity_pose_reproduces_image_on_valid_pixels(self):
        K = make_intrinsics(16)
        image = ImageGrid(values=np.random.default_rng(3).uniform(size=(16, 16, 3)))
        warped, valid = warp_image(image, constant_depth(K, 5.0), PoseSE3.identity(), K)
        np.testing.assert_allclose(warped.values[valid], image.values[valid], atol=1e-12)
        assert valid[1:-1, 1:-1].all()

    def test_synthesized_depth_of_constant_plane(self):
        K = make_intrinsics(16)
        P_ab = PoseSE3(rotation=np.eye(3), translation=[0.25, 0.0, 0.0])
        synth = synthesize_depth(constant_depth(K, 8.0), constant_depth(K, 8.0), P_ab, K)
        assert synth.valid.any()
        np.testing.assert_array_equal(synth.projected[synth.valid], 8.0)
        np.testing.assert_allclose(synth.interpolated[synth.valid], 8.0, atol=1e-14)

    @pytest.mark.parametrize("s", [0.5, 2.0])
    def test_coordinates_invariant_under_joint_scaling(self, s):
        K = make_intrinsics(16)
        P_ab = PoseSE3(rotation=np.eye(3), translation=[0.25, -0.125, 0.5])
        base = compute_warp_field(constant_depth(K, 8.0), P_ab, K)
        scaled = compute_warp_field(constant_depth(K, 8.0 * s), P_ab.scaled(s), K)
        np.testing.assert_array_equal(base.coords, scaled.coords)

    def test_coordinates_under_scaling_by_ten_agree_to_rounding(self):
        K = make_intrinsics(16)
        rng = np.random.default_rng(8)
        depth = DepthMap(values=rng.uniform(2.0, 20.0, size=K.shape))
        P_ab = pose([0.31, -0.17, 0.23, 0.02, -0.013, 0.007])
        base = compute_warp_field(depth, P_ab, K)
        scaled = compute_warp_field(depth.scaled(10.0), P_ab.scaled(10.0), K)
        np.testing.assert_array_equal(base.in_front, scaled.in_front)
        np.testing.assert_allclose(scaled.coords, base.coords, rtol=1e-13, atol=1e-12)
        np.testing.assert_allclose(scaled.depth_b, 10.0 * base.depth_b, rtol=1e-13)

    def test_warp_dimension_mismatch(self):
        K = make_intrinsics(8)
        with pytest.raises(ConfigurationError):
            warp_image(ImageGrid(values=np.zeros((4, 4, 3))), constant_depth(K, 1.0), PoseSE3.identity(), K)

    def test_rotation_only_warp_does_not_depend_on_depth(self):
        K = make_intrinsics(16)
        P_ab = pose([0.0, 0.0, 0.0, 0.0, 0.02, 0.0])
        near = compute_warp_field(constant_depth(K, 2.0), P_ab, K)
        far = compute_warp_field(constant_depth(K, 20.0), P_ab, K)
        np.testing.assert_allclose(near.coords, far.coords, atol=1e-12)


# =============================================================================
# Test Suite: Depth Parameterisation
# =============================================================================

class TestDepthParam:

    def test_sigmoid_endpoints(self):
        assert sigmoid_to_depth(1.0 - 1e-12) == pytest.approx(0.1)
        assert sigmoid_to_depth(1e-300) == pytest.approx(100.0)

    def test_range_and_cheirality_threshold_come_from_config(self):
        config = load_config()
        assert depth_param.MIN_DEPTH == config["depth_range"]["min_depth"] == 0.1
        assert depth_param.MAX_DEPTH == config["depth_range"]["max_depth"] == 100.0
        assert camera.Z_EPS == config["camera"]["z_eps"] == 1e-6

    def test_partial_config_file_is_merged_over_defaults(self, tmp_path):
        path = tmp_path / "geometry.json"
        path.write_text('{"depth_range": {"max_depth": 50.0}}')
        config = load_config(str(path))
        assert config["depth_range"] == {"min_depth": 0.1, "max_depth": 50.0}
        assert config["camera"]["z_eps"] == 1e-6
        assert sigmoid_to_depth(1e-300, max_depth=config["depth_range"]["max_depth"]) == pytest.approx(50.0)

    def test_sigmoid_midpoint(self):
        # a = 1/0.1 - 1/100, b = 1/100
        assert sigmoid_to_depth(0.5) == pytest.approx(1.0 / 5.005, rel=1e-12)
        assert sigmoid_to_depth(0.5) == pytest.approx(0.1998, abs=1e-4)

    def test_sigmoid_outside_open_interval(self):
        with pytest.raises(DomainError):
            sigmoid_to_depth(0.0)
        with pytest.raises(DomainError):
            sigmoid_to_depth(1.5)

    def test_round_trip(self):
        depth = np.array([0.5, 1.0, 10.0, 80.0])
        np.testing.assert_allclose(sigmoid_to_depth(depth_to_sigmoid(depth)), depth, rtol=1e-12)
        np.testing.assert_allclose(logit_to_depth(depth_to_logit(depth))[0], depth, rtol=1e-10)

    def test_logit_derivative_matches_finite_differences(self):
        x = np.array([-3.0, 0.0, 2.5])
        _, derivative = logit_to_depth(x)
        eps = 1e-6
        numeric = (logit_to_depth(x + eps)[0] - logit_to_depth(x - eps)[0]) / (2 * eps)
        np.testing.assert_allclose(derivative, numeric, rtol=1e-6)

    def test_extreme_logits_stay_in_range(self):
        depth, _ = logit_to_depth(np.array([-1e3, 1e3]))
        assert np.all(depth >= 0.1) and np.all(depth <= 100.0)
