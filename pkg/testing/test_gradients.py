"""
Finite-Difference Gradient Checks

Compares the analytic gradients of every loss term against central finite
differences (step 1e-4, relative tolerance 1e-4), with the masks of the
first evaluation held fixed so the objective being differenced is the one
the gradient describes.

Configurations are built to be smooth under the perturbation:
- the reference image is brightened and the source darkened, so the L1
  residual never changes sign;
- the source depth is inflated, so D^a_b - D'_b never changes sign;
- pixels whose projection lies within a margin of an integer grid line are
  removed from V, so no sample crosses a bilinear cell boundary.

Run with: pytest testing/test_gradients.py -v
"""

import pytest
import sys
import os

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from geometry.lie import apply_left_update
from geometry.models import DepthMap, ImageGrid
from geometry.warping import compute_warp_field
from losses.models import LossOptions, MaskSet
from losses.objective import bidirectional_loss, total_loss
from scene_fixtures import make_intrinsics, pose, render_pair, room_scene, wall_scene


# =============================================================================
# Test Fixtures & Helpers
# =============================================================================

EPS = 1e-4
RELATIVE_TOLERANCE = 1e-4
ABSOLUTE_FLOOR = 1e-9
# twist steps move projections by up to fx * EPS pixels
GRID_MARGIN = 0.05
PIXEL_GRID_MARGIN = 1e-3

TERMS = ["photometric", "photometric_masked", "geometry", "smoothness", "total"]


def make_config(seed: int, size: int):
    """Rendered pair with depths perturbed away from the truth."""
    rng = np.random.default_rng(seed)
    K = make_intrinsics(size)
    scene = room_scene() if seed % 2 else wall_scene(depth=8.0 + seed % 3, seed=seed)
    twist = np.concatenate([rng.uniform(-0.2, 0.2, size=3), rng.uniform(-0.02, 0.02, size=3)])
    frame_a, frame_b, P_ab = render_pair(scene, K, pose(twist))
    I_a = ImageGrid(values=0.5 * frame_a.image.values + 0.5)
    I_b = ImageGrid(values=0.5 * frame_b.image.values)
    D_a = DepthMap(values=frame_a.depth.values * (1.0 + 0.05 * rng.normal(size=K.shape)))
    D_b = DepthMap(values=frame_b.depth.values * (1.3 + 0.05 * rng.normal(size=K.shape)))
    return I_a, I_b, D_a, D_b, P_ab, K


def off_grid_masks(masks: MaskSet, D_a: DepthMap, P_ab, K, margin: float) -> MaskSet:
    coords = compute_warp_field(D_a, P_ab, K).coords
    frac = coords - np.floor(coords)
    clear = (np.minimum(frac, 1.0 - frac) > margin).all(axis=-1)
    valid = masks.valid & clear
    return MaskSet(valid=valid, self_mask=masks.self_mask, auto_mask=masks.auto_mask & valid)


def frozen_bundle(I_a, I_b, D_a, D_b, P_ab, K, margin: float = GRID_MARGIN, **kwargs):
    masks = off_grid_masks(total_loss(I_a, I_b, D_a, D_b, P_ab, K, **kwargs).masks, D_a, P_ab, K, margin)
    return total_loss(I_a, I_b, D_a, D_b, P_ab, K, frozen=masks, **kwargs), masks


def term_gradients(bundle):
    grads = dict(bundle.term_gradients)
    grads["total"] = bundle.gradient()
    return grads


def term_value(bundle, name: str) -> float:
    return getattr(bundle, name)


def assert_close(analytic: float, numeric: float):
    scale = max(abs(analytic), abs(numeric))
    assert abs(analytic - numeric) <= RELATIVE_TOLERANCE * scale + ABSOLUTE_FLOOR, (analytic, numeric)


def perturbed(D: DepthMap, delta: np.ndarray) -> DepthMap:
    return DepthMap(values=D.values + delta)


# =============================================================================
# Test Suite: Per-Pixel Depth Gradients
# =============================================================================

class TestPerPixelDepthGradient:

    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("similarity", ["ssim", "ncc"])
    def test_total_gradient_matches_each_pixel(self, seed, similarity):
        I_a, I_b, D_a, D_b, P_ab, K = make_config(seed, 10)
        options = LossOptions(similarity=similarity)
        bundle, frozen = frozen_bundle(I_a, I_b, D_a, D_b, P_ab, K, margin=PIXEL_GRID_MARGIN, options=options)

        def loss(Da, Db):
            return total_loss(I_a, I_b, Da, Db, P_ab, K, options=options, frozen=frozen).total

        for i in range(K.height):
            for j in range(K.width):
                delta = np.zeros(K.shape)
                delta[i, j] = EPS
                numeric_a = (loss(perturbed(D_a, delta), D_b) - loss(perturbed(D_a, -delta), D_b)) / (2 * EPS)
                numeric_b = (loss(D_a, perturbed(D_b, delta)) - loss(D_a, perturbed(D_b, -delta))) / (2 * EPS)
                assert_close(bundle.grad_depth_a[i, j], numeric_a)
                assert_close(bundle.grad_depth_b[i, j], numeric_b)


# =============================================================================
# Test Suite: Directional and Twist Gradients
# =============================================================================

class TestDirectionalGradients:

    @pytest.mark.parametrize("seed", range(20))
    def test_every_term_along_random_depth_directions(self, seed):
        I_a, I_b, D_a, D_b, P_ab, K = make_config(100 + seed, 32)
        bundle, frozen = frozen_bundle(I_a, I_b, D_a, D_b, P_ab, K)
        rng = np.random.default_rng(seed)
        dir_a = rng.normal(size=K.shape)
        dir_b = rng.normal(size=K.shape)

        plus = total_loss(I_a, I_b, perturbed(D_a, EPS * dir_a), perturbed(D_b, EPS * dir_b), P_ab, K, frozen=frozen)
        minus = total_loss(I_a, I_b, perturbed(D_a, -EPS * dir_a), perturbed(D_b, -EPS * dir_b), P_ab, K, frozen=frozen)
        for name, grad in term_gradients(bundle).items():
            analytic = np.sum(grad.depth_a * dir_a) + np.sum(grad.depth_b * dir_b)
            numeric = (term_value(plus, name) - term_value(minus, name)) / (2 * EPS)
            assert_close(analytic, numeric)

    @pytest.mark.parametrize("seed", range(20))
    def test_every_term_along_each_twist_axis(self, seed):
        I_a, I_b, D_a, D_b, P_ab, K = make_config(200 + seed, 32)
        bundle, frozen = frozen_bundle(I_a, I_b, D_a, D_b, P_ab, K)
        grads = term_gradients(bundle)
        for k in range(6):
            xi = np.zeros(6)
            xi[k] = EPS
            plus = total_loss(I_a, I_b, D_a, D_b, apply_left_update(xi, P_ab), K, frozen=frozen)
            minus = total_loss(I_a, I_b, D_a, D_b, apply_left_update(-xi, P_ab), K, frozen=frozen)
            for name in TERMS:
                numeric = (term_value(plus, name) - term_value(minus, name)) / (2 * EPS)
                assert_close(grads[name].twist[k], numeric)

    def test_smoothness_has_no_pose_or_source_gradient(self):
        I_a, I_b, D_a, D_b, P_ab, K = make_config(7, 16)
        grad = total_loss(I_a, I_b, D_a, D_b, P_ab, K).term_gradients["smoothness"]
        assert not grad.depth_b.any() and not grad.twist.any()


# =============================================================================
# Test Suite: Bidirectional Objective
# =============================================================================

class TestBidirectional:

    @staticmethod
    def _frozen_pair(I_a, I_b, D_a, D_b, P_ab, K):
        _, _, forward, backward = bidirectional_loss(I_a, I_b, D_a, D_b, P_ab, K)
        frozen = (off_grid_masks(forward.masks, D_a, P_ab, K, GRID_MARGIN),
                  off_grid_masks(backward.masks, D_b, P_ab.inverse(), K, GRID_MARGIN))
        _, gradient, _, _ = bidirectional_loss(I_a, I_b, D_a, D_b, P_ab, K, frozen=frozen)
        return gradient, frozen

    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_twist_gradient_includes_backward_pair(self, seed):
        I_a, I_b, D_a, D_b, P_ab, K = make_config(300 + seed, 24)
        gradient, frozen = self._frozen_pair(I_a, I_b, D_a, D_b, P_ab, K)
        for k in range(6):
            xi = np.zeros(6)
            xi[k] = EPS
            plus = bidirectional_loss(I_a, I_b, D_a, D_b, apply_left_update(xi, P_ab), K, frozen=frozen)[0]
            minus = bidirectional_loss(I_a, I_b, D_a, D_b, apply_left_update(-xi, P_ab), K, frozen=frozen)[0]
            assert_close(gradient.twist[k], (plus - minus) / (2 * EPS))

    def test_depth_gradient_along_random_direction(self):
        I_a, I_b, D_a, D_b, P_ab, K = make_config(310, 24)
        gradient, frozen = self._frozen_pair(I_a, I_b, D_a, D_b, P_ab, K)
        rng = np.random.default_rng(5)
        dir_a, dir_b = rng.normal(size=(2,) + K.shape)
        plus = bidirectional_loss(I_a, I_b, perturbed(D_a, EPS * dir_a),
                                  perturbed(D_b, EPS * dir_b), P_ab, K, frozen=frozen)[0]
        minus = bidirectional_loss(I_a, I_b, perturbed(D_a, -EPS * dir_a),
                                   perturbed(D_b, -EPS * dir_b), P_ab, K, frozen=frozen)[0]
        analytic = np.sum(gradient.depth_a * dir_a) + np.sum(gradient.depth_b * dir_b)
        assert_close(analytic, (plus - minus) / (2 * EPS))

    def test_total_is_sum_of_both_directions(self):
        I_a, I_b, D_a, D_b, P_ab, K = make_config(320, 16)
        total, _, forward, backward = bidirectional_loss(I_a, I_b, D_a, D_b, P_ab, K)
        assert total == pytest.approx(forward.total + backward.total)
