"""
Snippet Trainer

Fixed-step gradient descent on the total objective summed over adjacent frame
pairs of a short snippet. Depths are optimised through unconstrained logits
(D = 1 / (a·sigmoid(x) + b)), so every iterate stays in the depth range.
Poses are either held at their given values or refined jointly with
left-multiplied twist steps.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np

from geometry.camera import check_dimensions
from geometry.depth_param import depth_to_logit, logit_to_depth
from geometry.lie import apply_left_update
from geometry.models import DepthMap, ImageGrid, Intrinsics, PoseSE3
from losses.objective import bidirectional_loss, total_loss
from optimizer.models import LossRecord, ProbeReport, TrainConfig, TrainState
from utils.errors import ConfigurationError, DivergenceError

logger = logging.getLogger(__name__)


def _initial_logits(frames: Sequence[ImageGrid], config: TrainConfig,
                    init_depths: Optional[Sequence[DepthMap]]) -> List[np.ndarray]:
    if init_depths is not None:
        if len(init_depths) != len(frames):
            raise ConfigurationError(f"got {len(init_depths)} initial depth maps for {len(frames)} frames")
        logits = [depth_to_logit(depth.values) for depth in init_depths]
    else:
        logits = [np.full(frame.shape, float(depth_to_logit(np.array(config.init_depth)))) for frame in frames]
    if config.init_noise > 0.0:
        rng = np.random.default_rng(config.seed)
        logits = [x + config.init_noise * rng.normal(size=x.shape) for x in logits]
    return logits


def optimize_snippet(frames: Sequence[ImageGrid], K: Intrinsics, config: Optional[TrainConfig] = None,
                     poses: Optional[Sequence[PoseSE3]] = None,
                     init_depths: Optional[Sequence[DepthMap]] = None) -> TrainState:
    """
    Minimise the objective over every adjacent pair of a snippet.

    Args:
        frames: Images of the snippet, at least 2
        K: Shared intrinsics
        config: Training configuration (optimizer/config.json defaults if None)
        poses: Initial relative poses P_{i,i+1}, len(frames) - 1 of them; identity if None
        init_depths: Initial depth maps; constant config.init_depth if None

    Returns:
        Final TrainState with the loss history of every step

    Raises:
        ConfigurationError: On fewer than 2 frames or mismatched dimensions
        DivergenceError: If the loss becomes non-finite
    """
    config = config or TrainConfig.from_config()
    if len(frames) < 2:
        raise ConfigurationError("optimize_snippet needs at least 2 frames")
    for i, frame in enumerate(frames):
        check_dimensions(frame.shape, K, f"frame {i}")
    pair_count = len(frames) - 1
    if poses is None:
        poses = [PoseSE3.identity()] * pair_count
    if len(poses) != pair_count:
        raise ConfigurationError(f"expected {pair_count} relative poses, got {len(poses)}")

    state = TrainState(logits=_initial_logits(frames, config, init_depths), poses=list(poses))
    pixel_count = float(K.width * K.height)
    logger.info(
        f"Optimizing {len(frames)}-frame snippet at {K.width}x{K.height}: {config.iterations} steps, "
        f"step={config.step_size}, pose mode={config.pose_mode}, bidirectional={config.bidirectional}"
    )

    for step in range(config.iterations):
        mapped = [logit_to_depth(x) for x in state.logits]
        depths = [DepthMap(values=depth) for depth, _ in mapped]
        grad_depths = [np.zeros(K.shape) for _ in frames]
        grad_twists = []
        sums = {"total": 0.0, "LP": 0.0, "LS": 0.0, "LG": 0.0}

        for i in range(pair_count):
            I_a, I_b, D_a, D_b, P_ab = frames[i], frames[i + 1], depths[i], depths[i + 1], state.poses[i]
            if config.bidirectional:
                _, gradient, forward, backward = bidirectional_loss(I_a, I_b, D_a, D_b, P_ab, K,
                                                                    config.weights, config.options)
                bundles = (forward, backward)
            else:
                forward = total_loss(I_a, I_b, D_a, D_b, P_ab, K, config.weights, config.options)
                gradient = forward.gradient()
                bundles = (forward,)
            for bundle in bundles:
                for key, value in bundle.scalars().items():
                    sums[key] += value
            grad_depths[i] += gradient.depth_a
            grad_depths[i + 1] += gradient.depth_b
            grad_twists.append(gradient.twist)

        if not all(np.isfinite(value) for value in sums.values()):
            raise DivergenceError(step, f"loss {sums['total']} is not finite")
        state.history.append(LossRecord(step=step, **sums))

        for i, (_, derivative) in enumerate(mapped):
            grad_logit = grad_depths[i] * derivative
            if not np.all(np.isfinite(grad_logit)):
                raise DivergenceError(step, f"gradient of frame {i} is not finite")
            state.logits[i] = state.logits[i] - config.step_size * pixel_count * grad_logit
        if config.pose_mode == "joint":
            state.poses = [apply_left_update(-config.pose_step_size * g, pose)
                           for g, pose in zip(grad_twists, state.poses)]
        state.step = step + 1

        if step % config.log_every == 0 or step == config.iterations - 1:
            logger.info(f"step {step}: total={sums['total']:.6f} LP={sums['LP']:.6f} "
                        f"LS={sums['LS']:.6f} LG={sums['LG']:.6f}")

    return state


def consistency_probe(depths: Sequence[DepthMap], truth: Sequence[DepthMap]) -> ProbeReport:
    """
    Per-frame median scale against ground truth.

    ratio_i = median(D_i / D_i_truth) over pixels valid in both maps;
    spread = max_i ratio_i / min_i ratio_i.

    Args:
        depths: Estimated depth maps (e.g. TrainState.depths())
        truth: Ground-truth depth maps of the same frames
    """
    if len(depths) != len(truth) or not depths:
        raise ConfigurationError(f"need matching non-empty depth lists, got {len(depths)} and {len(truth)}")
    ratios = []
    for estimate, reference in zip(depths, truth):
        valid = estimate.validity & reference.validity
        ratios.append(float(np.median(estimate.values[valid] / reference.values[valid])))
    spread = max(ratios) / min(ratios)
    logger.debug(f"Scale ratios {[round(r, 4) for r in ratios]}, spread {spread:.4f}")
    return ProbeReport(ratios=ratios, spread=spread)
