"""
Command-Line Entry Point

Ties the geometry engine together into reproducible runs:

    synth             render an oracle sequence from a scene config
    train             optimise depths (and optionally poses) of a snippet
    track             pseudo-RGBD odometry over a frame directory
    eval-depth        depth metrics against ground truth
    eval-odom         ATE and KITTI errors of a trajectory
    eval-consistency  point-cloud consistency of two depth maps
    export-cloud      back-project a depth map to a PLY point cloud

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 numerical failure (divergence, tracking lost).
"""

import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from geometry.camera import backproject
from geometry.models import DepthMap, PoseSE3
from losses.models import LossOptions, LossWeights
from metrics.config_loader import get_cap, load_config as load_metrics_config
from metrics.depth_eval import depth_metrics
from metrics.registration import EVAL_SIZE, depth_pair_consistency
from metrics.trajectory_eval import evaluate_trajectory
from odometry.models import TrackingOptions, Trajectory
from odometry.tracker import run_odometry
from optimizer.models import TrainConfig
from optimizer.trainer import consistency_probe, optimize_snippet
from oracle.renderer import render_sequence
from oracle.scene_config import load_scene_config
from utils import file_formats
from utils.errors import ConfigurationError, EngineError
from utils.run_config import RunConfig
from utils.settings import get_settings

logger = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as ConfigurationError instead of exiting."""

    def error(self, message: str):
        raise ConfigurationError(f"{self.prog}: {message}")


def setup_logging() -> None:
    logging.basicConfig(
        level=get_settings().log_level,
        format="%(asctime)s | %(levelname)-8s | %(name)-20s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )


def _require(config: RunConfig, *names: str) -> None:
    missing = [name for name in names if getattr(config, name) is None]
    if missing:
        raise ConfigurationError(f"{config.command} requires {', '.join('--' + m.replace('_', '-') for m in missing)}")


def _print_table(title: str, row: Dict[str, object]) -> None:
    print(title)
    for key, value in row.items():
        text = f"{value:.6f}" if isinstance(value, float) else str(value)
        print(f"  {key:<10} {text}")


def _loss_weights(config: RunConfig) -> LossWeights:
    values = LossWeights.from_config().model_dump(by_alias=True)
    for key, name in (("alpha", "alpha"), ("beta", "beta"), ("gamma", "gamma"), ("lambda", "lam")):
        if getattr(config, name) is not None:
            values[key] = getattr(config, name)
    return LossWeights(**values)


def _loss_options(config: RunConfig) -> LossOptions:
    values = LossOptions.from_config().model_dump()
    if config.similarity is not None:
        values["similarity"] = config.similarity
    return LossOptions(**values)


def _relative_poses(poses: Sequence[PoseSE3]) -> List[PoseSE3]:
    """P_{i,i+1} = T_{i+1}^-1 · T_i from world-from-camera poses."""
    return [b.inverse() @ a for a, b in zip(poses, poses[1:])]


# ============================================================================
# Subcommands
# ============================================================================

def cmd_synth(config: RunConfig) -> None:
    _require(config, "scene", "out")
    scene_file = load_scene_config(config.scene)
    if scene_file.sequence is None:
        raise ConfigurationError(f"{config.scene} defines no camera (camera.intrinsics)")
    scene = scene_file.scene
    if config.seed is not None:
        scene = scene.model_copy(update={"seed": config.seed})
    frames = render_sequence(scene, scene_file.sequence)
    file_formats.write_frame_directory(
        config.out, [f.image for f in frames], [f.depth for f in frames], scene_file.sequence.intrinsics,
        Trajectory.from_poses([f.pose for f in frames]),
    )


def cmd_train(config: RunConfig) -> None:
    _require(config, "data", "out")
    data = file_formats.read_frame_directory(config.data, require_depth=False)
    train_config = TrainConfig.from_config(
        weights=_loss_weights(config), options=_loss_options(config), seed=config.seed,
        step_size=config.step_size, pose_step_size=config.pose_step_size, iterations=config.iterations,
        snippet_length=config.snippet_length, bidirectional=config.bidirectional,
        pose_mode=config.pose_mode, init_depth=config.init_depth,
    )
    count = train_config.snippet_length
    if len(data.images) < count:
        raise ConfigurationError(f"{config.data} holds {len(data.images)} frames, snippet needs {count}")
    frames = data.images[:count]
    poses = None
    if data.poses is not None:
        poses = _relative_poses(data.poses.poses[:count])
    elif train_config.pose_mode == "frozen":
        raise ConfigurationError("frozen pose mode needs ground-truth poses (poses.txt) in the data directory")

    state = optimize_snippet(frames, data.intrinsics, train_config, poses=poses)
    os.makedirs(config.out, exist_ok=True)
    file_formats.write_csv(os.path.join(config.out, "loss_history.csv"),
                           [record.model_dump() for record in state.history],
                           ["step", "total", "LP", "LS", "LG"])
    depths = state.depths()
    for index, depth in enumerate(depths):
        file_formats.write_pfm(file_formats.frame_path(config.out, index, "pfm"), depth)
    final = state.history[-1]
    _print_table("Training", {"steps": state.step, "total": final.total, "LP": final.LP,
                              "LS": final.LS, "LG": final.LG})
    truth = data.depths[:count]
    if all(depth is not None for depth in truth):
        consistency = consistency_probe(depths, truth)
        _print_table("Scale consistency", {"spread": consistency.spread,
                                           **{f"ratio_{i}": r for i, r in enumerate(consistency.ratios)}})


def cmd_track(config: RunConfig) -> None:
    _require(config, "data", "out")
    data = file_formats.read_frame_directory(config.data)
    opts = TrackingOptions.from_config(init_mode=config.init_mode, max_iterations=config.max_iterations,
                                       gamma=config.gamma)
    external = None
    if opts.init_mode == "external":
        if data.poses is None:
            raise ConfigurationError("external initialisation needs poses.txt in the data directory")
        external = [None] + data.poses.relative_poses()
    trajectory = run_odometry(list(zip(data.images, data.depths)), data.intrinsics, opts, external)
    file_formats.write_kitti_poses(config.out, trajectory)
    logger.info(f"Wrote trajectory of {len(trajectory)} poses to {config.out}")


def _depth_pairs(pred: str, gt: str):
    if os.path.isdir(pred) != os.path.isdir(gt):
        raise ConfigurationError("--pred and --gt must both be files or both be directories")
    if not os.path.isdir(pred):
        return [(os.path.basename(pred), file_formats.read_pfm(pred), file_formats.read_pfm(gt))]
    names = sorted(name for name in os.listdir(gt) if name.endswith(".pfm"))
    if not names:
        raise ConfigurationError(f"{gt} contains no .pfm files")
    pairs = []
    for name in names:
        pred_path = os.path.join(pred, name)
        if not os.path.exists(pred_path):
            raise ConfigurationError(f"missing prediction {pred_path}")
        pairs.append((name, file_formats.read_pfm(pred_path), file_formats.read_pfm(os.path.join(gt, name))))
    return pairs


def _depth_cap(config: RunConfig) -> Optional[float]:
    if config.cap is not None and config.cap_preset is not None:
        raise ConfigurationError("--cap and --cap-preset are mutually exclusive")
    if config.cap_preset is not None:
        return get_cap(config.cap_preset)
    return config.cap


def cmd_eval_depth(config: RunConfig) -> None:
    _require(config, "pred", "gt")
    cap = _depth_cap(config)
    rows = []
    for name, pred, gt in _depth_pairs(config.pred, config.gt):
        report = depth_metrics(pred, gt, cap=cap)
        rows.append({"frame": name, **report.as_row()})
    keys = [key for key in rows[0] if key not in ("frame", "n_valid", "scale")]
    mean_row = {key: float(np.mean([row[key] for row in rows])) for key in keys}
    _print_table(f"Depth metrics ({len(rows)} frames)", mean_row)
    if config.out:
        file_formats.write_csv(config.out, rows)


def cmd_eval_odom(config: RunConfig) -> None:
    _require(config, "pred", "gt")
    pred = file_formats.read_kitti_poses(config.pred)
    gt = file_formats.read_kitti_poses(config.gt)
    dof = config.dof if config.dof is not None else int(load_metrics_config()["odometry"]["default_dof"])
    report = evaluate_trajectory(pred, gt, dof)
    _print_table("Odometry", report.as_row())
    if config.out:
        file_formats.write_csv(config.out, [report.as_row()])


def _parse_size(value: Optional[str]) -> Optional[Tuple[int, int]]:
    """WIDTHxHEIGHT, "native" for no resizing, None for the configured size."""
    if value is None:
        return EVAL_SIZE
    if value.lower() == "native":
        return None
    try:
        width, height = (int(part) for part in value.lower().split("x"))
    except ValueError:
        raise ConfigurationError(f"--resize expects WIDTHxHEIGHT, got '{value}'")
    return width, height


def cmd_eval_consistency(config: RunConfig) -> None:
    _require(config, "data")
    data = file_formats.read_frame_directory(config.data)
    if data.poses is None:
        raise ConfigurationError(f"{config.data} has no poses.txt")
    a = config.frame_a if config.frame_a is not None else 0
    b = config.frame_b if config.frame_b is not None else a + 1
    if not (0 <= a < len(data.images) and 0 <= b < len(data.images)):
        raise ConfigurationError(f"frames {a} and {b} must lie in [0, {len(data.images) - 1}]")
    if config.pred:
        D_a = file_formats.read_pfm(file_formats.frame_path(config.pred, a, "pfm"))
        D_b = file_formats.read_pfm(file_formats.frame_path(config.pred, b, "pfm"))
    else:
        D_a, D_b = data.depths[a], data.depths[b]
    T = data.poses.poses
    P_ab = T[b].inverse() @ T[a]
    report = depth_pair_consistency(D_a, D_b, P_ab, data.intrinsics, gt_a=data.depths[a], gt_b=data.depths[b],
                                    threshold=config.threshold, size=_parse_size(config.resize))
    _print_table(f"Depth consistency (frames {a} -> {b})", report.as_row())
    if config.out:
        file_formats.write_csv(config.out, [report.as_row()])


def cmd_export_cloud(config: RunConfig) -> None:
    _require(config, "depth", "intrinsics", "out")
    depth: DepthMap = file_formats.read_pfm(config.depth)
    K = file_formats.read_intrinsics(config.intrinsics)
    image = file_formats.read_ppm(config.image) if config.image else None
    cloud = backproject(depth, K, image)
    file_formats.write_ply(config.out, cloud)
    logger.info(f"Wrote {len(cloud)} points to {config.out}")


COMMANDS: Dict[str, Callable[[RunConfig], None]] = {
    "synth": cmd_synth,
    "train": cmd_train,
    "track": cmd_track,
    "eval-depth": cmd_eval_depth,
    "eval-odom": cmd_eval_odom,
    "eval-consistency": cmd_eval_consistency,
    "export-cloud": cmd_export_cloud,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="scdepth", description="Scale-consistent depth and odometry engine")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        return p

    p = add("synth", "render an oracle sequence")
    p.add_argument("--scene", help="scene config file")

    p = add("train", "optimise a snippet")
    p.add_argument("--data", help="frame directory")
    for flag in ("--alpha", "--beta", "--gamma", "--lambda", "--step-size", "--pose-step-size", "--init-depth"):
        p.add_argument(flag, type=float, dest=flag[2:].replace("-", "_").replace("lambda", "lam"))
    p.add_argument("--similarity", choices=["ssim", "ncc"])
    p.add_argument("--iterations", type=int)
    p.add_argument("--snippet-length", type=int)
    p.add_argument("--pose-mode", choices=["frozen", "joint"])
    p.add_argument("--bidirectional", action=argparse.BooleanOptionalAction, default=None)

    p = add("track", "pseudo-RGBD odometry")
    p.add_argument("--data", help="frame directory")
    p.add_argument("--init-mode", choices=["motion_model", "external"])
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--gamma", type=float)

    p = add("eval-depth", "depth metrics")
    p.add_argument("--pred", help="PFM file or directory")
    p.add_argument("--gt", help="PFM file or directory")
    p.add_argument("--cap", type=float)
    p.add_argument("--cap-preset", choices=["kitti", "nyu"], help="named depth cap from the metrics config")

    p = add("eval-odom", "trajectory metrics")
    p.add_argument("--pred", help="KITTI pose file")
    p.add_argument("--gt", help="KITTI pose file")
    p.add_argument("--dof", type=int, choices=[6, 7])

    p = add("eval-consistency", "depth consistency of two frames")
    p.add_argument("--data", help="frame directory with ground truth")
    p.add_argument("--pred", help="directory of predicted NNNNNN.pfm depths")
    p.add_argument("--frame-a", type=int)
    p.add_argument("--frame-b", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--resize", help="WIDTHxHEIGHT evaluation size or 'native' (default from the metrics config)")

    p = add("export-cloud", "depth map to PLY")
    p.add_argument("--depth", help="PFM depth map")
    p.add_argument("--image", help="optional PPM colors")
    p.add_argument("--intrinsics", help="intrinsics file")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    try:
        args = build_parser().parse_args(argv)
        flags = {key: value for key, value in vars(args).items() if key not in ("command", "config")}
        config = RunConfig.resolve(args.command, flags, args.config)
        logger.info(f"Running {config.command} with {config.resolved()}")
        COMMANDS[config.command](config)
    except EngineError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
