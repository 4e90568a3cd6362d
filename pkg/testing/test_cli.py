"""
Integration Tests: Command-Line Interface

Drives every subcommand through main() on a small synthesized sequence and
checks outputs, reproducibility and the exit-code contract.

Run with: pytest testing/test_cli.py -v
"""

import pytest
import sys
import os

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import main as cli
from utils import file_formats
from utils.errors import TrackingLostError
from scene_fixtures import DUMMY_DATA


# =============================================================================
# Test Fixtures & Helpers
# =============================================================================

SCENE = os.path.join(DUMMY_DATA, "plane_scene.cfg")


def directory_bytes(directory) -> dict:
    return {name: open(os.path.join(directory, name), "rb").read() for name in sorted(os.listdir(directory))}


@pytest.fixture
def synth_dir(tmp_path):
    out = str(tmp_path / "seq")
    assert cli.main(["synth", "--scene", SCENE, "--out", out]) == 0
    return out


# =============================================================================
# Test Suite: synth
# =============================================================================

class TestSynth:

    def test_writes_frame_directory(self, synth_dir):
        names = sorted(os.listdir(synth_dir))
        assert names == ["000000.pfm", "000000.ppm", "000001.pfm", "000001.ppm", "000002.pfm", "000002.ppm",
                         "000003.pfm", "000003.ppm", "intrinsics.txt", "poses.txt"]
        frames = file_formats.read_frame_directory(synth_dir)
        assert frames.intrinsics.width == 48 and len(frames.poses) == 4

    def test_is_byte_identical(self, synth_dir, tmp_path):
        again = str(tmp_path / "again")
        assert cli.main(["synth", "--scene", SCENE, "--out", again]) == 0
        assert directory_bytes(synth_dir) == directory_bytes(again)

    def test_seed_override_changes_noise_only(self, tmp_path):
        scene = tmp_path / "noisy.cfg"
        scene.write_text(open(SCENE).read() + "\nscene.noise_sigma = 0.01\n")
        first, second = str(tmp_path / "a"), str(tmp_path / "b")
        assert cli.main(["synth", "--scene", str(scene), "--out", first, "--seed", "1"]) == 0
        assert cli.main(["synth", "--scene", str(scene), "--out", second, "--seed", "2"]) == 0
        a, b = directory_bytes(first), directory_bytes(second)
        assert a["000000.ppm"] != b["000000.ppm"]
        assert a["000000.pfm"] == b["000000.pfm"]


# =============================================================================
# Test Suite: train
# =============================================================================

class TestTrain:

    def test_outputs_and_reproducibility(self, synth_dir, tmp_path, capsys):
        runs = []
        for name in ("run1", "run2"):
            out = str(tmp_path / name)
            assert cli.main(["train", "--data", synth_dir, "--out", out, "--iterations", "3"]) == 0
            runs.append(directory_bytes(out))
        assert runs[0] == runs[1]
        assert sorted(runs[0]) == ["000000.pfm", "000001.pfm", "000002.pfm", "loss_history.csv"]
        history = runs[0]["loss_history.csv"].decode().splitlines()
        assert history[0] == "step,total,LP,LS,LG"
        assert len(history) == 4
        printed = capsys.readouterr().out
        assert "Training" in printed and "Scale consistency" in printed

    def test_config_file_with_flag_override(self, synth_dir, tmp_path):
        config = tmp_path / "train.cfg"
        config.write_text("# short run\niterations = 50\nsimilarity = ncc\nlambda = 0.2\n")
        out = tmp_path / "run"
        assert cli.main(["train", "--config", str(config), "--data", synth_dir, "--out", str(out),
                         "--iterations", "2"]) == 0
        assert len((out / "loss_history.csv").read_text().splitlines()) == 3

    def test_snippet_longer_than_data(self, synth_dir, tmp_path):
        code = cli.main(["train", "--data", synth_dir, "--out", str(tmp_path / "run"), "--snippet-length", "9"])
        assert code == 1


# =============================================================================
# Test Suite: track and evaluation
# =============================================================================

class TestTrackAndEvaluate:

    def test_track_then_eval_odom(self, synth_dir, tmp_path, capsys):
        poses = str(tmp_path / "pred.txt")
        assert cli.main(["track", "--data", synth_dir, "--out", poses]) == 0
        predicted = file_formats.read_kitti_poses(poses)
        truth = file_formats.read_kitti_poses(os.path.join(synth_dir, "poses.txt"))
        assert len(predicted) == 4
        error = np.linalg.norm(predicted.positions() - truth.positions(), axis=1).max()
        assert error < 0.01
        table = str(tmp_path / "odom.csv")
        assert cli.main(["eval-odom", "--pred", poses, "--gt", os.path.join(synth_dir, "poses.txt"),
                         "--out", table]) == 0
        assert "ATE" in capsys.readouterr().out
        assert open(table).readline().startswith("ATE,dof,scale")

    def test_track_external_initialisation(self, synth_dir, tmp_path):
        poses = str(tmp_path / "pred.txt")
        assert cli.main(["track", "--data", synth_dir, "--out", poses, "--init-mode", "external"]) == 0

    def test_eval_depth_on_directories(self, synth_dir, tmp_path, capsys):
        table = str(tmp_path / "depth.csv")
        assert cli.main(["eval-depth", "--pred", synth_dir, "--gt", synth_dir, "--out", table]) == 0
        rows = open(table).read().splitlines()
        assert rows[0].startswith("frame,AbsRel") and len(rows) == 5
        assert "Depth metrics (4 frames)" in capsys.readouterr().out

    def test_eval_depth_single_file(self, synth_dir):
        depth = os.path.join(synth_dir, "000000.pfm")
        assert cli.main(["eval-depth", "--pred", depth, "--gt", depth, "--cap", "80"]) == 0

    def test_eval_depth_cap_preset(self, synth_dir, tmp_path, monkeypatch):
        seen = []
        original = cli.depth_metrics

        def recording(pred, gt, cap=None):
            seen.append(cap)
            return original(pred, gt, cap=cap)

        monkeypatch.setattr(cli, "depth_metrics", recording)
        depth = os.path.join(synth_dir, "000000.pfm")
        assert cli.main(["eval-depth", "--pred", depth, "--gt", depth, "--cap-preset", "nyu"]) == 0
        assert seen == [10.0]
        assert cli.main(["eval-depth", "--pred", depth, "--gt", depth, "--cap", "5", "--cap-preset", "kitti"]) == 1
        assert cli.main(["eval-depth", "--pred", depth, "--gt", depth, "--cap-preset", "cityscapes"]) == 1

    def test_eval_consistency(self, synth_dir, capsys):
        assert cli.main(["eval-consistency", "--data", synth_dir, "--frame-a", "1", "--resize", "24x24"]) == 0
        assert "Depth consistency (frames 1 -> 2)" in capsys.readouterr().out

    def test_eval_consistency_resolution_defaults_to_config(self, synth_dir, monkeypatch):
        sizes = []
        original = cli.depth_pair_consistency

        def recording(*args, **kwargs):
            sizes.append(kwargs["size"])
            return original(*args, **kwargs)

        monkeypatch.setattr(cli, "depth_pair_consistency", recording)
        assert cli.main(["eval-consistency", "--data", synth_dir]) == 0
        assert cli.main(["eval-consistency", "--data", synth_dir, "--resize", "native"]) == 0
        assert sizes == [(832, 256), None]

    def test_export_cloud(self, synth_dir, tmp_path):
        out = tmp_path / "cloud.ply"
        assert cli.main(["export-cloud", "--depth", os.path.join(synth_dir, "000000.pfm"),
                         "--image", os.path.join(synth_dir, "000000.ppm"),
                         "--intrinsics", os.path.join(synth_dir, "intrinsics.txt"), "--out", str(out)]) == 0
        text = out.read_text()
        assert "element vertex 2304" in text and "property uchar red" in text


# =============================================================================
# Test Suite: Exit Codes
# =============================================================================

class TestExitCodes:

    def test_usage_errors_exit_one(self, tmp_path):
        assert cli.main([]) == 1
        assert cli.main(["render"]) == 1
        assert cli.main(["train", "--out", str(tmp_path)]) == 1
        assert cli.main(["eval-odom", "--pred", "a.txt", "--gt", "b.txt", "--dof", "5"]) == 1

    def test_unknown_config_key_exits_one(self, tmp_path):
        config = tmp_path / "bad.cfg"
        config.write_text("learning_rate = 0.1\n")
        assert cli.main(["train", "--config", str(config)]) == 1

    def test_malformed_data_exits_two(self, tmp_path):
        bad = tmp_path / "bad.pfm"
        bad.write_bytes(b"Pf\n2 2\n-1.0\n" + bytes(3))
        assert cli.main(["eval-depth", "--pred", str(bad), "--gt", str(bad)]) == 2
        poses = tmp_path / "poses.txt"
        poses.write_text("1 0 0\n")
        assert cli.main(["eval-odom", "--pred", str(poses), "--gt", str(poses)]) == 2

    def test_degenerate_trajectory_exits_two(self, tmp_path):
        poses = tmp_path / "line.txt"
        poses.write_text("".join(f"1 0 0 {k} 0 1 0 0 0 0 1 0\n" for k in range(4)))
        assert cli.main(["eval-odom", "--pred", str(poses), "--gt", str(poses)]) == 2

    def test_numerical_failure_exits_three(self, synth_dir, tmp_path, monkeypatch):
        def lost(*args, **kwargs):
            raise TrackingLostError("coverage 0.000 below 0.100", frame_index=1)

        monkeypatch.setattr(cli, "run_odometry", lost)
        assert cli.main(["track", "--data", synth_dir, "--out", str(tmp_path / "pred.txt")]) == 3
