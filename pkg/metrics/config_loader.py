"""
Configuration Loader for Metrics

Loads evaluation protocol constants (depth caps, evaluation floor, KITTI
segment lengths, consistency inlier ratio) from config.json with fallback
defaults.
"""

import logging
from typing import Dict, Any, Optional

from utils.config_loader import load_json_config, package_config_path
from utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

# Default configuration (used as fallback)
DEFAULT_CONFIG = {
    "depth": {
        "min_eval": 0.001,
        "default_cap": 80.0,
        "caps": {
            "kitti": 80.0,
            "nyu": 10.0
        }
    },
    "odometry": {
        "segment_lengths": [100, 200, 300, 400, 500, 600, 700, 800],
        "first_frame_step": 1,
        "default_dof": 7
    },
    "consistency": {
        "inlier_ratio": 0.02,
        "resize_width": 832,
        "resize_height": 256
    }
}

# Cache for loaded config
_config_cache: Optional[Dict[str, Any]] = None


def load_config(config_path: str = None) -> Dict[str, Any]:
    """
    Load metrics configuration.

    Args:
        config_path: Path to config file. If None, uses config.json next to this module.

    Returns:
        Configuration dictionary merged over DEFAULT_CONFIG.
    """
    global _config_cache

    if config_path is None and _config_cache is not None:
        return _config_cache

    config = load_json_config(config_path or package_config_path(__file__), DEFAULT_CONFIG)
    if config_path is None:
        _config_cache = config
    return config


def get_cap(preset: str) -> float:
    """Depth cap for a named preset ("kitti", "nyu")."""
    caps = load_config()["depth"]["caps"]
    if preset not in caps:
        raise ConfigurationError(f"Unknown depth cap preset '{preset}', expected one of {sorted(caps)}")
    return float(caps[preset])
