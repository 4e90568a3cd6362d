"""
Configuration Loader for the Optimizer

Loads training defaults (step sizes, iteration budget, seed, snippet length,
pose mode) from config.json with fallback defaults.
"""

import logging
from typing import Dict, Any, Optional

from utils.config_loader import load_json_config, package_config_path

logger = logging.getLogger(__name__)

# Default configuration (used as fallback)
DEFAULT_CONFIG = {
    "training": {
        "step_size": 0.01,
        "pose_step_size": 0.0005,
        "iterations": 400,
        "seed": 0,
        "snippet_length": 3,
        "bidirectional": True,
        "pose_mode": "frozen",
        "init_depth": 5.0,
        "init_noise": 0.0,
        "log_every": 50
    }
}

# Cache for loaded config
_config_cache: Optional[Dict[str, Any]] = None


def load_config(config_path: str = None) -> Dict[str, Any]:
    """
    Load optimizer configuration.

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


def get_training_config() -> Dict[str, Any]:
    """Get the training section."""
    return load_config().get("training", DEFAULT_CONFIG["training"])
