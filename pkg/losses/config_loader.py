"""
Configuration Loader for Losses

Loads loss weights and photometric options from config.json with fallback
defaults.
"""

import logging
from typing import Dict, Any, Optional

from utils.config_loader import load_json_config, package_config_path

logger = logging.getLogger(__name__)

# Default configuration (used as fallback)
DEFAULT_CONFIG = {
    "loss_weights": {
        "alpha": 1.0,
        "beta": 0.1,
        "gamma": 0.5,
        "lambda": 0.15,
        "c1": 0.0001,
        "c2": 0.0009
    },
    "photometric": {
        "similarity": "ssim",
        "use_auto_mask": True,
        "use_self_mask": True
    }
}

# Cache for loaded config
_config_cache: Optional[Dict[str, Any]] = None


def load_config(config_path: str = None) -> Dict[str, Any]:
    """
    Load losses configuration.

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
