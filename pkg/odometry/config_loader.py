"""
Configuration Loader for Odometry

Loads tracking parameters (initialisation mode, Gauss-Newton limits, Huber
threshold, tracking-lost thresholds) from config.json with fallback defaults.
"""

import logging
from typing import Dict, Any, Optional

from utils.config_loader import load_json_config, package_config_path

logger = logging.getLogger(__name__)

# Default configuration (used as fallback)
DEFAULT_CONFIG = {
    "tracking": {
        "init_mode": "motion_model",
        "max_iterations": 50,
        "convergence_threshold": 1e-8,
        "huber_delta": 0.1,
        "gamma": 0.5,
        "max_halvings": 10,
        "min_coverage": 0.10,
        "max_photometric_mean": 0.5,
        "min_depth_coverage": 0.20,
        "use_self_mask": True,
        "use_auto_mask": True
    }
}

# Cache for loaded config
_config_cache: Optional[Dict[str, Any]] = None


def load_config(config_path: str = None) -> Dict[str, Any]:
    """
    Load odometry configuration.

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


def get_tracking_config() -> Dict[str, Any]:
    """Get the tracking section."""
    return load_config().get("tracking", DEFAULT_CONFIG["tracking"])
