"""
Shared Configuration Loading

Each package keeps a config.json next to its own config_loader.py. This module
holds the loading routine they share: read the JSON file, deep-merge it over
the package defaults and fall back to the defaults when the file is missing
or invalid.
"""

import copy
import json
import os
import logging
from typing import Dict, Any

logger = logging.getLogger(__name__)


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Return a copy of base with override applied recursively."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_json_config(config_path: str, defaults: Dict[str, Any]) -> Dict[str, Any]:
    """
    Load configuration from a JSON file on top of defaults.

    Args:
        config_path: Path to the JSON file
        defaults: Fallback configuration

    Returns:
        Merged configuration dictionary. Defaults if the file is missing or invalid.
    """
    try:
        if os.path.exists(config_path):
            with open(config_path, 'r', encoding='utf-8') as f:
                config = json.load(f)
            logger.debug(f"Loaded configuration from {config_path}")
            return deep_merge(defaults, config)
        logger.warning(f"Config file not found at {config_path}, using default configuration")
        return copy.deepcopy(defaults)
    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON in config file {config_path}: {e}. Using default configuration.")
        return copy.deepcopy(defaults)
    except OSError as e:
        logger.error(f"Error loading config file {config_path}: {e}. Using default configuration.")
        return copy.deepcopy(defaults)


def package_config_path(module_file: str) -> str:
    """Path of the config.json that sits in the same directory as module_file."""
    module_dir = os.path.dirname(os.path.abspath(module_file))
    return os.path.join(module_dir, "config.json")
