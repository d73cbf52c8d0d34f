"""
Shared utility functions for the extremal modules.
"""

import logging
import os
from typing import Any, Dict, Optional
import yaml

logger = logging.getLogger(__name__)
DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(__file__), "config.yaml")
config_cache = {}


def load_config(config_path: Optional[str] = None) -> Dict:
    """
    Load the enumeration and search limits from a YAML file.

    Args:
        config_path: Path to the config YAML file. If None, uses default path.

    Returns:
        Dictionary of config sections, empty if the file is missing or invalid.
    """
    global config_cache  # pylint: disable=global-statement
    if config_cache:
        return config_cache

    if config_path is None:
        config_path = DEFAULT_CONFIG_PATH

    if not os.path.exists(config_path):
        logger.warning(
            "Config file not found at %s. Built-in defaults will be used.",
            config_path,
        )
        return {}

    try:
        with open(config_path, "r", encoding="utf-8") as file:
            config = yaml.safe_load(file)
            if not config or not isinstance(config, dict):
                return {}
            logger.info("Loaded %d config sections from %s", len(config), config_path)
            config_cache = config
            return config
    except (yaml.YAMLError, IOError, FileNotFoundError) as e:
        logger.warning("Failed to load config file: %s", e)
        return {}


def reset_config() -> None:
    """Forget the cached config so the next lookup reloads it."""
    global config_cache  # pylint: disable=global-statement
    config_cache = {}


def get_setting(section: str, key: str, default: Any = None) -> Any:
    """
    Look up one configured value.

    Args:
        section: Top-level section of the config, e.g. "search"
        key: Key within the section
        default: Value returned when the section or key is absent

    Returns:
        The configured value, or default.
    """
    values = load_config().get(section) or {}
    if not isinstance(values, dict):
        logger.warning("Config section %s is not a mapping, ignoring it", section)
        return default
    return values.get(key, default)
