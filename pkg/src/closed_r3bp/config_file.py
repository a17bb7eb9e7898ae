"""Run configuration discovery and loading for closed-r3bp.

A run is configured by a ``.closed-r3bp.yml`` or ``.closed-r3bp.yaml`` file placed in
the working directory (or any parent), or given via ``--config``. Command-line options
override file values; the merged mapping is validated into a :class:`RunConfig`.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import yaml
from pydantic import ValidationError

from closed_r3bp.exceptions import ConfigurationError
from closed_r3bp.models import RunConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILENAMES = [".closed-r3bp.yml", ".closed-r3bp.yaml"]


def find_config_file(start_dir: Path | None = None) -> Path | None:
    """Search for a config file starting from the given directory.

    Args:
        start_dir: Directory to start searching from. Defaults to CWD.

    Returns:
        Path to the first config file found walking up the parents, None otherwise.
    """
    current = (start_dir or Path.cwd()).resolve()
    while True:
        for filename in DEFAULT_CONFIG_FILENAMES:
            config_path = current / filename
            if config_path.is_file():
                logger.debug("Found config file: %s", config_path)
                return config_path
        if current.parent == current:
            return None
        current = current.parent


def load_config(path: Path | None = None) -> dict[str, Any]:
    """Load a run configuration mapping from YAML.

    Args:
        path: Explicit path to the config file. If None, auto-discovers.

    Returns:
        The mapping, or an empty dict when no usable file exists. Unreadable files,
        parse errors and non-mapping content are logged as warnings.
    """
    if path is None:
        path = find_config_file()
    if path is None:
        return {}
    if not path.is_file():
        logger.warning("Config file not found: %s", path)
        return {}

    try:
        config = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        logger.warning("Failed to parse config file %s: %s", path, e)
        return {}
    except OSError as e:
        logger.warning("Failed to read config file %s: %s", path, e)
        return {}
    if not isinstance(config, dict):
        logger.warning("Config file must contain a YAML mapping, got %s", type(config).__name__)
        return {}
    logger.debug("Loaded config from %s: %s", path, config)
    return config


def merge_config_with_cli(
    config: dict[str, Any],
    cli_args: dict[str, Any],
) -> dict[str, Any]:
    """Merge config file values with CLI arguments; non-None CLI values win."""
    merged = dict(config)
    for key, value in cli_args.items():
        if value is not None:
            merged[key] = value
    return merged


def resolve_run_config(
    config_path: Path | None = None,
    cli_args: dict[str, Any] | None = None,
) -> RunConfig:
    """Load, merge and validate the configuration of one CLI run.

    Raises:
        ConfigurationError: Unknown keys or invalid values.
    """
    merged = merge_config_with_cli(load_config(config_path), cli_args or {})
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigurationError(f"invalid run configuration: {problems}") from exc
