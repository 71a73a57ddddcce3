"""Configuration management for qeilab."""

from pathlib import Path
from typing import Any, cast

import yaml
from pydantic import ValidationError

from qeilab.config.settings import (
    COMMAND_CONFIGS,
    DEFAULT_TOL,
    DEFAULT_VACUUM_TOL,
    BoundConfig,
    CommandConfig,
    FockConfig,
    GffConfig,
    Grid,
    LoggingOptions,
    NuclearityConfig,
    NumericsOptions,
    ScalingConfig,
    VacuumBoundConfig,
)
from qeilab.errors import ConfigError

__all__ = [
    "COMMAND_CONFIGS",
    "DEFAULT_TOL",
    "DEFAULT_VACUUM_TOL",
    "BoundConfig",
    "CommandConfig",
    "FockConfig",
    "GffConfig",
    "Grid",
    "LoggingOptions",
    "NuclearityConfig",
    "NumericsOptions",
    "ScalingConfig",
    "VacuumBoundConfig",
    "load_config",
    "validate_config",
]


def load_config(path: str | Path) -> dict[str, Any]:
    """Load a raw configuration mapping from a YAML or JSON file.

    Args:
        path: Path to the configuration file.

    Returns:
        The parsed mapping, not yet validated.

    Raises:
        FileNotFoundError: If the configuration file does not exist.
        ValueError: If the file does not contain a mapping.
    """
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    with config_path.open("r", encoding="utf-8") as f:
        data = yaml.safe_load(f)

    if not isinstance(data, dict):
        raise ValueError(f"Invalid configuration format in {config_path}")

    return data


def validate_config(command: str, data: dict[str, Any]) -> CommandConfig:
    """Validate a mapping against the config model of a subcommand.

    Args:
        command: Subcommand name (bound, gff, vacuum-bound, scaling,
            nuclearity, fock).
        data: Raw configuration mapping.

    Returns:
        The typed config with defaults filled.

    Raises:
        ConfigError: With one ``loc: message`` item per field error.
    """
    model = COMMAND_CONFIGS.get(command)
    if model is None:
        allowed = ", ".join(sorted(COMMAND_CONFIGS))
        raise ConfigError([f"command: unknown command {command!r} (allowed: {allowed})"])
    try:
        config = model.model_validate(data)
    except ValidationError as e:
        items = []
        for error in e.errors():
            loc = ".".join(str(part) for part in error["loc"]) or "<root>"
            items.append(f"{loc}: {error['msg']}")
        raise ConfigError(items) from None
    return cast(CommandConfig, config)
