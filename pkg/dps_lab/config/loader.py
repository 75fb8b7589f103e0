"""
Run configuration loading

Precedence (lowest to highest):
    built-in defaults < profile preset < config file < explicit CLI flags

Config files are plain-text `key = value` lines with `#` comments. Keys are
TrainConfig field names. Environment variables are never consulted.
"""

import hashlib
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import structlog
from dotenv import dotenv_values
from pydantic import ValidationError

from ..errors import ConfigurationError, StorageError
from .settings import PROFILE_ITERATIONS, Profile, TrainConfig

logger = structlog.get_logger(__name__)


def read_config_file(path: Path) -> Tuple[Dict[str, str], str]:
    """Parse a key = value file; returns the values and the sha256 of its content"""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise StorageError(f"Cannot read config file {path}: {e}", details={"path": str(path)})

    values = dotenv_values(path, interpolate=False)
    unknown = sorted(set(values) - set(TrainConfig.model_fields))
    if unknown:
        raise ConfigurationError(
            f"Unknown config keys: {', '.join(unknown)}",
            "UNKNOWN_CONFIG_KEY",
            {"path": str(path), "keys": unknown},
        )
    empty = sorted(key for key, value in values.items() if value is None or value == "")
    if empty:
        raise ConfigurationError(
            f"Config keys without a value: {', '.join(empty)}",
            details={"path": str(path), "keys": empty},
        )
    return dict(values), hashlib.sha256(raw).hexdigest()


def resolve_train_config(
    overrides: Optional[Dict[str, Any]] = None,
    config_path: Optional[Path] = None,
    profile: Optional[Profile] = None,
) -> Tuple[TrainConfig, Optional[str]]:
    """
    Build a TrainConfig from defaults, profile, config file and flag overrides

    Args:
        overrides: explicit values (None entries are ignored)
        config_path: optional key = value file
        profile: iteration preset; an explicit n_iter anywhere above wins

    Returns:
        (config, sha256 of the config file or None)
    """
    merged: Dict[str, Any] = {}
    config_hash = None

    file_values: Dict[str, Any] = {}
    if config_path is not None:
        file_values, config_hash = read_config_file(config_path)

    flag_values = {key: value for key, value in (overrides or {}).items() if value is not None}

    chosen_profile = flag_values.get("profile") or file_values.get("profile") or profile
    if chosen_profile is not None:
        chosen_profile = Profile(chosen_profile)
        merged["profile"] = chosen_profile
        merged["n_iter"] = PROFILE_ITERATIONS[chosen_profile]

    merged.update(file_values)
    merged.update(flag_values)

    try:
        config = TrainConfig(**merged)
    except ValidationError as e:
        raise ConfigurationError(
            f"Invalid run configuration: {e.error_count()} error(s)",
            details={"errors": [err["msg"] for err in e.errors()]},
        )

    if config.factor not in config.factor_sweep:
        raise ConfigurationError(
            f"Sub-sampling factor {config.factor} is not in the sweep set {config.factor_sweep}",
            "FACTOR_NOT_ALLOWED",
            {"factor": config.factor, "factor_sweep": config.factor_sweep},
        )

    logger.debug("config_resolved", profile=config.profile.value, n_iter=config.n_iter, config_file=str(config_path))
    return config, config_hash
