"""
Layered run settings.

Precedence, lowest first: packaged ``data/defaults.yaml``, the YAML file named
by ``SPDT_SETTINGS_FILE``, ``SPDT_<KEY>`` environment variables (a ``.env`` in
the working directory is loaded first), then explicit overrides such as CLI
flags.
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

ENV_PREFIX = "SPDT_"
SETTINGS_FILE_ENV = "SPDT_SETTINGS_FILE"
DEFAULTS_PATH = Path(__file__).resolve().parents[2] / "data" / "defaults.yaml"

_TRUE_STRINGS = {"1", "true", "yes", "on"}
_FALSE_STRINGS = {"0", "false", "no", "off"}

# In-memory cache so repeated lookups don't re-read YAML and the environment
_cache: Optional[Dict[str, Any]] = None


def _read_yaml(path: Path) -> Dict[str, Any]:
    with open(path, "r") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path} must contain a mapping")
    return data


def _coerce(raw: str, like: Any) -> Any:
    if isinstance(like, bool):
        text = raw.strip().lower()
        if text in _TRUE_STRINGS:
            return True
        if text in _FALSE_STRINGS:
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw


def load_defaults() -> Dict[str, Any]:
    return _read_yaml(DEFAULTS_PATH)


def _merge_known(target: Dict[str, Any], updates: Mapping[str, Any], origin: str) -> None:
    for key, value in updates.items():
        if key not in target:
            logger.warning(f"Ignoring unknown setting '{key}' from {origin}")
            continue
        target[key] = value


def load_settings() -> Dict[str, Any]:
    """Resolve defaults, user file and environment; cached after the first call."""
    global _cache
    if _cache is not None:
        return _cache

    settings = load_defaults()
    load_dotenv(Path.cwd() / ".env", override=False)

    user_file = os.environ.get(SETTINGS_FILE_ENV)
    if user_file:
        path = Path(user_file)
        try:
            _merge_known(settings, _read_yaml(path), str(path))
        except (OSError, ValueError, yaml.YAMLError) as exc:
            logger.warning(f"Failed to read settings file {path}: {exc}")

    for key, default in list(settings.items()):
        raw = os.environ.get(ENV_PREFIX + key.upper())
        if raw is None:
            continue
        try:
            settings[key] = _coerce(raw, default)
        except ValueError as exc:
            logger.warning(f"Ignoring {ENV_PREFIX + key.upper()}={raw!r}: {exc}")

    _cache = settings
    return _cache


def resolve_settings(overrides: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """Settings with explicit overrides on top; None values are ignored."""
    settings = dict(load_settings())
    if overrides:
        _merge_known(settings, {k: v for k, v in overrides.items() if v is not None}, "overrides")
    return settings


def reset_settings_cache() -> None:
    global _cache
    _cache = None
