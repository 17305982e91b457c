"""
YAML and hashing helpers for instance configs
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Union

import yaml

logger = logging.getLogger(__name__)


def load_yaml(path: Union[str, Path]) -> dict:
    """
    Read a single-document YAML config

    Raises:
        OSError: file missing or unreadable
        yaml.YAMLError: malformed document
        ValueError: top level is not a mapping
    """
    with open(path, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle)
    if not isinstance(data, dict):
        raise ValueError(f"Config {path} must be a mapping at the top level")
    return data


def dump_yaml(data: dict, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(data, handle, sort_keys=True, default_flow_style=None)


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_digest(data: Any) -> str:
    """sha256 of the canonical JSON form; independent of key order"""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()
