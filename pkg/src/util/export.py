"""
Artifact writers: RFC-4180 CSV through pandas and UTF-8 JSON with sorted keys.
"""

import dataclasses
import json
import logging
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def _json_default(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return dataclasses.asdict(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def to_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False, default=_json_default)


def write_json(data: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(data) + "\n", encoding="utf-8")
    logger.debug(f"[EXPORT] Wrote {path}")
    return path


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """CSV with header row, '.' decimals and CRLF line endings"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\r\n", float_format="%.17g")
    logger.debug(f"[EXPORT] Wrote {path} ({len(frame)} rows)")
    return path
