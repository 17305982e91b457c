"""
Run manifests: what was run, on which inputs, with which seeds and packages.
"""

import logging
import sys
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Dict, List, Optional

from ..model import __version__
from ..model.errors import PreconditionError
from ..util.config_io import config_digest
from ..util.export import write_json

logger = logging.getLogger(__name__)

TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "pyyaml")


def package_versions() -> Dict[str, str]:
    versions = {"orthant-hjb": __version__, "python": sys.version.split()[0]}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


@dataclass
class RunManifest:
    command: str
    argv: List[str]
    config_hash: Optional[str]
    seeds: Dict[str, int] = field(default_factory=dict)
    versions: Dict[str, str] = field(default_factory=package_versions)
    wall_time: float = 0.0
    outputs: List[str] = field(default_factory=list)
    settings: Dict[str, object] = field(default_factory=dict)

    @staticmethod
    def hash_configs(*configs: Optional[dict]) -> Optional[str]:
        present = [c for c in configs if c is not None]
        if not present:
            return None
        return config_digest(present[0] if len(present) == 1 else present)

    def write(self, out_dir: Path) -> Path:
        """
        Write <command>.manifest.json next to the outputs

        Raises:
            PreconditionError: a listed output is missing
        """
        missing = [p for p in self.outputs if not Path(p).exists()]
        if missing:
            raise PreconditionError(f"outputs listed in the manifest do not exist: {missing}")
        path = write_json(asdict(self), Path(out_dir) / f"{self.command}.manifest.json")
        logger.info(f"[CLI] Manifest written to {path}")
        return path
