"""
Command-line front end: `python -m src.cli <command> ...`
"""

from .commands import build_parser, run
from .manifest import RunManifest, package_versions

__all__ = ["RunManifest", "build_parser", "package_versions", "run"]
