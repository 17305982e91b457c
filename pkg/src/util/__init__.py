"""
Shared plumbing: worker pool, config IO and artifact export
"""

from .config_io import canonical_json, config_digest, dump_yaml, load_yaml
from .export import to_json, write_csv, write_json
from .parallel import close_executor, get_executor, ordered_map, thread_count

__all__ = [
    "canonical_json",
    "close_executor",
    "config_digest",
    "dump_yaml",
    "get_executor",
    "load_yaml",
    "ordered_map",
    "thread_count",
    "to_json",
    "write_csv",
    "write_json",
]
