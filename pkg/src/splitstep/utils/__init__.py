"""
Utilities package for splitstep.

This package contains the output file writers and the run configuration
file reader/writer.
"""

from .config_file import coerce_value, dump_config, load_config, parse_overrides
from .file_utils import (
    ensure_dir,
    load_matrix,
    load_metadata,
    write_csv,
    write_matrix,
    write_metadata,
    write_text,
)

__all__ = [
    "coerce_value",
    "dump_config",
    "load_config",
    "parse_overrides",
    "ensure_dir",
    "load_matrix",
    "load_metadata",
    "write_csv",
    "write_matrix",
    "write_metadata",
    "write_text",
]
