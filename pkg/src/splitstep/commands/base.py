"""
Shared plumbing for command handlers.
"""

from pathlib import Path
from typing import Any, Dict

from ..models.run_config import RunConfig
from ..utils.config_file import dump_config
from ..utils.file_utils import (
    EFFECTIVE_CONFIG_FILE,
    METADATA_FILE,
    ensure_dir,
    write_metadata,
    write_text,
)


def output_dir(cfg: RunConfig) -> Path:
    return ensure_dir(cfg.run.output)


def finish_run(cfg: RunConfig, out: Path, meta: Dict[str, Any]) -> None:
    """
    Write the metadata sidecar and the effective configuration.

    Both leave out the thread count and the output directory, so reruns
    into another directory or on more workers give identical files.
    """
    config_echo = cfg.model_dump(mode="json")
    config_echo["run"].pop("threads", None)
    config_echo["run"].pop("output", None)
    write_metadata({"command": cfg.command, **meta, "config": config_echo}, out / METADATA_FILE)
    write_text(dump_config(cfg, portable=True), out / EFFECTIVE_CONFIG_FILE)
