"""
Run configuration files.

Configurations are flat ``key = value`` INI text with one section per
concern. Loading layers ``--set section.key=value`` overrides on top of the
file and validates the result into a ``RunConfig``; dumping writes every
field, defaults included, so the output can be fed straight back in.
"""

import configparser
import io
import os
from typing import Any, Dict, Iterable, List, Optional, Tuple

from ..core.errors import ConfigurationError
from ..core.logging import get_logger
from ..models.run_config import RunConfig

logger = get_logger(__name__)

SECTIONS = ("run", "model", "simulate", "converge", "spde", "theta", "sampler")


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (L, d)
    return parser


def coerce_value(text: str) -> Any:
    """int, float, bool or None when the text reads as one, else the stripped string."""
    value = text.strip()
    lowered = value.lower()
    if lowered in ("none", "null", ""):
        return None
    if lowered in ("true", "false"):
        return lowered == "true"
    for kind in (int, float):
        try:
            return kind(value)
        except ValueError:
            pass
    return value


def parse_overrides(items: Iterable[str]) -> List[Tuple[str, str, str]]:
    """Split ``section.key=value`` strings."""
    parsed = []
    for item in items:
        target, sep, value = item.partition("=")
        section, dot, key = target.strip().partition(".")
        if not sep or not dot or not section or not key:
            raise ConfigurationError(f"override '{item}' is not of the form section.key=value")
        parsed.append((section, key.strip(), value.strip()))
    return parsed


def load_config(
    path: Optional[str] = None,
    overrides: Iterable[str] = (),
    command: Optional[str] = None,
) -> RunConfig:
    """
    Read a configuration file and apply overrides.

    Args:
        path: INI file (optional; defaults apply without one)
        overrides: ``section.key=value`` strings, applied after the file
        command: Subcommand recorded in the result

    Returns:
        RunConfig: Validated configuration

    Raises:
        ConfigurationError: missing file, unreadable INI, unknown section or
            malformed override
        pydantic.ValidationError: a value fails its field's validation
    """
    parser = _parser()
    if path:
        if not os.path.exists(path):
            raise ConfigurationError(f"config file not found: {path}")
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
        logger.debug(f"loaded configuration from {path}")

    for section, key, value in parse_overrides(overrides):
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)

    data: Dict[str, Any] = {"command": command}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigurationError(
                f"unknown config section [{section}]; expected one of {', '.join(SECTIONS)}"
            )
        items = dict(parser.items(section))
        if section == "model":
            name = items.pop("name", None)
            model: Dict[str, Any] = {"params": {k: coerce_value(v) for k, v in items.items()}}
            if name:
                model["name"] = name.strip()
            data["model"] = model
        else:
            data[section] = items
    return RunConfig.model_validate(data)


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    return str(value)


def dump_config(cfg: RunConfig, portable: bool = False) -> str:
    """
    Every section with every value as INI text.

    ``portable=True`` leaves out the worker count and the output directory,
    neither of which changes results, so files echoed next to outputs do not
    depend on them.
    """
    parser = _parser()
    for section in SECTIONS:
        values = getattr(cfg, section).model_dump()
        if section == "model":
            params = values.pop("params")
            values.update({k: params[k] for k in sorted(params)})
        if section == "run" and portable:
            values.pop("threads")
            values.pop("output")
        parser[section] = {k: _format(v) for k, v in values.items()}

    buffer = io.StringIO()
    if cfg.command:
        buffer.write(f"# splitstep {cfg.command}\n")
    parser.write(buffer)
    return buffer.getvalue()
