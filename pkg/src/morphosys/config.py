"""Flat ``section.key = value`` configuration files for simulations."""
from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Union

from .repack import RepackConfig
from .schedulability import AdmissionTest
from .sim import SimConfig
from .transform import GenLimits
from .workload import WorkloadSpec

SECTIONS = {"sim": None, "gen": WorkloadSpec, "repack": RepackConfig, "limits": GenLimits}
# config spellings that differ from attribute names
ALIASES = {("gen", "lambda"): "lam"}
_REVERSE = {(sec, attr): key for (sec, key), attr in ALIASES.items()}


class ConfigError(ValueError):
    pass


def _scalar_fields(obj) -> list[dataclasses.Field]:
    return [f for f in dataclasses.fields(obj) if not dataclasses.is_dataclass(getattr(obj, f.name))]


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, AdmissionTest):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(text: str, current, name: str):
    text = text.strip()
    if text.lower() == "none":
        return None
    if isinstance(current, bool):
        if text.lower() not in ("true", "false"):
            raise ConfigError(f"{name}: expected true/false, got {text!r}")
        return text.lower() == "true"
    if isinstance(current, AdmissionTest):
        try:
            return AdmissionTest(text.lower())
        except ValueError:
            raise ConfigError(f"{name}: unknown admission test {text!r}") from None
    if current is None:
        for kind in (int, float):
            try:
                return kind(text)
            except ValueError:
                pass
        return text
    try:
        if isinstance(current, int):
            return int(text)
        if isinstance(current, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r}") from None
    return text


def dumps(config: SimConfig) -> str:
    lines = []
    for section, _ in SECTIONS.items():
        obj = config if section == "sim" else getattr(config, section)
        for f in _scalar_fields(obj):
            key = _REVERSE.get((section, f.name), f.name)
            lines.append(f"{section}.{key} = {_format(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def loads(text: str, base: SimConfig = None) -> SimConfig:
    """Apply ``section.key = value`` lines (``#`` comments allowed) over ``base``."""
    config = base if base is not None else SimConfig()
    updates: dict[str, dict] = {s: {} for s in SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        section, dot, name = key.partition(".")
        if not dot or section not in SECTIONS:
            raise ConfigError(f"line {lineno}: unknown section in {key!r}")
        attr = ALIASES.get((section, name), name)
        obj = config if section == "sim" else getattr(config, section)
        if attr not in {f.name for f in _scalar_fields(obj)}:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        updates[section][attr] = _parse(value, getattr(obj, attr), key)
    try:
        nested = {s: dataclasses.replace(getattr(config, s), **updates[s])
                  for s in SECTIONS if s != "sim"}
        return dataclasses.replace(config, **updates["sim"], **nested)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load(path: Union[str, Path], base: SimConfig = None) -> SimConfig:
    return loads(Path(path).read_text(), base)


def dump(config: SimConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(config))
