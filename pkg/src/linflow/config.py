"""Experiment configuration: YAML loading, deep-merged defaults, and
schema validation with named-field errors.

The schema field names (``experiment``, ``grid.s``, ``grid.t_end``,
``grid.n_ladder``, ``mc.n_paths``, ``mc.seed``, ``model.*``, ``solver.*``,
``out``, ``threads``) are normative; the file syntax is YAML.
"""

from __future__ import annotations

import copy
from numbers import Integral, Real

import yaml


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending field."""


def load_config(path) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config root: expected a mapping, got {type(data).__name__}")
    return data


def merge_config(defaults: dict, override: dict | None) -> dict:
    """Deep merge: override values win, nested mappings merge recursively."""
    merged = copy.deepcopy(defaults)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_config(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _dig(cfg: dict, dotted: str):
    node = cfg
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"{dotted}: required field is missing")
        node = node[part]
    return node


def get_int(cfg: dict, dotted: str, *, minimum: int | None = None) -> int:
    value = _dig(cfg, dotted)
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise ConfigError(f"{dotted}: expected integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{dotted}: expected integer >= {minimum}, got {value}")
    return value


def get_float(cfg: dict, dotted: str, *, minimum: float | None = None) -> float:
    value = _dig(cfg, dotted)
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ConfigError(f"{dotted}: expected number, got {value!r}")
    value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{dotted}: expected number >= {minimum}, got {value}")
    return value


def get_ladder(cfg: dict, dotted: str) -> list[int]:
    value = _dig(cfg, dotted)
    if not isinstance(value, (list, tuple)) or len(value) < 2:
        raise ConfigError(f"{dotted}: expected a list of at least two integers, got {value!r}")
    ladder = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, Integral):
            raise ConfigError(f"{dotted}: expected integers, got {item!r}")
        ladder.append(int(item))
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigError(f"{dotted}: ladder must be strictly increasing, got {ladder}")
    return ladder


def get_floats(cfg: dict, dotted: str) -> list[float]:
    value = _dig(cfg, dotted)
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{dotted}: expected a nonempty list of numbers, got {value!r}")
    out = []
    for item in value:
        if isinstance(item, bool) or not isinstance(item, Real):
            raise ConfigError(f"{dotted}: expected numbers, got {item!r}")
        out.append(float(item))
    return out
