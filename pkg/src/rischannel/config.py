"""YAML experiment configuration: loading, validation and resolution into library types.

Physical quantities carry their unit in the key name (``theta_in_deg``,
``p_x_over_lambda``, ``snr_db``). Angles are degrees here and radians
everywhere else in the package. Validation happens completely before any
computation so that a bad file never leaves partial outputs behind.
"""

from __future__ import annotations

import math
from typing import Any

import yaml

from .core import Continuous, Discrete, RisGeometry

EXPERIMENTS = ("pattern", "envelope-dist", "keff-sweep", "outage", "ma-sumrate")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a mapping at the top level")
    return data


def _get(block: dict, key: str, where: str, default: Any = ...):
    if key in block:
        return block[key]
    if default is ...:
        raise ConfigError(f"{where}.{key}: required field missing")
    return default


def number(block: dict, key: str, where: str, default: Any = ..., *, lo=None, hi=None,
           lo_open=False, integer=False):
    v = _get(block, key, where, default)
    name = f"{where}.{key}"
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{name}: expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{name}: must be finite")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(f"{name}: must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{name}: must be <= {hi}, got {v}")
    return int(v) if integer else float(v)


def block(cfg: dict, key: str, where: str = "", required: bool = True) -> dict:
    name = f"{where}.{key}" if where else key
    if key not in cfg:
        if required:
            raise ConfigError(f"{name}: required block missing")
        return {}
    b = cfg[key]
    if not isinstance(b, dict):
        raise ConfigError(f"{name}: expected a mapping")
    return b


def number_list(b: dict, key: str, where: str, **kw) -> list:
    v = _get(b, key, where)
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where}.{key}: expected a non-empty list")
    return [number({"x": x}, "x", f"{where}.{key}[{i}]", **kw) for i, x in enumerate(v)]


def sweep(b: dict, key: str, where: str) -> list:
    """A list of values, or a ``{start, stop, step}`` mapping (stop inclusive)."""
    v = _get(b, key, where)
    name = f"{where}.{key}"
    if isinstance(v, list):
        return number_list(b, key, where)
    if not isinstance(v, dict):
        raise ConfigError(f"{name}: expected a list or a start/stop/step mapping")
    start = number(v, "start", name)
    stop = number(v, "stop", name)
    step = number(v, "step", name, lo=0, lo_open=True)
    if stop < start:
        raise ConfigError(f"{name}.stop: must be >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def angle_deg(b: dict, key: str, where: str, default: Any = ...) -> float:
    """Degrees in the open interval (-90, 90), returned in radians."""
    d = number(b, key, where, default)
    if not -90.0 < d < 90.0:
        raise ConfigError(f"{where}.{key}: must lie strictly between -90 and 90 degrees, got {d}")
    return math.radians(d)


def phase_step(b: dict, where: str, key: str = "phase_bits", default: Any = ...) -> float:
    """Quantization step: ``continuous`` -> 0, ``random`` -> 2*pi, integer ``B`` -> 2*pi/2^B."""
    v = _get(b, key, where, default)
    if v == "continuous":
        return 0.0
    if v == "random":
        return 2 * math.pi
    bits = number({key: v}, key, where, integer=True, lo=1, hi=30)
    return 2 * math.pi / 2 ** bits


def quantization(b: dict, where: str, key: str = "phase_bits", default: Any = "continuous"):
    v = _get(b, key, where, default)
    if v == "continuous":
        return Continuous()
    if v == "random":
        raise ConfigError(f"{where}.{key}: 'random' is not a steering quantization")
    return Discrete(number({key: v}, key, where, integer=True, lo=1, hi=30))


def geometry(cfg: dict) -> RisGeometry:
    g = block(cfg, "geometry")
    lam = number(g, "lambda_m", "geometry", 1.0, lo=0, lo_open=True)
    try:
        return RisGeometry(
            m_x=number(g, "m_x", "geometry", integer=True, lo=1),
            m_y=number(g, "m_y", "geometry", 1, integer=True, lo=1),
            p_x=number(g, "p_x_over_lambda", "geometry", 0.5, lo=0, lo_open=True) * lam,
            p_y=number(g, "p_y_over_lambda", "geometry", 0.5, lo=0, lo_open=True) * lam,
            lambda_c=lam,
        )
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc


def check_keys(b: dict, allowed, where: str):
    extra = sorted(set(b) - set(allowed))
    if extra:
        raise ConfigError(f"{where}.{extra[0]}: unknown field")


def dump(cfg: dict) -> list:
    """Resolved config as comment-ready lines with a stable key order."""
    text = yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)
    return text.rstrip("\n").split("\n")
