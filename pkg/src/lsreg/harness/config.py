"""Experiment configuration: YAML files with dotted key names and line-precise validation."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

__all__ = ["ConfigError", "Config", "DEFAULTS", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.line = line


# the reference experiment; every key a config file may set appears here
DEFAULTS: dict[str, Any] = {
    "grid": {"nx": 64, "ny": 64, "x0": 0.0, "x1": 1.0, "y0": 0.0, "y1": 1.0},
    "problem": {
        "kind": "potential",
        "sigma": 1.0,
        "source": 0.0,
        "g": "zero",
        "adjoint": "discrete",
        "f2_literal_trace": False,
    },
    "phantom": {
        "shape": "disk",
        "centers": [[0.5, 0.5]],
        "radii": [0.3],
        "psi1": {"law": "ramp_x", "a": 2.0, "b": 3.0},
        "psi2": {"law": "ramp_y", "a": 1.0, "b": 1.5},
        "box": [0.5, 3.5],
    },
    "init": {"radius": 0.25},
    "noise": {"delta_rel": 0.01, "seed": 42},
    "reg": {
        "alpha": 0.5,
        "alpha_rule": {"c": 100.0, "p": 1.0},
        "beta1": 1e-5,
        "beta2": 1e-3,
        "beta3": 1e-5,
        "eps0": 0.1,
        "eps_decay": 1.0,
        "beta_tv": 1e-2,
    },
    "update": {"scheme": "explicit", "sign_flip": "auto", "backtracking": True},
    "stop": {"tau": 1.5, "max_iters": 500},
    "solver": {"method": "cg", "rel_tol": 1e-10, "max_iters": 20000},
    "out": {"dir": "out"},
}


def _num(v):
    # YAML 1.1 reads "1e-5" as a string
    if isinstance(v, bool):
        raise TypeError("expected a number, got a boolean")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        return float(v)
    raise TypeError(f"expected a number, got {type(v).__name__}")


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError(f"expected an integer, got {v!r}")
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError(f"expected true/false, got {v!r}")
    return v


def _choice(*options):
    def check(v):
        if v not in options:
            raise ValueError(f"expected one of {list(options)}, got {v!r}")
        return v
    return check


def _positive(v):
    v = _num(v)
    if not v > 0:
        raise ValueError(f"must be positive, got {v}")
    return v


def _nonneg(v):
    v = _num(v)
    if v < 0:
        raise ValueError(f"must be non-negative, got {v}")
    return v


def _above_one(v):
    v = _num(v)
    if not v > 1:
        raise ValueError(f"must be larger than 1, got {v}")
    return v


def _fraction(v):
    v = _num(v)
    if not 0 < v <= 1:
        raise ValueError(f"must lie in (0, 1], got {v}")
    return v


def _count(v):
    v = _int(v)
    if v < 0:
        raise ValueError(f"must be non-negative, got {v}")
    return v


def _exponent(v):
    v = _num(v)
    if not 0 < v < 2:
        raise ValueError(f"must lie in (0, 2), got {v}")
    return v


def _optional(check):
    return lambda v: None if v is None else check(v)


def _g(v):
    if v in ("zero", "x", "y"):
        return v
    return _num(v)


def _pairs(v):
    if not isinstance(v, list) or not all(isinstance(p, list) and len(p) == 2 for p in v):
        raise TypeError("expected a list of [x, y] pairs")
    return [[_num(a), _num(b)] for a, b in v]


def _numlist(v):
    if not isinstance(v, list):
        raise TypeError("expected a list of numbers")
    return [_num(a) for a in v]


def _box(v):
    v = _numlist(v)
    if len(v) != 2 or not v[0] < v[1]:
        raise ValueError("box must be [m, M] with m < M")
    return v


def _sign_flip(v):
    if v == "auto" or isinstance(v, bool):
        return v
    raise ValueError(f"expected true, false or auto, got {v!r}")


SCHEMA: dict[str, Callable[[Any], Any]] = {
    "grid.nx": _int, "grid.ny": _int,
    "grid.x0": _num, "grid.x1": _num, "grid.y0": _num, "grid.y1": _num,
    "problem.kind": _choice("potential", "conductivity"),
    "problem.sigma": _positive,
    "problem.source": _num,
    "problem.g": _g,
    "problem.adjoint": _choice("discrete", "harmonic"),
    "problem.f2_literal_trace": _bool,
    "phantom.shape": _choice("disk", "two_disks", "square"),
    "phantom.centers": _pairs,
    "phantom.radii": _numlist,
    "phantom.psi1.law": _choice("constant", "ramp_x", "ramp_y", "radial"),
    "phantom.psi1.a": _num,
    "phantom.psi1.b": _optional(_num),
    "phantom.psi2.law": _choice("constant", "ramp_x", "ramp_y", "radial"),
    "phantom.psi2.a": _num,
    "phantom.psi2.b": _optional(_num),
    "phantom.box": _box,
    "init.radius": _positive,
    "noise.delta_rel": _nonneg,
    "noise.seed": _int,
    "reg.alpha": _positive,
    "reg.alpha_rule.c": _positive,
    "reg.alpha_rule.p": _exponent,
    "reg.beta1": _nonneg, "reg.beta2": _nonneg, "reg.beta3": _nonneg,
    "reg.eps0": _optional(_positive),
    "reg.eps_decay": _fraction,
    "reg.beta_tv": _positive,
    "update.scheme": _choice("explicit", "semi-implicit"),
    "update.sign_flip": _sign_flip,
    "update.backtracking": _bool,
    "stop.tau": _above_one,
    "stop.max_iters": _count,
    "solver.method": _choice("cg", "direct"),
    "solver.rel_tol": _positive,
    "solver.max_iters": _int,
    "out.dir": str,
}

# sections that may be replaced wholesale by null
NULLABLE = {"reg.alpha_rule"}


@dataclass
class Config:
    """Merged configuration; values are addressed by dotted keys."""

    data: dict
    lines: dict[str, int] = field(default_factory=dict)
    source: str | None = None

    def __getitem__(self, key: str):
        node = self.data
        for part in key.split("."):
            if node is None:
                return None
            node = node[part]
        return node

    def set(self, key: str, value) -> None:
        parts = key.split(".")
        node = self.data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value

    def line_of(self, key: str) -> int | None:
        while key:
            if key in self.lines:
                return self.lines[key]
            key = key.rpartition(".")[0]
        return None

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(f"{key}: {message}", self.line_of(key), self.source)

    def copy(self) -> "Config":
        return Config(copy.deepcopy(self.data), dict(self.lines), self.source)


def _key_lines(node, prefix="", out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = f"{prefix}{k.value}"
            out[key] = k.start_mark.line + 1
            _key_lines(v, key + ".", out)
    return out


def _merge(defaults, given, prefix, lines, source):
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        key = f"{prefix}{k}"
        if k not in defaults:
            raise ConfigError(f"unknown key {key!r}", lines.get(key), source)
        if isinstance(defaults[k], dict):
            if v is None and key in NULLABLE:
                out[k] = None
                continue
            if not isinstance(v, dict):
                raise ConfigError(f"{key}: expected a mapping", lines.get(key), source)
            out[k] = _merge(defaults[k], v, key + ".", lines, source)
        else:
            out[k] = v
    return out


def _validate(data, prefix, lines, source):
    for k, v in data.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            _validate(v, key + ".", lines, source)
            continue
        if v is None and key in NULLABLE:
            continue
        try:
            data[k] = SCHEMA[key](v)
        except (TypeError, ValueError) as exc:
            line = lines.get(key)
            while line is None and "." in key:
                key = key.rpartition(".")[0]
                line = lines.get(key)
            raise ConfigError(f"{prefix}{k}: {exc}", line, source) from None


def parse_config(text: str, source: str | None = None) -> Config:
    """Parse YAML text, merge it over :data:`DEFAULTS` and validate every value."""
    try:
        root = yaml.compose(text)
        given = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from None
    given = {} if given is None else given
    if not isinstance(given, dict):
        raise ConfigError("top level must be a mapping", 1, source)
    lines = _key_lines(root) if root is not None else {}
    data = _merge(DEFAULTS, given, "", lines, source)
    _validate(data, "", lines, source)
    return Config(data, lines, source)


def load_config(path: str | Path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path))
