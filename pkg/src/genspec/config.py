"""Experiment configuration: flat TOML with dotted keys, parsed strictly.

Example::

    domain.lo = [0, 0, 0]
    domain.hi = [1, 1, 1]
    grid.cells = [8, 8, 8]
    field.kind = "constant"
    field.values = [1, 2, 3]
    solver.method = "dense"
    solver.seed = 1

Unknown keys, wrong types and out-of-range values raise ``ConfigError``
naming the offending key.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import tomli

from .coefficients import FIELD_KINDS, DiagonalTensorField
from .mesh import BoxDomain, StructuredGrid, build_grid


class ConfigError(ValueError):
    pass


# allowed keys per section; value is the expected kind
SCHEMA = {
    "domain": {"lo": "vec", "hi": "vec"},
    "grid": {"cells": "ivec"},
    "field": {
        "kind": "str", "values": "vec", "slope": "vec", "axis": "ivec", "background": "vec",
        "boxes": "boxes", "center": "vec", "amplitude": "vec", "width": "num",
    },
    "solver": {
        "method": "str", "quadrature": "str", "seed": "int", "block": "int", "tol": "num",
        "max_iter": "int", "dense_cap": "int", "vectors": "bool",
    },
    "analysis": {"tol_incl": "num", "oversample": "int", "interval": "vec", "locality": "bool"},
    "fill": {"interval": "vec", "delta": "num", "compare_cells": "ivec"},
    "vr": {"x0": "vec", "axis": "int", "r_list": "vec", "cells_list": "ivec", "collar_min_cells": "num"},
    "box": {
        "x0": "vec", "k1": "num", "k2": "num", "lambda": "num", "h": "num", "n": "int",
        "ladder": "ivec", "subdomain_lo": "vec", "subdomain_hi": "vec", "edge_min_cells": "num",
    },
    "oracle": {"tol": "num", "corrupt": "bool"},
    "assert": {
        "residual_decreasing": "bool", "rayleigh_decreasing": "bool", "l_norm_converging": "bool",
        "within_bound": "bool",
    },
    "output": {"dir": "str"},
}

FIELD_KEYS = {
    "constant": {"values"},
    "axis_affine": {"values", "slope", "axis"},
    "piecewise_constant": {"background", "boxes"},
    "smooth_radial": {"values", "amplitude", "center", "width"},
}


def _check(section, key, kind, value):
    name = f"{section}.{key}"
    num = (int, float)
    if kind == "str" and not isinstance(value, str):
        raise ConfigError(f"{name} must be a string")
    if kind == "bool" and not isinstance(value, bool):
        raise ConfigError(f"{name} must be true or false")
    if kind == "int" and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{name} must be an integer")
    if kind == "num" and (isinstance(value, bool) or not isinstance(value, num)):
        raise ConfigError(f"{name} must be a number")
    if kind in ("vec", "ivec"):
        want = int if kind == "ivec" else num
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, list) or not value or any(
            isinstance(v, bool) or not isinstance(v, want) for v in value
        ):
            raise ConfigError(f"{name} must be a non-empty list of {'integers' if kind == 'ivec' else 'numbers'}")
    if kind == "boxes":
        if not isinstance(value, list):
            raise ConfigError(f"{name} must be an array of tables")
        for i, b in enumerate(value):
            if not isinstance(b, dict) or set(b) != {"lo", "hi", "values"}:
                raise ConfigError(f"{name}[{i}] must have exactly the keys lo, hi, values")
            for k in ("lo", "hi", "values"):
                _check(section, f"boxes[{i}].{k}", "vec", b[k])
    return value


@dataclass
class SolverConfig:
    method: str = "dense"
    quadrature: str = "gauss2"
    seed: int = 0
    block: int = 5
    tol: float = 1e-8
    max_iter: int = 500
    dense_cap: int = 4000
    vectors: bool = False


@dataclass
class ExperimentConfig:
    domain: BoxDomain
    grid: StructuredGrid
    field: DiagonalTensorField
    solver: SolverConfig
    raw: dict = field(default_factory=dict)

    def section(self, name) -> dict:
        return dict(self.raw.get(name, {}))

    def get(self, section, key, default=None):
        return self.raw.get(section, {}).get(key, default)

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def build_field(domain: BoxDomain, params: dict) -> DiagonalTensorField:
    kind = params.get("kind")
    if kind not in FIELD_KINDS:
        raise ConfigError(f"field.kind must be one of {sorted(FIELD_KINDS)}, got {kind!r}")
    extra = set(params) - {"kind"} - FIELD_KEYS[kind]
    if extra:
        raise ConfigError(f"field.{sorted(extra)[0]} is not valid for field.kind = {kind!r}")
    args = {k: v for k, v in params.items() if k != "kind"}
    try:
        return FIELD_KINDS[kind](domain, **args)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field: {exc}") from exc


def parse_config(data: dict, seed: int | None = None) -> ExperimentConfig:
    """Validate a parsed TOML mapping and build the grid and field."""
    raw = {}
    for section, body in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section {section!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"{section} must be a table of dotted keys")
        raw[section] = {}
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            raw[section][key] = _check(section, key, SCHEMA[section][key], value)
    if seed is not None:
        raw.setdefault("solver", {})["seed"] = int(seed)

    for needed in ("domain.lo", "domain.hi", "grid.cells", "field.kind"):
        s, k = needed.split(".")
        if k not in raw.get(s, {}):
            raise ConfigError(f"missing required key {needed}")
    try:
        domain = BoxDomain(tuple(raw["domain"]["lo"]), tuple(raw["domain"]["hi"]))
    except ValueError as exc:
        raise ConfigError(f"domain: {exc}") from exc
    cells = raw["grid"]["cells"]
    for i, c in enumerate(cells):
        if c < 2:
            raise ConfigError(f"grid.cells[{i}] must be >= 2, got {c}")
    try:
        grid = build_grid(domain, cells)
    except ValueError as exc:
        raise ConfigError(f"grid.cells: {exc}") from exc
    fld = build_field(domain, raw["field"])
    solver = SolverConfig(**raw.get("solver", {}))
    if solver.method not in ("dense", "lobpcg"):
        raise ConfigError(f"solver.method must be 'dense' or 'lobpcg', got {solver.method!r}")
    if solver.quadrature not in ("centroid", "gauss2"):
        raise ConfigError(f"solver.quadrature must be 'centroid' or 'gauss2', got {solver.quadrature!r}")
    if solver.block < 1:
        raise ConfigError("solver.block must be >= 1")
    if solver.seed < 0:
        raise ConfigError("solver.seed must be non-negative")
    if not solver.tol > 0:
        raise ConfigError("solver.tol must be positive")
    return ExperimentConfig(domain, grid, fld, solver, raw)


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    return parse_config(data, seed)


def solver_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg.solver)
