import json
from pathlib import Path

import pytest
import tomli

from genspec.coefficients import AxisAffine, PiecewiseConstant, SmoothRadial
from genspec.config import ConfigError, load_config, parse_config
from genspec.io import dumps_json, write_csv, write_json

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

MINIMAL = {
    "domain": {"lo": [0, 0, 0], "hi": [1, 1, 1]},
    "grid": {"cells": [4, 4, 4]},
    "field": {"kind": "constant", "values": [1, 2, 3]},
}


def with_(**patch):
    data = json.loads(json.dumps(MINIMAL))
    for dotted, value in patch.items():
        sec, key = dotted.split("__")
        data.setdefault(sec, {})[key] = value
    return data


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert cfg.grid.d == 3 and len(cfg.config_hash) == 16


def test_field_kinds():
    assert isinstance(load_config(CONFIGS / "spectrum_piecewise.toml").field, PiecewiseConstant)
    assert isinstance(load_config(CONFIGS / "spectrum_lobpcg.toml").field, SmoothRadial)
    cfg = parse_config(with_(field__kind="axis_affine", field__slope=[1, 0, 0], field__axis=[0]))
    assert isinstance(cfg.field, AxisAffine)


def test_defaults_and_seed_override():
    cfg = parse_config(MINIMAL)
    assert cfg.solver.method == "dense" and cfg.solver.seed == 0
    assert parse_config(MINIMAL, seed=9).solver.seed == 9


def test_hash_is_stable_and_sensitive():
    a = parse_config(MINIMAL).config_hash
    assert a == parse_config(json.loads(json.dumps(MINIMAL))).config_hash
    assert a != parse_config(with_(solver__seed=4)).config_hash
    assert a != parse_config(MINIMAL, seed=4).config_hash


@pytest.mark.parametrize(
    "patch, key",
    [
        (dict(grid__cells=[4, -4, 4]), "grid.cells"),
        (dict(grid__cells=[4, 4]), "grid.cells"),
        (dict(solver__colour=1), "solver.colour"),
        (dict(nonsense__x=1), "nonsense"),
        (dict(solver__method="qr"), "solver.method"),
        (dict(solver__seed=-1), "solver.seed"),
        (dict(solver__seed="1"), "solver.seed"),
        (dict(field__kind="spiral"), "field.kind"),
        (dict(field__width=0.3), "field.width"),
        (dict(domain__hi=[1, 0, 1]), "domain"),
    ],
)
def test_bad_configs_name_the_key(patch, key):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        parse_config(with_(**patch))


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("grid.cells = [")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_toml_round_trip_of_minimal(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('domain.lo = [0, 0, 0]\ndomain.hi = [1, 1, 1]\ngrid.cells = [4, 4, 4]\n'
                 'field.kind = "constant"\nfield.values = [1, 2, 3]\n')
    assert tomli.loads(p.read_text()) == MINIMAL
    assert load_config(p).config_hash == parse_config(MINIMAL).config_hash


def test_io_formats(tmp_path):
    assert dumps_json({"b": 1, "a": [0.1]}).index('"a"') < dumps_json({"b": 1, "a": [0.1]}).index('"b"')
    write_json(tmp_path / "x.json", {"z": 1.5})
    assert json.loads((tmp_path / "x.json").read_text()) == {"z": 1.5}
    write_csv(tmp_path / "x.csv", ["a", "b"], [(1, 0.1), (2, 1 / 3)])
    lines = (tmp_path / "x.csv").read_text().splitlines()
    assert lines[0] == "a,b" and float(lines[2].split(",")[1]) == 1 / 3
    assert not list(tmp_path.glob("*.tmp*"))
