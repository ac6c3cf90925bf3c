import copy
import csv
import io
import json
import os
import subprocess
import sys

import pytest
from click.testing import CliRunner

from orbitherm import outputs
from orbitherm.cli import main
from orbitherm.config import config_hash, parse_config
from orbitherm.errors import ConfigError

from conftest import CONFIGS

BASE = json.loads((CONFIGS / "demo_pressure.json").read_text())


def small(tmp_path, **override):
    raw = copy.deepcopy(BASE)
    raw["n_range"] = [1, 5]
    raw["t_grid"] = [0, 1, 2]
    raw.update(override)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    return p


def errors_of(raw):
    with pytest.raises(ConfigError) as ei:
        parse_config(raw)
    return dict(ei.value.violations)


def test_all_shipped_configs_parse():
    names = sorted(p.name for p in CONFIGS.glob("*.json"))
    assert len(names) >= 8
    for p in CONFIGS.glob("*.json"):
        parse_config(p.read_bytes())


def test_missing_disks_pointer():
    raw = copy.deepcopy(BASE)
    del raw["group"]["disks"]
    assert "/group/disks" in errors_of(raw)


def test_bad_types_pointer():
    raw = copy.deepcopy(BASE)
    raw["n_range"] = [1, "nine"]
    assert "/n_range/1" in errors_of(raw)
    raw = copy.deepcopy(BASE)
    raw["knobs"] = {"stepp": 0.1}
    assert "/knobs" in errors_of(raw)


def test_semantic_errors():
    raw = copy.deepcopy(BASE)
    raw["n_range"] = [1, 12]
    assert "/n_range/1" in errors_of(raw)
    raw = copy.deepcopy(BASE)
    raw["group"]["generators"][0] = [1, 0, 0, -1]
    assert "/group/generators/0" in errors_of(raw)


def test_halving_violation_is_reported():
    raw = copy.deepcopy(BASE)
    b = {"type": "Bump", "target": {"type": "ClosedOrbit", "word": "a"}}
    raw["potentials"] = {"phi": {"type": "WeightedSum", "terms": [[1.0, b], [0.75, b]]}}
    errs = errors_of(raw)
    assert "/potentials/phi/terms/1/0" in errs
    assert "halving" in errs["/potentials/phi/terms/1/0"]


def test_not_json():
    assert "" in errors_of(b"{not json")


def test_hash_ignores_key_order():
    a = copy.deepcopy(BASE)
    b = json.loads(json.dumps(a, sort_keys=True))
    assert config_hash(a) == config_hash(b)
    b["t_grid"] = [0]
    assert config_hash(a) != config_hash(b)


def test_csv_format():
    text = outputs.to_csv(["t", "x", "flag"], [[0.1, 1, True], [2.0, -3, False]])
    assert "\r" not in text and text.endswith("\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows == [["t", "x", "flag"], ["0.1", "1", "1"], ["2.0", "-3", "0"]]


def test_cli_check_and_pressure(tmp_path):
    cfg = small(tmp_path)
    r = CliRunner().invoke(main, ["--config", str(cfg), "--out", str(tmp_path / "o"), "check"])
    assert r.exit_code == 0, r.output
    assert "PASS check.ping_pong" in r.output
    r = CliRunner().invoke(main, ["--config", str(cfg), "--out", str(tmp_path / "o"), "pressure-curve"])
    assert r.exit_code == 0, r.output
    env = json.loads((tmp_path / "o" / "pressure-curve.json").read_text())
    assert env["config_hash"] == parse_config(cfg.read_bytes()).hash
    assert env["failures"] == [] and env["header"][0] == "t"
    assert (tmp_path / "o" / "pressure-curve.csv").read_bytes().count(b"\n") == 4


def test_cli_bad_config_exit_code(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"group": {"generators": []}}))
    r = CliRunner().invoke(main, ["--config", str(p), "check"])
    assert r.exit_code == outputs.EXIT_ERROR
    assert "/n_range" in r.output


def test_cli_failed_verdict_exit_code(tmp_path):
    # a single zero-temperature point cannot concentrate the mass
    cfg = small(tmp_path, t_grid=[0.0], regions=[{"id": "target", "target": {"type": "ClosedOrbit", "word": "a"}}])
    r = CliRunner().invoke(main, ["--config", str(cfg), "--out", str(tmp_path / "o"), "zero-temp"])
    assert r.exit_code == outputs.EXIT_VERDICT, r.output
    assert "FAIL zero-temp.mass_at_t_max" in r.output


def test_cache_reuse(tmp_path):
    cfg = small(tmp_path)
    args = ["--config", str(cfg), "--out", str(tmp_path / "o"), "--cache", str(tmp_path / "c"), "pressure-curve"]
    assert CliRunner().invoke(main, args).exit_code == 0
    first = (tmp_path / "o" / "pressure-curve.csv").read_bytes()
    cached = list((tmp_path / "c").rglob("*.json"))
    assert len(cached) == 1
    assert CliRunner().invoke(main, args).exit_code == 0
    assert (tmp_path / "o" / "pressure-curve.csv").read_bytes() == first


def test_numpy_backend_cli_agrees(tmp_path):
    cfg = small(tmp_path)
    outs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, ORBITHERM_NO_NUMBA=flag)
        out = tmp_path / f"o{flag}"
        r = subprocess.run([sys.executable, "-m", "orbitherm.cli", "--config", str(cfg), "--out", str(out),
                            "pressure-curve"], env=env, capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        outs[flag] = list(csv.reader(open(out / "pressure-curve.csv")))
    for a, b in zip(outs["0"][1:], outs["1"][1:]):
        assert [float(x) for x in a] == pytest.approx([float(x) for x in b], rel=1e-9, abs=1e-12)
