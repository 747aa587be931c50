import json
import math

import numpy as np
import pytest

from lzslab import __version__
from lzslab.cli import (PAPER_FIGURES, SCHEMA, RunConfig, SweepResult, build_parser,
                        resolve_config, run, validate)
from lzslab.errors import ConfigError


def _read_csv(path):
    meta, rows = {}, []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            key, val = line[2:].split(": ", 1)
            meta[key] = val
        else:
            rows.append(line.split(","))
    return meta, rows[0], np.array(rows[1:], dtype=float)


def test_config_roundtrip(tmp_path, capsys):
    assert run(["emit-config", "lzs-sweep"]) == 0
    text = capsys.readouterr().out
    cfg = RunConfig.from_json(text)
    assert cfg.to_json() == text
    path = tmp_path / "c.json"
    path.write_text(text)
    assert run(["emit-config", "--config", str(path)]) == 0
    assert capsys.readouterr().out == text


def test_emit_config_applies_figure_preset(capsys):
    assert run(["emit-config", "--paper-figure", "5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["command"] == "lzs-sweep"
    assert doc["parameters"]["gamma"] == 0.3 and doc["parameters"]["alpha"] == 0.1


def test_every_figure_alias_resolves():
    parser = build_parser()
    for key, (command, preset) in PAPER_FIGURES.items():
        cfg = resolve_config(parser.parse_args(["--paper-figure", key]))
        assert cfg.command == command
        for k, v in preset.items():
            assert cfg.parameters[k] == v


def test_figure_alias_conflicting_command():
    assert run(["lzs-sweep", "--paper-figure", "7"]) == 2
    assert run(["--paper-figure", "99"]) == 2


def test_validation_messages_carry_line_numbers(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "command": "lz-populations",\n  "parameters": {\n    "delta_primes": []\n  }\n}\n')
    assert run(["--config", str(bad)]) == 2
    assert f"{bad}:4:" in capsys.readouterr().err
    bad.write_text('{\n  "command": "lzs-sweep",\n  "parameters": {"E_min": 0.01,\n "colour": 1}\n}\n')
    assert run(["--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert f"{bad}:4:" in err and "'colour'" in err


def test_corrupt_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"command": "lzs-sweep", "parameters": {')
    assert run(["--config", str(bad)]) == 2
    assert run(["--config", str(tmp_path / "missing.json")]) == 2


@pytest.mark.parametrize("override", ["n_points=1", "E_min=0.2", "alpha=\"x\"", "nope=3"])
def test_bad_overrides(override):
    assert run(["lzs-sweep", "--set", override]) == 2


def test_schema_validation_fills_defaults():
    p = validate("lzs-sweep", {"gamma": 0})
    assert p["gamma"] == 0.0 and isinstance(p["gamma"], float)
    assert p["n_points"] == SCHEMA["lzs-sweep"]["n_points"][1]
    with pytest.raises(ConfigError):
        validate("lz-populations", {"delta_primes": []})
    with pytest.raises(ConfigError):
        validate("lz-populations", {"F": float("nan")})


def test_sweep_result_shape_check():
    with pytest.raises(ValueError):
        SweepResult("x", [1, 2], {"y": [1]}, {})
    text = SweepResult("x", [-0.0, 0.1], {"y": [1 / 3, 2.0]}, {"a": 1}).to_csv()
    assert text.splitlines() == ["# a: 1", "x,y", "0,0.33333333333333331", "0.10000000000000001,2"]


def test_lz_populations_output(tmp_path):
    out = tmp_path / "o"
    args = ["lz-populations", "--out", str(out), "--jobs", "1",
            "--set", "n_points=12", "--set", "za_min=30"]
    assert run(args) == 0
    meta, header, data = _read_csv(out / "lz_populations.csv")
    assert meta["lzslab_version"] == __version__ and meta["command"] == "lz-populations"
    assert json.loads(meta["parameters"])["n_points"] == 12
    assert header[0] == "z_a" and "P_mp[dp=0]" in header and "asym_P_mp[dp=2]" in header
    plateau = data[:, header.index("P_mp[dp=0]")]
    assert np.allclose(plateau, math.exp(-9 * math.pi / 16), rtol=1e-2)
    za = data[:, 0]
    grow = data[:, header.index("P_mp[dp=2]")]
    slope = np.polyfit(np.log(za), np.log(grow), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)
    assert meta["branch_P_mp[dp=2]"] == "power_law exponent=2"


def test_determinism_byte_identical(tmp_path):
    outs = []
    for i, jobs in enumerate(("1", "2")):
        out = tmp_path / f"r{i}"
        assert run(["lzs-sweep", "--out", str(out), "--jobs", jobs, "--set", "n_points=4"]) == 0
        outs.append((out / "lzs_sweep.csv").read_bytes())
    assert outs[0] == outs[1]


def test_hermitian_lzs_sweep_agreement(tmp_path):
    out = tmp_path / "h"
    assert run(["lzs-sweep", "--out", str(out), "--jobs", "1", "--set", "gamma=0",
                "--set", "E_max=0.05", "--set", "n_points=5"]) == 0
    _, header, data = _read_csv(out / "lzs_sweep.csv")
    assert data[:, header.index("abs_diff")].max() <= 1e-3


def test_band_structure_and_bloch_outputs(tmp_path):
    out = tmp_path / "b"
    assert run(["--paper-figure", "3b", "--out", str(out), "--set", "n_k=21"]) == 0
    meta, header, data = _read_csv(out / "band_structure.csv")
    assert len(json.loads(meta["exceptional_points_kd"])) == 4
    assert header == ["kd", "re_E_plus", "im_E_plus", "re_E_minus", "im_E_minus"]
    assert run(["bloch-populations", "--out", str(out), "--set", "E_field=0.05",
                "--set", "n_samples=50"]) == 0
    _, header, data = _read_csv(out / "bloch_populations.csv")
    assert header == ["t", "P_mp", "P_mm"] and len(data) == 51


def test_waveguide_single_run_outputs(tmp_path):
    out = tmp_path / "w"
    args = ["waveguide", "--out", str(out), "--set", "n_sites=120", "--set", "E_field=0.1",
            "--set", "x0=90", "--set", "samples_per_period=8"]
    with pytest.warns(Warning):
        assert run(args) == 0
    meta, header, data = _read_csv(out / "waveguide_com.csv")
    assert header == ["z", "com", "upper_weight", "lower_weight"] and len(data) == 9
    assert data[0, 1] == pytest.approx(90.0)
    # moves towards negative x first
    assert data[2, 1] < data[0, 1] - 5
    assert "analytic_com_full_period" in meta
    snap = (out / "waveguide_snapshots.csv").read_text().splitlines()
    assert snap[0].startswith("# ")
    assert "z,site,re_psi,im_psi,intensity,intensity_rel" in snap


def test_strict_mode_turns_contamination_into_exit_1(tmp_path):
    args = ["waveguide", "--out", str(tmp_path), "--strict", "--set", "n_sites=120",
            "--set", "E_field=0.1", "--set", "x0=90", "--set", "samples_per_period=8"]
    assert run(args) == 1


def test_numerical_failure_exit_code(tmp_path):
    # the beam cannot fit: the margin check is a numerical-domain error
    args = ["waveguide", "--out", str(tmp_path), "--set", "n_sites=60", "--set", "E_field=0.05"]
    assert run(args) == 1


def test_selftest_quick(tmp_path, capsys):
    assert run(["selftest", "--quick", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "selftest.json").read_text())
    assert report["passed"] and report["quick"]
    assert capsys.readouterr().out.count("PASS") == len(report["checks"])


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("LZSLAB_OUT_DIR", str(tmp_path / "env"))
    assert run(["band-structure", "--set", "n_k=5"]) == 0
    assert (tmp_path / "env" / "band_structure.csv").exists()


def test_jobs_must_be_positive():
    assert run(["band-structure", "--jobs", "0"]) == 2


def test_exceptional_point_is_a_numerical_failure(tmp_path, capsys):
    args = ["lzs-sweep", "--out", str(tmp_path), "--jobs", "1", "--set", "gamma=0.4",
            "--set", "n_points=2"]
    assert run(args) == 1
    assert "ExceptionalPointError" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "lzslab", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
    res = subprocess.run([sys.executable, "-m", "lzslab", "band-structure", "--set", "alpha=oops"],
                         capture_output=True, text=True)
    assert res.returncode == 2
