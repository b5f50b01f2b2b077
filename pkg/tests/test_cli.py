"""Command-line interface: config handling and end-to-end verbs."""

from argparse import Namespace

import numpy as np
import pytest

from homonmr.cli import (
    ConfigError,
    build_config,
    main,
    parse_config_text,
    parse_sweep,
    parse_taus,
)
from homonmr.hamiltonian import ROTATING_SECULAR_HOMO, TWO_PI
from homonmr.sequence import parse_sequence


def test_parse_config_text_valid():
    text = """
# comment only

preset = cytosine   # trailing comment
j_hz = 7.1
t2_s = 2.0
"""
    values = parse_config_text(text)
    assert values == {"preset": "cytosine", "j_hz": "7.1", "t2_s": "2.0"}


def test_parse_config_text_errors():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config_text("just words")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text("flavor = strange")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config_text("j_hz = 1\nj_hz = 2")


def test_build_config_defaults():
    system, model = build_config(Namespace())
    assert system.j == pytest.approx(TWO_PI * 7.1)
    assert system.delta_omega0 == pytest.approx(TWO_PI * 765.0, rel=1e-9)
    assert model.variant == ROTATING_SECULAR_HOMO


def test_build_config_overrides(tmp_path):
    cfg = tmp_path / "sys.cfg"
    cfg.write_text("delta_hz = 500\nj_hz = 5\nt2_s = 2.5\n"
                   "model = RotatingSecularHetero\n")
    system, model = build_config(Namespace(config=str(cfg)))
    assert system.delta_omega0 == pytest.approx(TWO_PI * 500.0, rel=1e-9)
    assert system.j == pytest.approx(TWO_PI * 5.0)
    assert system.t2 == 2.5
    assert model.variant == "RotatingSecularHetero"
    # An explicit flag beats the config file.
    _, flagged = build_config(Namespace(config=str(cfg),
                                        model="ConventionalOffset"))
    assert flagged.variant == "ConventionalOffset"


def test_build_config_rejects_bad_values(tmp_path):
    missing = Namespace(config=str(tmp_path / "nope.cfg"))
    with pytest.raises(ConfigError, match="not found"):
        build_config(missing)
    bad_preset = tmp_path / "preset.cfg"
    bad_preset.write_text("preset = argon\n")
    with pytest.raises(ConfigError, match="preset"):
        build_config(Namespace(config=str(bad_preset)))
    bad_model = tmp_path / "model.cfg"
    bad_model.write_text("model = Heisenberg\n")
    with pytest.raises(ConfigError, match="model"):
        build_config(Namespace(config=str(bad_model)))
    bad_number = tmp_path / "number.cfg"
    bad_number.write_text("j_hz = seven\n")
    with pytest.raises(ConfigError, match="number"):
        build_config(Namespace(config=str(bad_number)))


def test_parse_taus():
    assert parse_taus(None) is None
    assert parse_taus("5.229e-3") == pytest.approx(5.229e-3)
    assert parse_taus("1e-3,2e-3") == (pytest.approx(1e-3),
                                       pytest.approx(2e-3))
    with pytest.raises(ConfigError):
        parse_taus("wide")
    with pytest.raises(ConfigError):
        parse_taus("1,2,3")


def test_parse_sweep():
    grid = parse_sweep("0.0698,0.0710,7")
    assert len(grid) == 7
    assert grid[0] == pytest.approx(0.0698)
    assert grid[-1] == pytest.approx(0.0710)
    for bad in ("1,2", "a,b,c", "0.2,0.1,5", "0.1,0.2,1"):
        with pytest.raises(ConfigError):
            parse_sweep(bad)


def test_cli_distance_csv(tmp_path):
    out = tmp_path / "dist.csv"
    argv = ["distance", "--kind", "compensated", "--t-max", "0.14",
            "--points", "21", "--format", "csv", "--out", str(out)]
    assert main(argv) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,closed_form,numeric,abs_diff"
    assert len(lines) == 22
    worst = max(float(line.split(",")[3]) for line in lines[1:])
    assert worst < 1e-8
    # Deterministic output: a second run is byte-identical.
    out2 = tmp_path / "dist2.csv"
    assert main(argv[:-1] + [str(out2)]) == 0
    assert out.read_text() == out2.read_text()


def test_cli_dj_single_json(tmp_path, capsys):
    out = tmp_path / "dj.json"
    argv = ["dj", "--label", "f1", "--model", "RotatingSecularHetero",
            "--out", str(out)]
    assert main(argv) == 0
    text = out.read_text()
    assert '"classification": "constant"' in text
    assert '"left_intensity"' in text
    capsys.readouterr()


def test_cli_dj_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    argv = ["dj", "--label", "f3", "--model", "RotatingSecularHetero",
            "--sweep", "0.0698,0.0704,2", "--format", "csv",
            "--out", str(out)]
    assert main(argv) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "label,t_j,classification,left_intensity"
    assert len(lines) == 3
    assert all(line.split(",")[2] == "balanced" for line in lines[1:])


def test_cli_pps_json(tmp_path):
    out = tmp_path / "pps.json"
    argv = ["pps", "--tau", "5.229e-3", "--out", str(out)]
    assert main(argv) == 0
    text = out.read_text()
    assert '"dominant": "00"' in text
    assert '"dominant_is_00": true' in text


def test_cli_parse_and_translate(tmp_path, capsys):
    src = tmp_path / "seq.txt"
    src.write_text("s1: pi/2 y ; s2: pi/2 -y\nboth: delay 1/2J\n"
                   "s2: pi x\n")
    canon = tmp_path / "canon.txt"
    assert main(["parse", str(src), "--out", str(canon)]) == 0
    original = parse_sequence(src.read_text())
    assert parse_sequence(canon.read_text()) == original

    soft = tmp_path / "soft.txt"
    assert main(["translate", str(src), "--tau", "5.229e-3",
                 "--out", str(soft)]) == 0
    soft_text = soft.read_text()
    assert "width" in soft_text
    translated = parse_sequence(soft_text)
    assert translated != original
    capsys.readouterr()


def test_cli_error_exit_codes(tmp_path, capsys):
    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("flux = 88\n")
    assert main(["pps", "--config", str(bad_cfg)]) == 2
    src = tmp_path / "seq.txt"
    src.write_text("s1: pi x\n")
    assert main(["translate", str(src)]) == 2
    assert main(["translate", str(src), "--tau", "1e-4"]) == 2
    assert main(["parse", str(tmp_path / "ghost.txt")]) == 2
    assert main(["dj", "--label", "all"]) == 2
    assert main(["validate-rwa", "--larmor1-hz", "5e8"]) == 2
    capsys.readouterr()


def test_cli_validate_rwa(tmp_path):
    out = tmp_path / "rwa.json"
    argv = ["validate-rwa", "--out", str(out)]
    assert main(argv) == 0
    text = out.read_text()
    assert '"pass": true' in text
    assert '"richardson_lab"' in text
