import json

import pytest

from jacobiflow.cli import ConfigError, main, parse_config, validate_config


def _write(tmp_path, text, name="scenario.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _run(tmp_path, text, *extra):
    cfg = _write(tmp_path, text)
    out = tmp_path / "out"
    return main(["--config", cfg, "--out", str(out), *extra]), out


FLOW_CFG = """\
# harmonic oscillator round trip
mode = flow
system = harmonic_oscillator
t_end = 2.0
dt = 1e-3
probes = 10
seed = 3
"""


def test_flow_scenario_passes(tmp_path, capsys):
    code, out = _run(tmp_path, FLOW_CFG)
    assert code == 0
    assert (out / "trajectory.csv").exists()
    inv = json.loads((out / "invariance.json").read_text())
    led = json.loads((out / "ledger.json").read_text())
    assert inv["all_passed"] is True
    assert inv["flow_jacobians"]["classification"] == "Jacobimorphism"
    assert inv["rho_transform"]["classification"] == "Jacobimorphism"
    assert "version" in inv and "config" in inv
    assert led["passed"] is True
    lines = capsys.readouterr().out.splitlines()
    assert any(line.startswith("flow jacobians: Jacobimorphism") for line in lines)
    assert "scenario: PASS" in lines


def test_flow_csv_header_and_first_row(tmp_path):
    code, out = _run(tmp_path, FLOW_CFG)
    assert code == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "tau,q1,p1,eps,t,v1,f1,r"
    assert lines[1] == "0,1,0,0,0,0,-1,0"


def test_flow_outputs_are_deterministic(tmp_path):
    cfg = _write(tmp_path, FLOW_CFG)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", cfg, "--out", str(out_a)]) == 0
    assert main(["--config", cfg, "--out", str(out_b)]) == 0
    for name in ("trajectory.csv", "invariance.json", "ledger.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_seed_override_changes_probes(tmp_path):
    cfg = _write(tmp_path, FLOW_CFG)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", cfg, "--out", str(out_a)]) == 0
    assert main(["--config", cfg, "--out", str(out_b), "--seed", "99"]) == 0
    assert (out_a / "trajectory.csv").read_bytes() == (out_b / "trajectory.csv").read_bytes()
    assert (out_a / "invariance.json").read_bytes() != (out_b / "invariance.json").read_bytes()


def test_nested_out_dir_is_created(tmp_path):
    cfg = _write(tmp_path, FLOW_CFG)
    out = tmp_path / "deep" / "nested" / "dir"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    assert (out / "invariance.json").exists()


def test_map_identity_passes(tmp_path):
    code, out = _run(tmp_path, "mode = map\nmap = identity\nprobes = 6\nseed = 1\n")
    assert code == 0
    inv = json.loads((out / "invariance.json").read_text())
    assert inv["check"]["classification"] == "Jacobimorphism"
    assert inv["map"] == "identity"


def test_map_t_doubling_fails(tmp_path, capsys):
    code, out = _run(tmp_path, "mode = map\nmap = t_doubling\nprobes = 6\nseed = 1\n")
    assert code == 1
    inv = json.loads((out / "invariance.json").read_text())
    assert inv["check"]["classification"] == "Neither"
    assert inv["all_passed"] is False
    assert abs(inv["check"]["lambda_residual_max"] - 3.0) < 1e-6
    assert "map t_doubling: Neither" in capsys.readouterr().out


def test_map_rotation_passes(tmp_path):
    code, out = _run(tmp_path, "mode = map\nmap = rotation\nn = 2\nprobes = 5\n")
    assert code == 0
    inv = json.loads((out / "invariance.json").read_text())
    assert inv["check"]["classification"] == "Jacobimorphism"


def test_driven_flow_with_params(tmp_path):
    code, out = _run(
        tmp_path,
        "mode = flow\nsystem = driven_oscillator\nt_end = 5.0\ndt = 1e-3\n"
        "amplitude = 0.4\ndrive_frequency = 1.5\nseed = 2\n",
    )
    assert code == 0
    inv = json.loads((out / "invariance.json").read_text())
    assert inv["config"]["params"]["amplitude"] == 0.4
    assert inv["config"]["params"]["drive_frequency"] == 1.5
    assert inv["all_passed"] is True


def test_selftest_passes(tmp_path, capsys):
    out = tmp_path / "st"
    assert main(["--selftest", "--out", str(out), "--n", "3"]) == 0
    data = json.loads((out / "selftest.json").read_text())
    assert data["all_passed"] is True
    assert all(c["passed"] for c in data["checks"])
    text = capsys.readouterr().out
    assert "selftest: PASS" in text
    assert "lie_algebra" in text


def test_selftest_fuzz_detects_perturbation(tmp_path):
    out = tmp_path / "st"
    assert main(["--selftest", "--out", str(out), "--fuzz", "1e-3"]) == 0
    data = json.loads((out / "selftest.json").read_text())
    names = [c["name"] for c in data["checks"]]
    assert "fuzz_pattern_violation" in names
    fuzz = next(c for c in data["checks"] if c["name"] == "fuzz_pattern_violation")
    assert fuzz["passed"] is True


@pytest.mark.parametrize(
    "text",
    [
        "mode = flow\ndt = 0\nt_end = 1.0\n",
        "mode = flow\ndt = -1e-3\nt_end = 1.0\n",
        "mode = warp\n",
        "unknown_key = 1\n",
        "seed = 1\nseed = 2\n",
        "dt = fast\n",
        "z0 = 1 0\n",
        "method = euler\n",
        "system = pendulum\n",
        "probes = 0\n",
        "mode = map\nmap = teleport\n",
        "t_end = 0.0\n",
        "mode = flow\n\njust words\n",
    ],
)
def test_bad_configs_exit_2(tmp_path, text, capsys):
    code, _ = _run(tmp_path, text)
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.cfg")]) == 2
    assert "config error" in capsys.readouterr().err


def test_no_mode_arguments(capsys):
    assert main([]) == 2
    assert "--config or --selftest" in capsys.readouterr().err


def test_parse_config_grammar(tmp_path):
    path = _write(
        tmp_path,
        "# comment line\nmode = flow\n\nz0 = 0 2 0 0   # trailing comment\nt_end = 3.0\n",
    )
    cfg, present = parse_config(path)
    assert cfg["z0"] == [0.0, 2.0, 0.0, 0.0]
    assert present == {"mode", "z0", "t_end"}
    cfg = validate_config(cfg, present)
    assert cfg["system"] == "harmonic_oscillator"  # default survives


def test_param_for_wrong_system_is_rejected(tmp_path, capsys):
    # g belongs to constant_force; the oscillator constructor refuses it
    code, _ = _run(tmp_path, "mode = flow\nsystem = harmonic_oscillator\ng = 2.0\nt_end = 1.0\n")
    assert code == 2
    assert "config error" in capsys.readouterr().err
