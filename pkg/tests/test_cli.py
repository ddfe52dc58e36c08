import json

import pytest

from skewfront import cli, speed


def run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_speed_closed_form(capsys):
    code, out, _ = run(capsys, "speed", "--closed-form", "3,1", "--beta", "5")
    assert code == 0
    data = json.loads(out)
    assert data["summary"]["c_star"] == pytest.approx(speed.speed_constant_closed_form(3, 1.0, 5.0).c_star)


def test_gen_env_deterministic(tmp_path, capsys):
    files = []
    for k in range(2):
        f = tmp_path / f"e{k}.json"
        code, _, _ = run(capsys, "gen-env", "--degrees", "3:1.0", "--lengths", "1:1.0", "--horizon", "100",
                         "--seed", "7", "--out", str(f))
        assert code == 0
        files.append(f.read_bytes())
    assert files[0] == files[1]
    manifest = json.loads((tmp_path / "e0.json.manifest.json").read_text())
    assert manifest["subcommand"] == "gen-env" and manifest["seeds"]["seed"] == 7
    assert manifest["config"]["horizon"] == 100


def test_unknown_flag_exit_64(capsys):
    code, _, err = run(capsys, "speed", "--nope")
    assert code == 64 and "usage" in err


def test_unknown_subcommand_exit_64(capsys):
    assert run(capsys, "frobnicate")[0] == 64


def test_strict_validation_exit_2(capsys):
    code, _, _ = run(capsys, "speed", "--closed-form", "10,1", "--beta", "1", "--strict")
    assert code == 2
    code, _, _ = run(capsys, "speed", "--closed-form", "10,1", "--beta", "1")
    assert code == 0


def test_error_exit_1(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    code, _, err = run(capsys, "xi", "--env", str(bad))
    assert code == 1 and "line 1" in err


def test_precedence(tmp_path, capsys, monkeypatch):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"threads": 3, "pde": {"beta": 4.0, "dx": 0.1, "dt": 0.002}}))
    monkeypatch.setenv("SKEWFRONT_DX", "0.07")
    monkeypatch.setenv("SKEWFRONT_DT", "0.004")
    code, out, _ = run(capsys, "pde", "--config", str(conf), "--dt", "0.001", "--show-config")
    cfg = json.loads(out)["config"]
    assert code == 0
    assert cfg["beta"] == 4.0  # file over default
    assert cfg["dx"] == 0.07  # env over file
    assert cfg["dt"] == 0.001  # flag over env
    assert cfg["threads"] == 3 and cfg["t_max"] == 60.0


def test_nonfinite_serialization():
    text = cli.dumps({"a": float("nan"), "b": [float("inf"), -float("inf")], "c": 1.5})
    data = json.loads(text)
    assert data == {"a": "nan", "b": ["inf", "-inf"], "c": 1.5}
    assert "NaN" not in text and "Infinity" not in text


def test_line_xi_inf_is_string(capsys):
    code, out, _ = run(capsys, "xi", "--constant", "2,1", "--horizon", "50")
    assert code == 0
    assert json.loads(out)["summary"]["xi"] == "inf"


def test_csv_output(capsys):
    code, out, _ = run(capsys, "mu", "--constant", "3,1", "--lam", "0.5,1", "--output", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "lam,mu" and len(lines) == 3


def test_validate_reports(capsys):
    code, out, err = run(capsys, "validate", "--constant", "3,1", "--paths", "20000")
    assert code == 0
    assert err.count("PASS") == len(json.loads(out)["rows"])


def test_pde_outputs(tmp_path, capsys):
    out = tmp_path / "front.csv"
    code, _, _ = run(capsys, "pde", "--constant", "3,1", "--beta", "5", "--L", "80", "--t-max", "15",
                     "--snapshots", str(tmp_path / "snap"), "--snapshot-times", "5", "--out", str(out),
                     "--output", "csv")
    assert code == 0
    assert out.read_text().splitlines()[0] == "t,x_front_right,x_front_left"
    assert (tmp_path / "snap" / "snapshot_t5.csv").exists()
    assert (tmp_path / "front.csv.manifest.json").exists()


def test_mc_hit_thread_invariant(capsys):
    a = json.loads(run(capsys, "mc-hit", "--constant", "3,1", "--paths", "5000", "--threads", "1")[1])
    b = json.loads(run(capsys, "mc-hit", "--constant", "3,1", "--paths", "5000", "--threads", "3")[1])
    assert a["summary"]["estimate"] == b["summary"]["estimate"]
