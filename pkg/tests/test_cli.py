import json
import math
import subprocess
import sys

import numpy as np
import pytest

from caplab.cli import UsageError, main, make_config
from caplab.mesh import load_mesh
from caplab.shapes import cap, generate

HALF_PI = "1.5707963267948966"


@pytest.fixture(scope="module")
def cap_off(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "cap.off"
    assert main(["generate", "--shape", "cap", "--theta", "1.5708", "--radius", "1", "--res", "3",
                 "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def two_caps_off(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "two.off"
    assert main(["generate", "--shape", "two-caps", "--theta", HALF_PI, "--res", "3", "--out", str(path)]) == 0
    return path


def read_json(path):
    return json.loads(path.read_text())


def test_generate_round_trip(cap_off):
    m = load_mesh(cap_off)
    ref = generate(cap(theta=1.5708), 3)
    assert np.array_equal(m.vertices, ref.vertices)


def test_generate_arc_csv(tmp_path):
    out = tmp_path / "arc.csv"
    assert main(["generate", "--theta", "1.0", "--dimension", "1", "--res", "3", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "x,y,boundary,component"
    assert load_mesh(out).dimension == 1


@pytest.mark.parametrize("shape", ["sphere", "perturbed", "probe"])
def test_generate_shapes(tmp_path, shape):
    out = tmp_path / f"{shape}.off"
    argv = ["generate", "--shape", shape, "--theta", HALF_PI, "--res", "2", "--out", str(out)]
    if shape == "sphere":
        argv += ["--center", "0,0,3"]
    if shape == "perturbed":
        argv += ["--amplitude", "0.05"]
    assert main(argv) == 0
    assert load_mesh(out).n_vertices > 0


def test_verify_identities(cap_off, tmp_path):
    out = tmp_path / "ids.json"
    assert main(["verify-identities", str(cap_off), "--theta", "1.5708", "--out", str(out)]) == 0
    rep = read_json(out)
    assert rep["schema_version"] == 1
    assert rep["pass"] is True
    assert len(rep["residuals"]) == 6
    assert all(r["relative"] < 0.02 for r in rep["residuals"])


def test_verify_identities_check_failure_exit_code(cap_off, tmp_path):
    assert main(["verify-identities", str(cap_off), "--theta", "1.5708", "--tolerance", "1e-12",
                 "--out", str(tmp_path / "x.json")]) == 2


def test_theta_out_of_range(tmp_path, capsys):
    assert main(["stability", str(tmp_path / "bad.off"), "--theta", "7", "--seed", "0"]) == 1
    assert "theta out of range" in capsys.readouterr().err


def test_seed_required(cap_off, capsys):
    assert main(["stability", str(cap_off), "--theta", HALF_PI]) == 1
    assert "--seed" in capsys.readouterr().err


def test_unknown_flag_and_subcommand(cap_off):
    assert main(["stability", str(cap_off), "--theta", HALF_PI, "--seed", "0", "--bogus"]) == 1
    assert main(["frobnicate"]) == 1
    assert main([]) == 1


def test_missing_input(tmp_path, capsys):
    assert main(["verify-identities", str(tmp_path / "nope.off"), "--theta", HALF_PI]) == 1
    assert "unreadable" in capsys.readouterr().err


def test_config_file_precedence(tmp_path, cap_off):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"theta": 1.0, "seed": 4, "budget": 123}))
    cfg = make_config(["stability", str(cap_off), "--config", str(conf), "--theta", "1.2"])
    assert cfg.theta == 1.2 and cfg.seed == 4 and cfg.budget == 123
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(UsageError):
        make_config(["stability", str(cap_off), "--config", str(bad)])
    extra = tmp_path / "extra.json"
    extra.write_text(json.dumps({"theta": 1.0, "colour": "red"}))
    with pytest.raises(UsageError, match="unknown config keys"):
        make_config(["stability", str(cap_off), "--config", str(extra), "--seed", "1"])


def test_nonpositive_tolerance_rejected(cap_off):
    with pytest.raises(UsageError):
        make_config(["verify-identities", str(cap_off), "--theta", HALF_PI, "--tolerance", "-1"])


def test_stability_deterministic_across_threads(two_caps_off, tmp_path):
    outs = []
    for threads in ("1", "1", "3"):
        out = tmp_path / f"s{len(outs)}.json"
        code = main(["stability", str(two_caps_off), "--theta", HALF_PI, "--seed", "11", "--budget", "30000",
                     "--threads", threads, "--out", str(out)])
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    rep = json.loads(outs[0])
    assert len(rep["clusters"]) == 2
    assert rep["checks"]["separated"]


def test_threads_env_var(two_caps_off, tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["stability", str(two_caps_off), "--theta", HALF_PI, "--seed", "2", "--budget", "20000"]
    assert main(argv + ["--out", str(a)]) == 0
    monkeypatch.setenv("CAPLAB_THREADS", "4")
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_inequalities(cap_off, tmp_path):
    out, csv = tmp_path / "ineq.json", tmp_path / "density.csv"
    assert main(["inequalities", str(cap_off), "--theta", HALF_PI, "--density-points", "3",
                 "--out", str(out), "--csv", str(csv)]) == 0
    rep = read_json(out)
    assert rep["pass"] is True
    assert [r["name"] for r in rep["records"]][:3] == ["michael_simon[f=1]", "michael_simon[f=1+x_n+1]",
                                                       "michael_simon[f=random]"]
    assert rep["topping_ratio"] == pytest.approx(1 / (2 * math.pi), rel=2e-2)
    assert csv.read_text().splitlines()[0] == "x_id,r,V_wulff_over_rn,V_euclid_over_rn"


def test_analyze(cap_off, tmp_path):
    out = tmp_path / "a.json"
    assert main(["analyze", str(cap_off), "--theta", HALF_PI, "--seed", "0", "--out", str(out)]) == 0
    rep = read_json(out)
    assert rep["region"]["volume"] == pytest.approx(2 * math.pi / 3, rel=2e-2)
    assert rep["contact_angle"]["no_contact"] is False


def test_profile_csv(cap_off, tmp_path):
    out, csv = tmp_path / "p.json", tmp_path / "p.csv"
    code = main(["profile", str(cap_off), "--theta", HALF_PI, "--seed", "0", "--budget", "40000", "--lambda", "2",
                 "--r-grid", "0.3,0.6", "--rho-grid", "0.2", "--tolerance", "0.1", "--dilated-tolerance", "0.1",
                 "--out", str(out), "--csv", str(csv)])
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "r,volume,stderr,model,residual"
    assert len(lines) == 3
    assert read_json(out)["profile"]["inclusion_violations"] == 0


def test_stdout_when_no_out(cap_off, capsys):
    assert main(["verify-identities", str(cap_off), "--theta", HALF_PI]) == 0
    assert json.loads(capsys.readouterr().out)["command"] == "verify-identities"


def test_module_entry_point(cap_off):
    res = subprocess.run([sys.executable, "-m", "caplab", "verify-identities", str(cap_off), "--theta", "7"],
                         capture_output=True, text=True)
    assert res.returncode == 1
    assert "theta out of range" in res.stderr
