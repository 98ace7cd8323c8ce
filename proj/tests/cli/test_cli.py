import csv
import json
import os
import subprocess
from pathlib import Path

import jsonschema
import pytest

BIN = os.environ["NLKPP_BIN"]
ROOT = Path(os.environ["NLKPP_ROOT"])
SCHEMAS = ROOT / "schemas"
DATA = ROOT / "data"


def run(*args, env=None, check_code=0):
    full_env = dict(os.environ)
    full_env.update(env or {})
    p = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True, env=full_env, timeout=600)
    if check_code is not None:
        assert p.returncode == check_code, p.stdout + p.stderr
    return p


def validate(doc, name):
    jsonschema.validate(doc, json.loads((SCHEMAS / f"{name}.schema.json").read_text()))


def load_outputs(out_dir, command):
    result = json.loads((out_dir / f"{command}.json").read_text())
    manifest = json.loads((out_dir / f"{command}.manifest.json").read_text())
    validate(result, command)
    validate(manifest, "manifest")
    assert result["manifest"] == f"{command}.manifest.json"
    for name in manifest["outputs"]:
        assert (out_dir / name).exists()
    return result, manifest


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# manifest: ")
    return list(csv.DictReader(lines[1:]))


def test_speed_lk1(tmp_path):
    p = run("speed", "--kernel", DATA / "lk1.json", "--c", 4, "--csv", "--out", tmp_path)
    doc = json.loads(p.stdout)
    validate(doc, "speed")
    d = doc["dispersion"]
    assert d["lambda_star"] == pytest.approx(0.48587, abs=1e-5)
    assert d["c_star"] == pytest.approx(3.3301, abs=1e-4)
    assert d["class"] == "V"
    assert doc["speed"]["multiplicity"] == 1
    result, manifest = load_outputs(tmp_path, "speed")
    assert result == doc
    assert manifest["parameters"]["c"] == 4
    rows = read_csv(tmp_path / "speed_dispersion.csv")
    assert list(rows[0]) == ["lambda", "G", "T", "h"]
    assert len(rows) == 400


def test_check_names_failing_assumption(tmp_path):
    p = run("check", "--kernel", DATA / "bad_q1.json", "--out", tmp_path, check_code=2)
    doc = json.loads(p.stdout)
    validate(doc, "check")
    assert doc["status"] == "error"
    assert doc["error"]["diagnostics"]["assumption"] == "Q1"
    assert "Q1" in doc["failing"]
    load_outputs(tmp_path, "check")


def test_check_passes_lk1():
    doc = json.loads(run("check", "--kernel", DATA / "lk1.json").stdout)
    validate(doc, "check")
    assert doc["failing"] == []
    assert doc["dispersion_ready"]


def test_assumption_failure_in_profile():
    doc = json.loads(run("profile", "--kernel", DATA / "bad_q1.json", "--c", 3, check_code=2).stdout)
    assert doc["error"]["diagnostics"]["assumption"] == "Q1"


def test_mu_star_inside_bracket():
    doc = json.loads(run("mu-star", "--q", 3, "--kappa-plus", 2, "--m", 1).stdout)
    validate(doc, "mu-star")
    (row,) = doc["mu_star"]
    lo, hi = row["bracket"]
    assert lo < row["mu_star"] < hi
    assert row["inside_bracket"]


def test_classify_w_kernel():
    doc = json.loads(run("classify", "--kernel", DATA / "critical_w.json").stdout)
    validate(doc, "classify")
    assert doc["dispersion"]["class"] == "W"
    assert doc["dispersion"]["lambda_star"] == pytest.approx(0.05, rel=1e-12)


def test_params_override():
    doc = json.loads(run("speed", "--kernel", DATA / "lk1.json", "--params", "kappa_plus=3").stdout)
    assert doc["model"]["params"]["kappa_plus"] == 3
    inline = json.loads(run("speed", "--kernel", DATA / "lk1.json", "--params", '{"kappa_plus": 3}').stdout)
    assert inline["dispersion"] == doc["dispersion"]


@pytest.mark.parametrize(
    "args",
    [
        ["speed"],
        ["nonsense"],
        ["speed", "--kernel", "/nonexistent.json"],
        ["speed", "--kernel", DATA / "lk1.json", "--params", "zeta=1"],
        ["evolve", "--kernel", DATA / "lk1.json", "--dt", 1.0],
    ],
)
def test_usage_errors(args):
    run(*args, check_code=1)


def test_no_wave_is_usage_error():
    doc = json.loads(run("profile", "--kernel", DATA / "lk1.json", "--c", 3, check_code=1).stdout)
    assert doc["error"]["kind"] == "no-wave"


def test_non_convergence_exit_code():
    doc = json.loads(
        run("profile", "--kernel", DATA / "lk1.json", "--c", 4, "--max-sweeps", 2, "--max-newton", 0, check_code=3).stdout
    )
    assert doc["error"]["kind"] == "iteration-stalled"
    assert doc["error"]["diagnostics"]["residual_tol"] == 1e-6


def test_profile_then_evolve(tmp_path):
    prof_dir = tmp_path / "profile"
    run("profile", "--kernel", DATA / "lk1.json", "--c", 4, "--csv", "--out", prof_dir)
    result, _ = load_outputs(prof_dir, "profile")
    p = result["profile"]
    assert p["residual_sup"] <= 1e-6
    assert p["tail_fit"]["rate_relative_error"] <= 0.02
    rows = read_csv(prof_dir / "profile.csv")
    assert list(rows[0]) == ["s", "psi"]
    assert len(rows) == p["grid"]["points"]
    # 17 significant digits
    assert len(rows[0]["psi"].replace(".", "").lstrip("0").split("e")[0]) >= 15

    ev_dir = tmp_path / "evolve"
    run("evolve", "--kernel", DATA / "lk1.json", "--u0", "profile-file", "--profile-file", prof_dir / "profile.csv",
        "--dt", 0.002, "--T", 2, "--grid-h", 0.01, "--x-min", -60, "--x-max", 60, "--snapshot-interval", 0.05,
        "--csv", "--out", ev_dir)
    result, manifest = load_outputs(ev_dir, "evolve")
    assert str(prof_dir / "profile.csv") in manifest["inputs"]
    assert result["evolution"]["right_front"]["speed"] == pytest.approx(4.0, rel=0.02)
    fronts = read_csv(ev_dir / "evolve_fronts.csv")
    assert list(fronts[0]) == ["t", "right_front", "left_front"]


def test_uniqueness(tmp_path):
    doc = json.loads(run("uniqueness", "--kernel", DATA / "lk1.json", "--c", 4, "--anchor-b", 5).stdout)
    validate(doc, "uniqueness")
    assert doc["uniqueness"]["distance"] <= 1e-5
    assert doc["uniqueness"]["within_tolerance"]


def test_truncate_sweep(tmp_path):
    run("truncate-sweep", "--kernel", DATA / "lk1.json", "--radii", "2,5,10,20,40", "--csv", "--out", tmp_path)
    result, _ = load_outputs(tmp_path, "truncate-sweep")
    t = result["truncation"]
    assert t["strictly_increasing"] and t["dominated"]
    assert t["final_gap"] <= 1e-6
    rows = read_csv(tmp_path / "truncate_sweep.csv")
    assert list(rows[0]) == ["R", "A_plus", "theta_R", "lambda_star", "c_star", "gap"]
    assert [float(r["R"]) for r in rows] == [2, 5, 10, 20, 40]


def test_sweep_is_deterministic_across_workers(tmp_path):
    args = ["sweep", "--kernel", DATA / "critical_w.json", "--vary", "mu", "--from", 0.01, "--to", 1.5, "--count", 12,
            "--csv"]
    one = run(*args, "--out", tmp_path / "one", env={"NLKPP_WORKERS": "1"})
    four = run(*args, "--out", tmp_path / "four", env={"NLKPP_WORKERS": "4"})
    assert one.stdout == four.stdout
    assert (tmp_path / "one" / "sweep.json").read_bytes() == (tmp_path / "four" / "sweep.json").read_bytes()
    assert (tmp_path / "one" / "sweep.csv").read_bytes() == (tmp_path / "four" / "sweep.csv").read_bytes()
    result, manifest = load_outputs(tmp_path / "four", "sweep")
    assert manifest["workers"] == 4
    classes = [p["class"] for p in result["sweep"]["points"]]
    assert classes[0] == "W" and classes[-1] == "V"
    assert [p["index"] for p in result["sweep"]["points"]] == list(range(12))


def test_identical_runs_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        run("speed", "--kernel", DATA / "lk1.json", "--out", tmp_path / d)
    assert (tmp_path / "a" / "speed.json").read_bytes() == (tmp_path / "b" / "speed.json").read_bytes()


def test_bad_worker_count():
    run("truncate-sweep", "--kernel", DATA / "lk1.json", env={"NLKPP_WORKERS": "zero"}, check_code=1)
