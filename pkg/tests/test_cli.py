import csv
import json

import pytest

from resonant_tangency.cli import main


def read_rows(path):
    with open(path) as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def header_lines(path):
    with open(path) as fh:
        return [line for line in fh if line.startswith("#")]


def orbit_groups(path):
    return sorted({r["entity"] for r in read_rows(path) if r["entity"].startswith("orbit_k")})


def test_portrait_defaults(tmp_path):
    assert main(["portrait", "--out", str(tmp_path), "--n-iterations", "3"]) == 0
    path = tmp_path / "portrait.csv"
    groups = orbit_groups(path)
    assert len(groups) == 11  # k = 1..4 have no single-round orbit with the stated constants
    assert sum(r["entity"] == "fixed_point" for r in read_rows(path)) == 2
    heads = header_lines(path)
    assert any("missing k=1" in h for h in heads)
    assert any('"alpha": 0.8' in h for h in heads)
    assert (tmp_path / "plot_portrait.py").exists()


def test_portrait_passthrough_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["portrait", "--a10", "-0.2", "--k-max", "3", "--n-iterations", "2"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--jobs", "3"]) == 0
    assert orbit_groups(a / "portrait.csv") == ["orbit_k1", "orbit_k2", "orbit_k3"]
    assert (a / "portrait.csv").read_bytes() == (b / "portrait.csv").read_bytes()
    row = read_rows(a / "portrait.csv")[0]
    assert len(row["y"].replace("-", "").replace(".", "").lstrip("0")) >= 15


def test_portrait_strict_missing_orbit_is_solver_failure(tmp_path):
    assert main(["portrait", "--strict", "--k-max", "3", "--out", str(tmp_path)]) == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["predict", "--alpha", "1.5"],
        ["predict", "--k-max", "40"],
        ["predict", "--k-min", "5", "--k-max", "4"],
        ["predict", "--direction", "7"],
        ["predict", "--v", "1,2"],
        ["predict", "--d50", "0"],
    ],
)
def test_bad_config_exit_code(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_large_k_override(tmp_path):
    assert main(["predict", "--k-max", "40", "--allow-large-k", "--out", str(tmp_path)]) == 0


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("model:\n  alpha: 0.8\n  mu: [0, 0, 0, 0]\nscan:\n  direction: 3\n  k_min: 10\n  k_max: 12\n")
    assert main(["predict", "--config", str(cfg), "--k-max", "11", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "predictions.csv")
    assert [r["k"] for r in rows] == ["10", "11"]
    assert rows[0]["rate"] == "alpha^k"
    head = header_lines(tmp_path / "predictions.csv")[1]
    conf = json.loads(head.split("config: ", 1)[1])
    assert conf["direction"] == 3 and conf["k_max"] == 11
    bad = tmp_path / "bad.yaml"
    bad.write_text("model:\n  gamma: 2\n")
    assert main(["predict", "--config", str(bad), "--out", str(tmp_path)]) == 2
    both = tmp_path / "both.yaml"
    both.write_text("direction: 1\nv: [1, 0, 0, 0]\n")
    assert main(["predict", "--config", str(both), "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("direction, rate", [(2, "alpha^k/k"), (4, "1/k")])
def test_sweep_rate_column(tmp_path, direction, rate):
    code = main(["sweep", "--direction", str(direction), "--k-min", "14", "--k-max", "20",
                 "--out", str(tmp_path), "--jobs", "2"])
    assert code == 0
    rows = read_rows(tmp_path / "bifurcations.csv")
    assert len(rows) == 14
    assert [(int(r["k"]), r["kind"]) for r in rows] == sorted((int(r["k"]), r["kind"]) for r in rows)
    summary = read_rows(tmp_path / "fit_summary.csv")
    assert {r["rate"] for r in summary} == {rate}
    assert (tmp_path / "plot_sweep.py").exists()


def test_sweep_records_failures(tmp_path):
    code = main(["sweep", "--direction", "1", "--k-min", "8", "--k-max", "10", "--out", str(tmp_path)])
    rows = read_rows(tmp_path / "bifurcations.csv")
    assert len(rows) == 6
    assert all(r["status"] != "ok" for r in rows)
    assert code == 3  # nothing left to fit


def test_verify_condition_failure(tmp_path):
    code = main(["verify", "--mu3", "0.1", "--direction", "3", "--k-min", "14", "--k-max", "20",
                 "--out", str(tmp_path)])
    assert code == 1
    report = json.loads((tmp_path / "verify.json").read_text())
    by_name = {c["check"]: c for c in report["checks"]}
    assert by_name["condition: |d1| = 1"]["status"] == "fail"
    assert set(report["checks"][0]) >= {"check", "status", "value", "bound"}
    assert report["config"]["mu"] == [0.0, 0.0, 0.1, 0.0]


def test_verify_insufficient_points(tmp_path):
    code = main(["verify", "--direction", "1", "--k-min", "1", "--k-max", "6", "--out", str(tmp_path)])
    assert code == 1
    report = json.loads((tmp_path / "verify.json").read_text())
    fit = [c for c in report["checks"] if c["check"].startswith("direction 1 fit")]
    assert fit and "insufficient points" in fit[0]["detail"]
    delta = [c for c in report["checks"] if c["check"] == "discriminant Delta0"][0]
    assert delta["value"] == 2.25
