from __future__ import annotations

import csv
import json
import math

import pytest

from lamshoot import cli
from lamshoot.cli import TRAJECTORY_HEADER, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- validation and exit codes ------------------------------------------------------

@pytest.mark.parametrize(
    "argv, message",
    [
        (["explicit", "--lambda", "0.5"], "lambda must be <= 0"),
        (["explicit", "--m", "1"], "m must be >= 2"),
        (["shoot", "--R", "-1"], "R must be positive"),
        (["shoot", "--m", "3", "--n", "2"], "shooting requires m = n"),
        (["find-rstar", "--m", "3", "--n", "2"], "shooting requires m = n"),
        (["sweep", "--r-from", "-1", "--r-to", "3"], "R must be positive"),
        (["shoot", "--no-such-flag"], "unrecognized arguments"),
        (["nonsense"], "invalid choice"),
        (["export"], "--input"),
    ],
)
def test_invalid_arguments_exit_with_one(capsys, argv, message):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert message in err


def test_missing_command_is_invalid(capsys):
    assert run(capsys)[0] == 1


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit) as info:
        main(["shoot", "--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    for text in ("(default: 1e-10)", "(default: 1e-12)", "(default: 1e-06)", "(default: 100.0)", "(default: 8.0)"):
        assert text in out


# -- explicit -----------------------------------------------------------------------

def test_explicit_reports_closed_forms(capsys, tmp_path):
    out = tmp_path / "e.json"
    code, _, _ = run(capsys, "explicit", "--m", "2", "--n", "2", "--lambda", "-0.5", "--format", "json", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert (doc["line_x"], doc["line_y"], doc["circle_radius"]) == (1.0, 1.0, 2.0)
    assert max(doc["max_residual"].values()) < 1e-12
    assert doc["passed"] is True


def test_explicit_csv_to_stdout(capsys):
    code, out, _ = run(capsys, "explicit")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["solution", "value", "max_residual"]
    assert rows[3][:2] == ["circle_radius", "2"]


# -- shoot ----------------------------------------------------------------------------

def test_shoot_circle_radius(capsys, tmp_path):
    out = tmp_path / "c.csv"
    code, stdout, _ = run(capsys, "shoot", "--R", "2.0", "--out", str(out))
    assert code == 0
    assert "outcome=HitsXAxis" in stdout
    rows = read_csv(out)
    assert tuple(rows[0]) == TRAJECTORY_HEADER
    assert len(rows) > 10
    assert float(rows[1][1]) == math.sqrt(2) / 2 * 2.0 or abs(float(rows[1][1]) - math.sqrt(2)) < 1e-15


def test_shoot_large_radius_returns(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, stdout, _ = run(capsys, "shoot", "--R", "8.0", "--out", str(out))
    assert code == 0 and "outcome=ReturnsToLine" in stdout
    last = read_csv(out)[-1]
    assert abs(float(last[5])) < 1e-10  # s back on the line


def test_trajectory_values_round_trip_at_full_precision(capsys, tmp_path):
    out = tmp_path / "s.csv"
    run(capsys, "shoot", "--R", "3.3", "--out", str(out))
    for row in read_csv(out)[1:50]:
        for field in row:
            assert cli.fmt(float(field)) == field


def test_shoot_json_format(capsys, tmp_path):
    out = tmp_path / "s.json"
    assert run(capsys, "shoot", "--R", "8", "--format", "json", "--out", str(out))[0] == 0
    doc = json.loads(out.read_text())
    assert doc["outcome"] == "ReturnsToLine"
    assert list(doc["trajectory"][0]) == list(TRAJECTORY_HEADER)


# -- find-rstar -------------------------------------------------------------------------

def test_find_rstar_writes_result_and_curve(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _, _ = run(capsys, "find-rstar", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert list(doc) == [
        "params", "r_star", "bracket", "iterations", "closure_gap",
        "perp_residual", "max_eq_residual", "n_samples",
    ]
    assert doc["perp_residual"] < 1e-6
    assert doc["bracket"][1] - doc["bracket"][0] < 1e-10
    rows = read_csv(tmp_path / "r_curve.csv")
    assert tuple(rows[0]) == TRAJECTORY_HEADER
    assert len(rows) - 1 == doc["n_samples"]


def test_find_rstar_unreachable_tolerance_still_writes(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "find-rstar", "--r-tol", "1e-30", "--out", str(out))
    assert code == 3
    assert "tolerance not met" in err
    assert json.loads(out.read_text())["perp_residual"] < 1e-6
    assert (tmp_path / "r_curve.csv").exists()


def test_find_rstar_rejects_zero_lambda(capsys):
    code, _, err = run(capsys, "find-rstar", "--lambda", "0")
    assert code == 1 and "lambda < 0" in err


def test_numerical_failure_exits_with_two(capsys, monkeypatch):
    from lamshoot.shooting import BracketFailure

    def fail(*args, **kwargs):
        raise BracketFailure("no returning shot")

    monkeypatch.setattr(cli, "find_rstar", fail)
    code, _, err = run(capsys, "find-rstar")
    assert code == 2 and "bracket failure" in err


# -- sweep ---------------------------------------------------------------------------------

def test_sweep_table(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--r-from", "2.2", "--r-to", "8.0", "--count", "20", "--out", str(out))
    assert code == 0
    rows = read_csv(out)
    assert rows[0] == ["R", "outcome", "phi_end", "s_max", "T"]
    flags = [r[1] == "ReturnsToLine" for r in rows[1:]]
    assert len(flags) == 20
    assert sum(a != b for a, b in zip(flags, flags[1:])) == 1


def test_empty_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--count", "0")
    assert code == 0
    assert out == "R,outcome,phi_end,s_max,T\n"


# -- verify ---------------------------------------------------------------------------------

def test_verify_defaults_pass(capsys, tmp_path):
    out = tmp_path / "v.json"
    code, stdout, _ = run(capsys, "verify", "--out", str(out))
    assert code == 0
    assert "L4.1" in stdout and "failed" not in stdout
    doc = json.loads(out.read_text())
    assert [r["status"] for r in doc["reports"]] == ["passed"] * 9


def test_verify_zero_lambda_warns(capsys):
    code, _, err = run(capsys, "verify", "--lambda", "0")
    assert code == 1 and "warning" in err


def test_verify_unequal_dimensions_skips(capsys, tmp_path):
    out = tmp_path / "v.json"
    code, _, _ = run(capsys, "verify", "--m", "3", "--n", "2", "--out", str(out))
    statuses = {r["lemma"]: r["status"] for r in json.loads(out.read_text())["reports"]}
    assert statuses["L4.1"] == statuses["L4.2-scaling"] == "skipped"
    assert code == (0 if all(s != "failed" for s in statuses.values()) else 2)


# -- export --------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def curve_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("curve")
    assert main(["find-rstar", "--out", str(d / "r.json")]) == 0
    return d / "r_curve.csv"


def test_export_plot_is_symmetric_closed_polygon(capsys, tmp_path, curve_file):
    out = tmp_path / "p.csv"
    assert run(capsys, "export", "--input", str(curve_file), "--out", str(out))[0] == 0
    rows = read_csv(out)
    assert rows[0] == ["x", "y"]
    pts = [(float(x), float(y)) for x, y in rows[1:]]
    assert pts[0] == pts[-1]
    assert set(pts) == {(y, x) for x, y in pts}


def test_export_ambient_points_project_to_their_source(capsys, tmp_path, curve_file):
    out = tmp_path / "a.csv"
    code, _, _ = run(
        capsys, "export", "--input", str(curve_file), "--mode", "ambient", "--samples", "10", "--out", str(out)
    )
    assert code == 0
    rows = read_csv(out)
    assert rows[0] == ["p1", "p2", "p3", "p4"]
    source = [(float(r[1]), float(r[2])) for r in read_csv(curve_file)[1:]]
    assert len(rows) - 1 == 10 * len(source)
    for i, row in enumerate(rows[1:]):
        p = [float(v) for v in row]
        x, y = source[i // 10]
        assert abs(math.hypot(p[0], p[1]) - x) < 1e-12
        assert abs(math.hypot(p[2], p[3]) - y) < 1e-12


def test_export_seed_controls_the_samples(capsys, tmp_path, curve_file):
    paths = []
    for seed in ("1", "1", "2"):
        out = tmp_path / f"a{len(paths)}.csv"
        run(capsys, "export", "--input", str(curve_file), "--mode", "ambient", "--seed", seed, "--out", str(out))
        paths.append(out.read_bytes())
    assert paths[0] == paths[1] != paths[2]


def test_export_missing_input(capsys, tmp_path):
    code, _, err = run(capsys, "export", "--input", str(tmp_path / "nope.csv"))
    assert code == 1 and "cannot read input" in err


def test_export_rejects_tables_without_coordinates(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run(capsys, "export", "--input", str(bad))[0] == 1


# -- configuration ----------------------------------------------------------------------------

def test_config_file_is_overridden_by_flags(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment\nm = 3\nn = 3\nlambda = -1\n")
    code, out, _ = run(capsys, "explicit", "--config", str(cfg))
    assert code == 0 and "2.3166247903553998" in out
    code, out, _ = run(capsys, "explicit", "--config", str(cfg), "--n", "2")
    assert code == 0 and "0.73205080756887719" in out


@pytest.mark.parametrize("text", ["m 3\n", "bogus = 1\n", "m = three\n", "format = xml\n"])
def test_bad_config_files_are_invalid(capsys, tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert run(capsys, "explicit", "--config", str(cfg))[0] == 1


def test_missing_config_file_is_invalid(capsys, tmp_path):
    assert run(capsys, "explicit", "--config", str(tmp_path / "none.cfg"))[0] == 1


# -- serialization --------------------------------------------------------------------------------

def test_json_outputs_round_trip(capsys, tmp_path):
    for argv in (["find-rstar"], ["verify"], ["explicit", "--format", "json"], ["sweep", "--format", "json", "--count", "3"]):
        out = tmp_path / "o.json"
        run(capsys, *argv, "--out", str(out))
        text = out.read_text()
        assert cli.dumps(json.loads(text)) == text


def test_non_finite_numbers_become_null():
    assert cli.dumps({"a": math.nan, "b": [math.inf, 1.0]}) == '{\n  "a": null,\n  "b": [\n    null,\n    1.0\n  ]\n}\n'


def test_repeated_runs_are_byte_identical(capsys, tmp_path, curve_file):
    commands = [
        ["explicit"],
        ["shoot", "--R", "5"],
        ["sweep", "--count", "5"],
        ["find-rstar"],
        ["verify"],
        ["export", "--input", str(curve_file), "--mode", "ambient", "--samples", "2"],
    ]
    for argv in commands:
        blobs = []
        for k in range(2):
            out = tmp_path / f"{argv[0]}{k}.out"
            run(capsys, *argv, "--out", str(out))
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1], argv
