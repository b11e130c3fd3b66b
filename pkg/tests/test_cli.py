import json
import math

import pytest
from numpy.testing import assert_allclose

from app import cli
from app.core.config import settings
from app.core.errors import NotConverged
from app.services.verify import CheckRow, SuiteResult


def _run(capsys, argv):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.startswith("{") else out)


def test_john_square(capsys, write_json, square):
    code, out = _run(capsys, ["john", "--body", write_json("square.json", square)])
    assert code == 0
    assert out["result"]["radius"] == pytest.approx(1.0, abs=1e-6)
    assert out["meta"]["seed"] == 0
    assert out["meta"]["command"] == "john"


def test_john_diamond_radius(capsys, write_json):
    code, out = _run(capsys, ["john", "--body", write_json("diamond.json", {"type": "pball", "p": 1, "dim": 2})])
    assert code == 0
    assert out["result"]["radius"] == pytest.approx(0.70711, abs=1e-3)


def test_malformed_json_exit_2(capsys, caplog, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"type": "pball", "p": 2,,}', encoding="utf-8")
    assert cli.main(["john", "--body", str(bad)]) == 2
    assert "line 1, column" in caplog.text


def test_bl_triangle(capsys, write_json, triangle):
    code, out = _run(capsys, ["bl", "--body", write_json("t.json", triangle), "--method", "exact"])
    assert code == 0
    assert_allclose(out["result"]["metric"]["matrix"], [[2.0, -1.0], [-1.0, 2.0]], atol=1e-9)


def test_bl_montecarlo_echoes_stderr(capsys, write_json, disk):
    code, out = _run(
        capsys,
        ["bl", "--body", write_json("d.json", disk), "--method", "montecarlo", "--samples", "100000", "--seed", "7"],
    )
    assert code == 0
    metric = out["result"]["metric"]
    assert "stderr" in metric
    for i in range(2):
        for j in range(2):
            assert abs(metric["matrix"][i][j] - float(i == j)) <= 4.0 * metric["stderr"][i][j] + 1e-12
    assert out["meta"]["samples"] == 100000 and out["meta"]["seed"] == 7


@pytest.mark.parametrize(
    "metric, expected",
    [("funk", math.log(2.0)), ("rfunk", math.log(1.5)), ("hilbert", 0.5 * math.log(3.0))],
)
def test_dist_disk(capsys, write_json, disk, metric, expected):
    path = write_json("disk.json", disk)
    code, out = _run(capsys, ["dist", "--domain", path, "--metric", metric, "--from", "0,0", "--to", "0.5,0"])
    assert code == 0
    assert out["result"]["distance"] == pytest.approx(expected, abs=1e-6)


def test_dist_negative_coordinates(capsys, write_json, disk):
    code, out = _run(capsys, ["dist", "--domain", write_json("disk.json", disk), "--from=-0.5,0", "--to", "0,0"])
    assert code == 0
    assert out["result"]["distance"] == pytest.approx(math.log(1.5))


def test_dist_outside_exit_4(capsys, write_json, disk):
    code = cli.main(["dist", "--domain", write_json("disk.json", disk), "--from", "0,0", "--to", "2,0"])
    assert code == 4


def test_dist_bad_point_exit_2(capsys, write_json, disk):
    assert cli.main(["dist", "--domain", write_json("disk.json", disk), "--from", "0,a", "--to", "0,0"]) == 2


@pytest.mark.parametrize("command", ["john", "bl"])
def test_unbounded_polytope_exit_4(capsys, write_json, command):
    strip = {"type": "polytope_h", "A": [[1, 0], [0, 1], [-1, 0]], "b": [1, 1, 1]}
    assert cli.main([command, "--body", write_json("strip.json", strip)]) == 4


def test_pathlen_segment(capsys, write_json, disk):
    path = write_json("disk.json", disk)
    code, out = _run(capsys, ["pathlen", "--domain", path, "--from", "0,0", "--to", "0.5,0"])
    assert code == 0
    assert out["result"]["length"] == pytest.approx(math.log(2.0), abs=1e-6)
    code, out = _run(capsys, ["pathlen", "--domain", path, "--metric", "hilbert", "--from", "0,0", "--to", "0.5,0"])
    assert out["result"]["length"] == pytest.approx(0.5 * math.log(3.0), abs=1e-6)


def test_pathlen_field_file(capsys, write_json, disk):
    field = write_json("field.json", {"domain": disk, "drift": {"kind": "constant", "c": [0.2, 0.0]}})
    polyline = write_json("path.json", {"points": [[-0.5, 0.0], [0.5, 0.0]]})
    code, out = _run(capsys, ["pathlen", "--field", field, "--path", polyline])
    assert code == 0
    assert out["result"]["field"] == "constant"
    assert out["result"]["length"] == pytest.approx(1.25)


def test_zermelo_bl(capsys, write_json, disk):
    code, out = _run(capsys, ["zermelo-bl", "--body", write_json("disk.json", disk), "--u", "0.5,0"])
    assert code == 0
    assert_allclose(out["result"]["metric"], [[0.5, 0.0], [0.0, 1.0]], atol=1e-8)


def test_verify_writes_csv(tmp_path):
    out = tmp_path / "radius.csv"
    assert cli.main(["verify", "--suite", "pball-radius", "--dim", "2", "--out", str(out)]) == 0
    text = out.read_text(encoding="utf-8")
    assert "suite,check_id,body_id,n,measured,bound,bound_source,pass" in text
    assert "# seed: 0" in text
    assert (tmp_path / "radius.radii.csv").exists()


def test_verify_failure_exit_1(monkeypatch, capsys):
    row = CheckRow("john-bounds", "john-2n", "square", 2, 5.0, 4.0, "johnequality3", False)
    monkeypatch.setattr(cli, "run_suite", lambda *a, **k: SuiteResult("john-bounds", 2, 0, [row]))
    assert cli.main(["verify", "--suite", "john-bounds"]) == 1
    assert "john-2n" in capsys.readouterr().out


def test_numerical_failure_exit_3(monkeypatch, write_json, square):
    def boom(*a, **k):
        raise NotConverged("no convergence")

    monkeypatch.setattr(cli, "john_report", boom)
    assert cli.main(["john", "--body", write_json("square.json", square)]) == 3


def test_xlsx_defaults_to_output_dir(monkeypatch, tmp_path, write_json, square):
    monkeypatch.setattr(settings, "output_dir", str(tmp_path / "reports"))
    assert cli.main(["john", "--body", write_json("square.json", square), "--format", "xlsx"]) == 0
    assert (tmp_path / "reports" / "john-seed0.xlsx").exists()


def test_xlsx_output(tmp_path, write_json, square):
    out = tmp_path / "john.xlsx"
    assert cli.main(["john", "--body", write_json("square.json", square), "--format", "xlsx", "--out", str(out)]) == 0
    assert out.read_bytes()[:2] == b"PK"


def test_unknown_command():
    assert cli.main(["plot"]) == 2


def test_outputs_are_byte_identical(tmp_path, write_json, disk):
    path = write_json("disk.json", disk)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        cli.main(["bl", "--body", path, "--method", "montecarlo", "--samples", "20000", "--seed", "3", "--out", str(out)])
    assert a.read_bytes() == b.read_bytes()
