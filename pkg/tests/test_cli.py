import csv
import json
import math

import pytest

from tsps import io
from tsps.cli import main


@pytest.fixture()
def amsler_files(tmp_path):
    c = tmp_path / "c.json"
    m = tmp_path / "m.json"
    assert main(["sample", "amsler", "--gamma", "1.5707963", "--a", "0.1", "--n1", "12", "--n2", "10",
                 "-o", str(c), "--no-timestamp"]) == 0
    assert main(["build", str(c), "--tol", "1e-8", "-o", str(m), "--no-timestamp"]) == 0
    return c, m


def test_sample_and_build(amsler_files):
    c, m = amsler_files
    doc = io.read_json(c, ("cauchy",))
    assert len(doc["strip1"]) == 12 and doc["metadata"]["seed"] == 0
    assert doc["metadata"]["config"]["gamma"] == 1.5707963
    mesh = io.read_json(m, ("mesh",))
    assert mesh["rows"] == 12 and mesh["cols"] == 10


def test_bad_angle_exit(tmp_path, capsys):
    code = main(["sample", "amsler", "--gamma", "3.2", "--a", "0.1", "-o", str(tmp_path / "c.json")])
    assert code == 2
    assert "BadAngle" in capsys.readouterr().err


def test_bad_flag_exit(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["sample", "amsler", "--gamma", "nan", "--a", "0.1", "-o", str(tmp_path / "c.json")])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["sample", "teapot"])
    assert exc.value.code == 2


def test_corrupted_json(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text("{\"format_version\": 1, \"kind\": ")
    assert main(["build", str(p), "-o", str(tmp_path / "m.json")]) == 2
    assert "JSON" in capsys.readouterr().err


def test_unknown_version(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"format_version": 2, "kind": "cauchy"}))
    assert main(["build", str(p), "-o", str(tmp_path / "m.json")]) == 2


def test_degenerate_data_reports_quad(tmp_path, capsys):
    c = tmp_path / "c.json"
    assert main(["sample", "amsler", "--gamma", "1e-6", "--a", "1", "--n1", "3", "--n2", "3",
                 "--theta", str(math.pi / 2), "-o", str(c)]) == 0
    assert main(["build", str(c), "-o", str(tmp_path / "m.json")]) == 3
    assert "(0, 0)" in capsys.readouterr().err


def test_collinear_strips_exit_3(tmp_path):
    c = tmp_path / "c.json"
    strip = [[float(k), 0.0, 0.0] for k in range(4)]
    io.write_json(c, "cauchy", {"a": 1.0, "strip1": strip, "strip2": strip})
    assert main(["build", str(c), "-o", str(tmp_path / "m.json")]) == 3


def test_verify_pass_and_report(amsler_files, tmp_path, capsys):
    _, m = amsler_files
    r = tmp_path / "r.csv"
    assert main(["verify", str(m), "-o", str(r)]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["theta_max_dev"] < 1e-8 and out["passed"]
    rows = list(csv.reader(r.open()))
    assert rows[0] == ["m", "n", "phi", "psi", "theta", "K", "edge_residual", "coplanarity_residual"]
    assert len(rows) - 1 == 10 * 8


def test_verify_defect_exit_4(amsler_files, tmp_path, capsys):
    _, m = amsler_files
    doc = io.read_json(m)
    doc["vertices"][5 * 10 + 4][2] += 1e-3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    r = tmp_path / "r.csv"
    assert main(["verify", str(bad), "-o", str(r)]) == 4
    assert r.exists()
    assert "edge residual" in capsys.readouterr().err


def test_verify_too_small(tmp_path):
    c, m = tmp_path / "c.json", tmp_path / "m.json"
    main(["sample", "amsler", "--gamma", "1.5", "--a", "0.1", "--n1", "2", "--n2", "2", "-o", str(c)])
    assert main(["build", str(c), "-o", str(m)]) == 0
    assert main(["verify", str(m)]) == 2


def test_export(amsler_files, tmp_path):
    c, m = tmp_path / "c3.json", tmp_path / "m3.json"
    main(["sample", "amsler", "--gamma", "1.5", "--a", "0.1", "--n1", "3", "--n2", "3", "-o", str(c)])
    main(["build", str(c), "-o", str(m)])
    o = tmp_path / "m.obj"
    assert main(["export", str(m), "--format", "obj", "-o", str(o)]) == 0
    text = o.read_text().splitlines()
    assert sum(l.startswith("v ") for l in text) == 9 and sum(l.startswith("f ") for l in text) == 4
    _, big = amsler_files
    out = tmp_path / "r.csv"
    assert main(["export", str(big), "-o", str(out)]) == 0
    assert len(out.read_text().splitlines()) - 1 == (12 - 2) * (10 - 2)


def test_export_unwritable(amsler_files, tmp_path):
    _, m = amsler_files
    assert main(["export", str(m), "--format", "obj", "-o", str(tmp_path / "no" / "such" / "m.obj")]) == 2


def test_determinism(tmp_path):
    outs = []
    c, m, r = tmp_path / "c.json", tmp_path / "m.json", tmp_path / "r.csv"
    for _ in range(2):
        main(["sample", "perturbed", "--seed", "9", "--n", "8", "-o", str(c), "--no-timestamp"])
        main(["build", str(c), "-o", str(m), "--no-timestamp"])
        main(["verify", str(m), "-o", str(r)])
        outs.append((c.read_bytes(), m.read_bytes(), r.read_bytes()))
    assert outs[0] == outs[1]


def _ts_file(tmp_path, pieces, period=None):
    p = tmp_path / "ts.json"
    io.write_json(p, "time_scale", {"pieces": pieces, "period": None if period is None else {"length": period}})
    return p


def test_ts_integers(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["ts", str(_ts_file(tmp_path, [[0, 0]], 1.0)), "--function", "poly2",
                 "--window", "0", "5", "-o", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [float(r["t"]) for r in rows] == [0, 1, 2, 3, 4, 5]
    for r in rows:
        assert float(r["delta"]) == 2 * float(r["t"]) + 1
        assert r["class"] == "isolated"


def test_ts_jump(tmp_path, capsys):
    assert main(["ts", str(_ts_file(tmp_path, [[0, 1], [2, 2]])), "--function", "poly2", "--step", "0.25"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    at1 = [r for r in rows if float(r["t"]) == 1.0][0]
    assert float(at1["delta"]) == 3.0 and at1["class"] == "right-scattered"
    last = rows[-1]
    assert float(last["t"]) == 2.0 and last["delta"] == "" and float(last["nabla"]) == 3.0


def test_ts_unknown_function(tmp_path):
    assert main(["ts", str(_ts_file(tmp_path, [[0, 1]])), "--function", "cosh", "--step", "0.1"]) == 2


def test_soliton_sample_full_window_rejected(tmp_path):
    assert main(["sample", "soliton-forms", "--umin", "-2", "--umax", "2", "--h", "0.01",
                 "-o", str(tmp_path / "f.json")]) == 2


def test_soliton_sample_and_verify(tmp_path, capsys):
    f, r = tmp_path / "f.json", tmp_path / "f.csv"
    assert main(["sample", "soliton-forms", "--umin", "-2.1", "--umax", "-0.1", "--h", "0.05", "-o", str(f)]) == 0
    assert main(["verify", str(f), "-o", str(r)]) == 0
    assert next(csv.reader(r.open())) == ["index_u", "index_v", "K_extrinsic", "K_intrinsic", "codazzi_1", "codazzi_2"]


def test_surface_pipeline(amsler_files, tmp_path, capsys):
    _, m = amsler_files
    t, r = tmp_path / "t.json", tmp_path / "t.csv"
    assert main(["lift", str(m), "-o", str(t)]) == 0
    assert main(["verify", str(t), "-o", str(r)]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["conjecture_audit"]["label"] == "conjecture audit"
    assert next(csv.reader(r.open()))[:4] == ["u", "v", "point_class_1", "point_class_2"]


def test_semidiscrete_and_pseudosphere(tmp_path):
    s = tmp_path / "s.json"
    assert main(["sample", "semidiscrete", "--h", "0.05", "-o", str(s)]) == 0
    assert main(["verify", str(s)]) == 0
    p = tmp_path / "p.json"
    assert main(["sample", "pseudosphere", "--h", "0.05", "-o", str(p)]) == 0
    # sampled smooth nets satisfy the net conditions only to O(h)
    assert main(["verify", str(p)]) == 4
    assert main(["verify", str(p), "--tol", "0.1"]) == 0


@pytest.mark.parametrize("gen", ["sphere", "cylinder", "tractroid"])
def test_immersion_samples(tmp_path, gen):
    p = tmp_path / "g.json"
    assert main(["sample", gen, "--h", "0.05", "-o", str(p)]) == 0
    assert main(["verify", str(p), "-o", str(tmp_path / "g.csv")]) == 0
