import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsps import io
from tsps.errors import FormatError
from tsps.ksurface import CauchyData, SurfaceMesh, build_from_cauchy
from tsps.samples import amsler_cauchy_data, perturbed_cauchy_data
from tsps.timescale import TimeScale


@settings(max_examples=300, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_roundtrip(x):
    doc = io.loads(io.dumps("time_scale", {"value": x}))
    assert doc["value"] == x
    assert float(io.fmt(x)) == x


def test_envelope():
    doc = json.loads(io.dumps("time_scale", TimeScale.lattice(1).to_json(), {"seed": 3}))
    assert doc["format_version"] == io.FORMAT_VERSION and doc["kind"] == "time_scale"
    assert doc["metadata"] == {"seed": 3}


def test_rejects_bad_files():
    with pytest.raises(FormatError):
        io.loads("{not json")
    with pytest.raises(FormatError):
        io.loads(json.dumps({"format_version": 99, "kind": "mesh"}))
    with pytest.raises(FormatError):
        io.loads(json.dumps({"format_version": 1, "kind": "teapot"}))
    with pytest.raises(FormatError):
        io.loads(io.dumps("mesh", {}), expected=("cauchy",))
    with pytest.raises(FormatError):
        io.loads("[1, 2]")


def test_metadata():
    m = io.make_metadata({"a": np.float64(0.5), "n": np.int64(3)}, seed=7, timestamp=False)
    assert m == {"config": {"a": 0.5, "n": 3}, "seed": 7, "rng": "numpy PCG64"}
    assert "timestamp" in io.make_metadata({})


def test_cauchy_and_mesh_files(tmp_path):
    data = perturbed_cauchy_data(4, 0.1, 6, 0.1)
    io.write_json(tmp_path / "c.json", "cauchy", data.to_json())
    back = CauchyData.from_json(io.read_json(tmp_path / "c.json", ("cauchy",)))
    assert np.array_equal(back.strip1, data.strip1) and np.array_equal(back.normals2, data.normals2)
    mesh = build_from_cauchy(back)
    io.write_json(tmp_path / "m.json", "mesh", mesh.to_json())
    doc = io.read_json(tmp_path / "m.json")
    assert doc["rows"] == 6 and len(doc["vertices"]) == 36 and len(doc["planes"][0]) == 6
    m2 = SurfaceMesh.from_json(doc)
    assert np.array_equal(m2.vertices, mesh.vertices)


def test_cauchy_file_without_normals():
    d = amsler_cauchy_data(math.pi / 2, 0.1, 4, 4)
    obj = {"a": 0.1, "strip1": d.strip1.tolist(), "strip2": d.strip2.tolist()}
    back = CauchyData.from_json(obj)
    assert back.normals1 is None and back.b == 0.1


def test_obj_layout(tmp_path):
    v = np.arange(27, dtype=float).reshape(3, 3, 3)
    io.write_obj(tmp_path / "m.obj", v)
    lines = (tmp_path / "m.obj").read_text().splitlines()
    vs = [l for l in lines if l.startswith("v ")]
    fs = [l for l in lines if l.startswith("f ")]
    assert len(vs) == 9 and len(fs) == 4
    assert vs[1] == "v 3 4 5"
    assert fs[0] == "f 1 4 5 2"


def test_csv(tmp_path):
    n = io.write_csv(tmp_path / "r.csv", ("x", "y"), [(1, 0.1), (2, None)])
    assert n == 2
    assert (tmp_path / "r.csv").read_text() == "x,y\n1,0.10000000000000001\n2,\n"
