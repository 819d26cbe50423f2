import json

import numpy as np
import pytest

from fracsinh import io


def test_rounded_handles_numpy_and_nonfinite():
    obj = {"a": np.float64(1 / 3), "b": [np.int64(2), np.bool_(True)], "c": np.array([np.inf, 0.5]),
           3: (1.0,)}
    out = io.rounded(obj)
    assert out == {"a": float(f"{1 / 3:.15g}"), "b": [2, True], "c": [None, 0.5], "3": [1.0]}
    assert isinstance(out["b"][1], bool)


def test_json_round_trip_is_sorted_and_stable(tmp_path):
    p = tmp_path / "r.json"
    io.write_json(p, {"z": 1.0, "a": [np.float32(0.25)]})
    text = p.read_text()
    assert text.index('"a"') < text.index('"z"')
    assert io.read_json(p) == {"a": [0.25], "z": 1.0}
    io.write_json(p, io.read_json(p))
    assert p.read_text() == text


def test_profile_round_trip(tmp_path):
    x = np.linspace(-0.9, 0.9, 7)
    u = np.cos(x) / 3
    p = tmp_path / "u.csv"
    io.write_profile(p, x, u)
    assert p.read_text().splitlines()[0] == "x,u"
    x2, u2 = io.read_profile(p)
    assert x2 == pytest.approx(x, rel=1e-14) and u2 == pytest.approx(u, rel=1e-14)


@pytest.mark.parametrize("text", ["", "a,b\n1,2\n", "x,u\n"])
def test_profile_rejects_bad_files(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(ValueError):
        io.read_profile(p)


def test_write_table_formats_floats_only(tmp_path):
    p = tmp_path / "t.csv"
    io.write_table(p, ["kind", "v", "n"], [["endpoint", 0.1 + 0.2, 3]])
    assert p.read_text().splitlines() == ["kind,v,n", "endpoint,0.3,3"]
    json.dumps(io.rounded({"nan": float("nan")}))
