from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorfield.analysis import regime_check
from mirrorfield.dynamics import ComparisonReport, ObservableSeries
from mirrorfield.hamiltonians import SystemParams
from mirrorfield.output import Table, format_number, render_csv, write_metadata, write_series


def series(n):
    t = np.linspace(0, 1, n)
    return ObservableSeries("exact", t, np.cos(t), t / 3, t ** 2, np.sin(t), 1e-17 * t, -t / 7)


def report(n=5, dist=True):
    t = np.linspace(0, 1, n)
    return ComparisonReport(
        variant="derivation", times=t, fidelity=1 - t / 3,
        min_fidelity=float((1 - t / 3).min()) if n else 1.0,
        operator_distance=t / 11 if dist else None,
        regime=regime_check(SystemParams(nu=0.1, lam=1.0, chi=0.005), 4),
    )


def test_empty_series_header_only(tmp_path):
    path = write_series(series(0), tmp_path / "s.csv", "csv")
    assert path.read_bytes() == b"t,inversion,photon,phonon,quadrature,leakage,energy\n"


def test_csv_layout(tmp_path):
    text = write_series(report(3), tmp_path / "r.csv").read_bytes().decode()
    lines = text.split("\n")
    assert lines[0] == "t,fidelity,operator_distance"
    assert lines[1] == "0,1,0"
    assert "\r" not in text and text.endswith("\n") and len(lines) == 5
    assert lines[2].split(",")[1] == f"{1 - 0.5 / 3:.17g}"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_numbers_round_trip(x):
    assert float(format_number(x)) == x


def test_format_number_types():
    assert format_number(True) == "true"
    assert format_number(np.int64(3)) == "3"
    assert format_number(None) == ""
    assert format_number(float("nan")) == "nan"
    assert format_number("ok") == "ok"


def test_json_round_trip_exact(tmp_path):
    rep = report(7)
    meta = {"config": {"params": {"chi": 0.005}}, "variant": "derivation"}
    doc = json.loads(write_series(rep, tmp_path / "r.json", "json", meta).read_text())
    assert doc["metadata"]["config"] == meta["config"]
    assert doc["metadata"]["tool"] == "mirrorfield"
    assert doc["columns"] == ["t", "fidelity", "operator_distance"]
    for name, values in rep.columns().items():
        assert doc["data"][name] == values.tolist()
    assert doc["summary"]["min_fidelity"] == rep.min_fidelity
    assert doc["summary"]["regime"]["max_xi2"] == rep.regime.max_xi2


def test_json_nan_becomes_null(tmp_path):
    doc = json.loads(write_series(report(3, dist=False), tmp_path / "r.json", "json").read_text())
    assert doc["data"]["operator_distance"] == [None, None, None]


def test_table_and_metadata(tmp_path):
    table = Table(("name", "value", "passed"), [("a", 0.1, True), ("b", math.inf, False)])
    assert render_csv(table) == "name,value,passed\na,0.10000000000000001,true\nb,inf,false\n"
    doc = json.loads(write_series(table, tmp_path / "t.json", "json").read_text())
    assert doc["data"]["value"] == [0.1, None]
    meta = json.loads(write_metadata(tmp_path / "m.json", {"command": "x"}).read_text())
    assert meta["command"] == "x"


def test_writes_are_deterministic_and_atomic(tmp_path):
    rep = report(50)
    a = write_series(rep, tmp_path / "a.json", "json", {"x": 1}).read_bytes()
    b = write_series(rep, tmp_path / "a.json", "json", {"x": 1}).read_bytes()
    assert a == b
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.json"]


def test_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        write_series(report(2), blocker / "out.csv")


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        write_series(report(2), tmp_path / "x.txt", "txt")
