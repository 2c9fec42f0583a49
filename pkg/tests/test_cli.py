from __future__ import annotations

import csv
import json

import pytest

from mirrorfield import cli
from mirrorfield.validation import Check

BASE = {
    "params": {"nu": 0.1, "lambda": 1.0, "chi": 0.005},
    "dims": {"field": 16, "mirror": 32},
    "grid": {"t_end": 10.0, "steps": 20},
}


@pytest.fixture
def write_config(tmp_path):
    def _write(**overrides):
        doc = json.loads(json.dumps(BASE))
        for key, value in overrides.items():
            if isinstance(value, dict) and isinstance(doc.get(key), dict):
                doc[key].update(value)
            else:
                doc[key] = value
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        return str(path)
    return _write


def run(*argv):
    return cli.run_command(list(argv))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_validate_default(tmp_path, capsys):
    assert run("validate", "--out", str(tmp_path)) == 0
    out = capsys.readouterr().out
    assert "PASS  decomposition" in out and "FAIL" not in out
    rows = read_csv(tmp_path / "validate.csv")
    assert {r["passed"] for r in rows} == {"true"}
    meta = json.loads((tmp_path / "validate.meta.json").read_text())
    assert meta["config"]["params"]["chi"] == 0.005
    assert meta["thresholds"]["leakage"] == 1e-8


def test_validate_failure_exit_code(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(cli, "run_validation", lambda p, l: [Check("broken", 1.0, 0.0, False)])
    assert run("validate", "--out", str(tmp_path)) == 1
    assert "broken" in capsys.readouterr().err


def test_compare_resonant_exit_3(tmp_path, write_config, capsys):
    cfg = write_config(params={"nu": 1.0})
    assert run("compare", "--config", cfg, "--out", str(tmp_path)) == 3
    assert "RegimeError" in capsys.readouterr().err
    assert not (tmp_path / "compare.csv").exists()


def test_compare_outputs(tmp_path, write_config, capsys):
    cfg = write_config(both_variants=True)
    assert run("compare", "--config", cfg, "--out", str(tmp_path), "--variant", "as_printed") == 0
    rows = read_csv(tmp_path / "compare.csv")
    assert list(rows[0]) == ["t", "fidelity", "operator_distance"] and len(rows) == 21
    assert (tmp_path / "compare_derivation.csv").exists()
    meta = json.loads((tmp_path / "compare.meta.json").read_text())
    assert meta["variant"] == "as_printed" and meta["config"]["variant"] == "as_printed"
    assert "as_printed: min fidelity" in capsys.readouterr().out


def test_compare_json(tmp_path, write_config):
    assert run("compare", "--config", write_config(), "--out", str(tmp_path), "--format", "json") == 0
    doc = json.loads((tmp_path / "compare.json").read_text())
    assert doc["metadata"]["command"] == "compare"
    assert doc["summary"]["regime"]["verdict"] == "dispersive_ok"
    assert len(doc["data"]["fidelity"]) == 21


def test_evolve_columns(tmp_path, write_config):
    assert run("evolve", "--config", write_config(kind="effective"), "--out", str(tmp_path)) == 0
    rows = read_csv(tmp_path / "evolve.csv")
    assert list(rows[0]) == ["t", "inversion", "photon", "phonon", "quadrature", "leakage", "energy"]
    assert float(rows[0]["inversion"]) == pytest.approx(1.0, abs=1e-13)


def test_evolve_lab_model_requires_exact(tmp_path, write_config):
    cfg = write_config(model="fm", kind="formula")
    assert run("evolve", "--config", cfg, "--out", str(tmp_path)) == 2
    assert run("compare", "--config", write_config(model="fm"), "--out", str(tmp_path)) == 2


def test_leakage_exit_3(tmp_path, write_config, capsys):
    cfg = write_config(dims={"field": 8, "mirror": 8}, state={"field": {"coherent": 4.0}})
    assert run("evolve", "--config", cfg, "--out", str(tmp_path)) == 3
    assert "TruncationError" in capsys.readouterr().err


def test_off_resonance_exit_3(tmp_path, write_config):
    assert run("evolve", "--config", write_config(params={"omega0": 1.5}), "--out", str(tmp_path)) == 3


@pytest.mark.parametrize("text", ['{"params": ', '{"params": {"nu": 0.1}}', "[]"])
def test_config_errors_exit_2(tmp_path, text, capsys):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert run("evolve", "--config", str(path), "--out", str(tmp_path)) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_lambda_message(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({**BASE, "params": {"nu": 0.1, "chi": 0.0}}))
    assert run("validate", "--config", str(path)) == 2
    assert "lambda" in capsys.readouterr().err


def test_usage_errors_exit_2(tmp_path):
    assert run("bogus") == 2
    assert run("evolve", "--format", "xml") == 2
    assert run("evolve", "--config", str(tmp_path / "missing.json")) == 2
    assert run() == 2


def test_internal_error_exit_1(tmp_path, monkeypatch, capsys):
    def boom(config, write):
        raise RuntimeError("kaboom")
    monkeypatch.setitem(cli.HANDLERS, "evolve", boom)
    assert run("evolve", "--out", str(tmp_path)) == 1
    assert "internal error: RuntimeError: kaboom" in capsys.readouterr().err


def test_out_dir_from_environment(tmp_path, monkeypatch, write_config):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert run("spectrum", "--config", write_config(spectrum={"n_max": 1})) == 0
    rows = read_csv(tmp_path / "env" / "spectrum.csv")
    assert len(rows) == 2 * 2 * 16
    assert {r["s"] for r in rows} == {"1", "-1"}


def test_spectrum_unstable_exit_3(tmp_path, write_config):
    cfg = write_config(params={"nu": 0.05, "lambda": 0.6, "chi": 0.3}, dims={"field": 4, "mirror": 8})
    assert run("spectrum", "--config", cfg, "--out", str(tmp_path)) == 3
    numeric = write_config(params={"nu": 0.05, "lambda": 0.6, "chi": 0.3}, dims={"field": 4, "mirror": 8},
                           spectrum={"method": "numeric", "n_max": 0})
    with pytest.warns(UserWarning):
        assert run("spectrum", "--config", numeric, "--out", str(tmp_path)) == 0


def test_sweep_monotone(tmp_path, write_config):
    cfg = write_config(grid={"steps": 200}, sweep={"chi": [0.00125, 0.0025, 0.005, 0.01]}, workers=2)
    assert run("sweep", "--config", cfg, "--out", str(tmp_path)) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert [float(r["chi"]) for r in rows] == [0.00125, 0.0025, 0.005, 0.01]
    fids = [float(r["min_fidelity"]) for r in rows]
    assert all(a >= b for a, b in zip(fids, fids[1:]))
    assert {r["status"] for r in rows} == {"ok"}


def test_sweep_records_failed_points(tmp_path, write_config, capsys):
    cfg = write_config(grid={"steps": 4}, sweep={"nu": [0.1, 1.0]})
    assert run("sweep", "--config", cfg, "--out", str(tmp_path)) == 3
    rows = read_csv(tmp_path / "sweep.csv")
    assert [r["status"] for r in rows] == ["ok", "RegimeError"]
    assert rows[1]["min_fidelity"] == "nan"


def test_sweep_needs_axes(tmp_path, write_config):
    assert run("sweep", "--config", write_config(), "--out", str(tmp_path)) == 2


def test_override_flag_reaches_config(tmp_path, write_config):
    cfg = write_config(params={"nu": 1.0 + 1e-8}, grid={"t_end": 1.0, "steps": 2},
                       dims={"field": 8, "mirror": 8}, state={"field": {"fock": 0}})
    assert run("compare", "--config", cfg, "--out", str(tmp_path)) == 3
    assert run("compare", "--config", cfg, "--out", str(tmp_path), "--override-regime") == 0
    meta = json.loads((tmp_path / "compare.meta.json").read_text())
    assert meta["config"]["override_regime"] is True


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_repeat_runs_byte_identical(tmp_path, write_config, fmt):
    cfg = write_config()
    outputs = []
    for name in ("a", "b"):
        assert run("compare", "--config", cfg, "--out", str(tmp_path / name), "--format", fmt) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted((tmp_path / name).iterdir())})
    assert outputs[0] == outputs[1]
