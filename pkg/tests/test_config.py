from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorfield.config import config_from_dict, default_config, parse_config
from mirrorfield.errors import ConfigError, ModelAssumptionError
from mirrorfield.operators import Coherent, Fock

MINIMAL = {
    "params": {"nu": 0.1, "lambda": 1.0, "chi": 0.005},
    "dims": {"field": 16, "mirror": 32},
    "grid": {"t_end": 10.0, "steps": 200},
}


def doc(**overrides):
    d = json.loads(json.dumps(MINIMAL))
    for key, value in overrides.items():
        d[key] = value
    return d


def test_minimal_defaults():
    cfg = parse_config(json.dumps(MINIMAL))
    assert cfg.params.lam == 1.0 and cfg.params.omega == cfg.params.omega0 == 1.0
    assert (cfg.layout.field_dim, cfg.layout.mirror_dim) == (16, 32)
    assert cfg.grid.t_start == 0.0
    assert cfg.state.atom == "e"
    assert cfg.state.field == Coherent(1.0) and cfg.state.mirror == Fock(0)
    assert cfg.variant == "derivation" and cfg.kind == "exact" and cfg.model == "int"
    assert cfg.thresholds.leakage == 1e-8 and cfg.thresholds.guard == 2
    assert cfg.thresholds.pole_guard == 1e-6 and cfg.thresholds.fidelity_floor == 0.99
    assert cfg.max_total_dim == 8192 and cfg.sweep == {}


def test_default_config_is_minimal():
    assert default_config() == parse_config(json.dumps(MINIMAL))


def test_missing_lambda_named():
    d = doc()
    del d["params"]["lambda"]
    with pytest.raises(ConfigError, match="lambda"):
        config_from_dict(d)


def test_off_resonance_int_model():
    d = doc()
    d["params"]["omega0"] = 1.2
    with pytest.raises(ModelAssumptionError, match="resonan"):
        config_from_dict(d)
    d["model"] = "afm"
    assert config_from_dict(d).params.omega0 == 1.2


def test_syntax_error_location():
    with pytest.raises(ConfigError, match="line 2, column 13"):
        parse_config('{\n  "params": ,\n}')


@pytest.mark.parametrize("path", [(), ("params",), ("dims",), ("grid",)])
def test_unknown_keys_rejected(path):
    d = doc()
    target = d
    for key in path:
        target = target[key]
    target["bogus"] = 1
    with pytest.raises(ConfigError, match="bogus"):
        config_from_dict(d)


@pytest.mark.parametrize("state, message", [
    ({"field": {"fock": 1, "coherent": 1}}, "state.field"),
    ({"field": {"squeezed": 1}}, "squeezed"),
    ({"atom": "x"}, "state.atom"),
    ({"atom": {"e": 0, "g": 0}}, "vanish"),
    ({"mirror": {"fock": -1}}, "state.mirror.fock"),
    ({"spin": 1}, "spin"),
])
def test_bad_state(state, message):
    with pytest.raises(ConfigError, match=message):
        config_from_dict(doc(state=state))


def test_complex_amplitudes():
    cfg = config_from_dict(doc(state={"atom": {"e": [0.0, 1.0], "g": 1}, "field": {"coherent": [0.5, -0.5]}}))
    assert cfg.state.atom == (1j, 1 + 0j)
    assert cfg.state.field == Coherent(0.5 - 0.5j)


@pytest.mark.parametrize("patch, message", [
    ({"dims": {"field": 64, "mirror": 128}}, "max_total_dim"),
    ({"dims": {"field": 1, "mirror": 8}}, "dims.field"),
    ({"grid": {"t_start": 5.0, "t_end": 1.0, "steps": 3}}, "t_end"),
    ({"grid": {"t_end": 1.0, "steps": 0}}, "grid.steps"),
    ({"thresholds": {"leakage": 0}}, "thresholds.leakage"),
    ({"thresholds": {"guard": 16}}, "guard"),
    ({"variant": "textbook"}, "variant"),
    ({"model": "jc"}, "model"),
    ({"workers": 0}, "workers"),
    ({"sweep": {"chi": []}}, "sweep.chi"),
    ({"sweep": {"omega": [1.0]}}, "omega"),
    ({"sweep": {"nu": {"start": 0.1, "stop": 0.2}}}, "sweep.nu.num"),
    ({"sweep": {"chi": {"start": 0.0, "stop": 0.1, "num": 3, "scale": "log"}}}, "log"),
    ({"sweep": {"chi": [0.1, "x"]}}, r"sweep.chi\[1\]"),
])
def test_schema_violations(patch, message):
    with pytest.raises(ConfigError, match=message):
        config_from_dict(doc(**patch))


def test_bool_is_not_a_number():
    d = doc()
    d["params"]["chi"] = True
    with pytest.raises(ConfigError, match="params.chi"):
        config_from_dict(d)


def test_non_object_document():
    with pytest.raises(ConfigError):
        parse_config("[1, 2]")


def test_inconsistent_mirror_constants():
    d = doc()
    d["params"].update(cavity_length=1.0, mirror_mass=1.0)
    with pytest.raises(ConfigError, match="inconsistent"):
        config_from_dict(d)


def test_sweep_ranges():
    cfg = config_from_dict(doc(sweep={
        "chi": {"start": 0.00125, "stop": 0.01, "num": 4, "scale": "log"},
        "nu": [0.1, 0.2],
    }))
    assert cfg.sweep["chi"] == pytest.approx([0.00125, 0.0025, 0.005, 0.01], rel=1e-14)
    assert list(cfg.sweep) == ["chi", "nu"]


@given(
    nu=st.floats(0.01, 5), lam=st.floats(0, 5), chi=st.floats(-1, 1),
    steps=st.integers(1, 500), variant=st.sampled_from(["derivation", "as_printed"]),
    alpha=st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
)
def test_to_dict_round_trip(nu, lam, chi, steps, variant, alpha):
    d = doc(variant=variant, state={"atom": {"e": 1, "g": 0.5}, "field": {"coherent": [alpha.real, alpha.imag]}})
    d["params"].update(nu=nu, chi=chi)
    d["params"]["lambda"] = lam
    d["grid"]["steps"] = steps
    cfg = config_from_dict(d)
    resolved = cfg.to_dict()
    assert config_from_dict(json.loads(json.dumps(resolved))) == cfg
    assert parse_config(json.dumps(resolved)).to_dict() == resolved
