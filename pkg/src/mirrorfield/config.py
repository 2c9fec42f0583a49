"""Run configuration: a JSON document validated against a fixed schema.

Schema (defaults in brackets; ``*`` marks required keys)::

    model            "int" | "afm" | "fm"                          ["int"]
    params*
      nu*, lambda*, chi*                                           (numbers)
      omega                                                        [1.0]
      omega0                                                       [= omega]
      cavity_length, mirror_mass                                   [null]
    dims*            {"field": int >= 2, "mirror": int >= 2}
    grid*            {"t_start": [0.0], "t_end": number, "steps": int}
    state            {"atom": "e" | "g" | {"e": c, "g": c},
                      "field": {"fock": n} | {"coherent": alpha},
                      "mirror": same as field}
                     [atom "e", field {"coherent": 1.0}, mirror {"fock": 0}]
    variant          "derivation" | "as_printed"                  ["derivation"]
    kind             "exact" | "formula" | "effective"             ["exact"]
    both_variants    bool                                          [false]
    override_regime  bool                                          [false]
    thresholds       {"leakage": [1e-8], "guard": [2],
                      "pole_guard": [1e-6], "fidelity_floor": [0.99]}
    spectrum         {"n_max": [8], "method": ["analytic"]}
    sweep            {axis: [values...] | {"start", "stop", "num", "scale": "linear"|"log"}}
                     axes: nu, lambda, chi                         [{}]
    max_total_dim    int                                           [8192]
    workers          int >= 1                                      [1]

Complex amplitudes may be written as a number or a ``[re, im]`` pair.
Unknown keys are rejected at every level.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .dynamics import KINDS, TimeGrid
from .errors import ConfigError, MirrorFieldError, ModelAssumptionError
from .hamiltonians import VARIANTS, SystemParams
from .operators import Coherent, Fock, StateSpec, TensorLayout

MODELS = ("int", "afm", "fm")
SWEEP_AXES = {"nu": "nu", "lambda": "lam", "chi": "chi"}
_REQUIRED = object()

DEFAULT_DOCUMENT = {
    "params": {"nu": 0.1, "lambda": 1.0, "chi": 0.005},
    "dims": {"field": 16, "mirror": 32},
    "grid": {"t_start": 0.0, "t_end": 10.0, "steps": 200},
}


@dataclass(frozen=True)
class Thresholds:
    leakage: float = 1e-8
    guard: int = 2
    pole_guard: float = 1e-6
    fidelity_floor: float = 0.99


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    layout: TensorLayout
    grid: TimeGrid
    state: StateSpec
    model: str = "int"
    variant: str = "derivation"
    kind: str = "exact"
    both_variants: bool = False
    override_regime: bool = False
    thresholds: Thresholds = field(default_factory=Thresholds)
    spectrum_n_max: int = 8
    spectrum_method: str = "analytic"
    sweep: dict = field(default_factory=dict)
    max_total_dim: int = 8192
    workers: int = 1

    def to_dict(self) -> dict:
        """Fully resolved document; feeding it back to :func:`parse_config` reproduces this config."""
        p = self.params
        return {
            "model": self.model,
            "params": {
                "nu": p.nu, "lambda": p.lam, "chi": p.chi, "omega": p.omega,
                "omega0": p.omega0, "cavity_length": p.cavity_length,
                "mirror_mass": p.mirror_mass,
            },
            "dims": {"field": self.layout.field_dim, "mirror": self.layout.mirror_dim},
            "grid": {"t_start": self.grid.t_start, "t_end": self.grid.t_end,
                     "steps": self.grid.steps},
            "state": {
                "atom": _atom_to_doc(self.state.atom),
                "field": _mode_to_doc(self.state.field),
                "mirror": _mode_to_doc(self.state.mirror),
            },
            "variant": self.variant,
            "kind": self.kind,
            "both_variants": self.both_variants,
            "override_regime": self.override_regime,
            "thresholds": {
                "leakage": self.thresholds.leakage, "guard": self.thresholds.guard,
                "pole_guard": self.thresholds.pole_guard,
                "fidelity_floor": self.thresholds.fidelity_floor,
            },
            "spectrum": {"n_max": self.spectrum_n_max, "method": self.spectrum_method},
            "sweep": {axis: list(values) for axis, values in self.sweep.items()},
            "max_total_dim": self.max_total_dim,
            "workers": self.workers,
        }


def _complex_to_doc(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _atom_to_doc(atom):
    if isinstance(atom, str):
        return atom
    return {"e": _complex_to_doc(atom[0]), "g": _complex_to_doc(atom[1])}


def _mode_to_doc(mode):
    if isinstance(mode, Fock):
        return {"fock": mode.n}
    return {"coherent": _complex_to_doc(mode.alpha)}


class _Section:
    """Keyed access into one mapping of the document, tracking what was consumed."""

    def __init__(self, doc: Any, path: str):
        if not isinstance(doc, dict):
            raise ConfigError(f"'{path or '<root>'}' must be an object, got {type(doc).__name__}")
        self.doc = doc
        self.path = path
        self.used: set[str] = set()

    def _name(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def raw(self, key: str, default=_REQUIRED):
        self.used.add(key)
        if key not in self.doc:
            if default is _REQUIRED:
                raise ConfigError(f"missing required field '{self._name(key)}'")
            return default
        return self.doc[key]

    def number(self, key: str, default=_REQUIRED, *, positive=False, nonneg=False, optional=False):
        value = self.raw(key, default)
        if value is None and optional:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"'{self._name(key)}' must be a finite number, got {value!r}")
        if positive and not value > 0:
            raise ConfigError(f"'{self._name(key)}' must be > 0, got {value!r}")
        if nonneg and not value >= 0:
            raise ConfigError(f"'{self._name(key)}' must be >= 0, got {value!r}")
        return float(value)

    def integer(self, key: str, default=_REQUIRED, *, minimum=None):
        value = self.raw(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"'{self._name(key)}' must be an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise ConfigError(f"'{self._name(key)}' must be >= {minimum}, got {value!r}")
        return value

    def boolean(self, key: str, default=_REQUIRED):
        value = self.raw(key, default)
        if not isinstance(value, bool):
            raise ConfigError(f"'{self._name(key)}' must be true or false, got {value!r}")
        return value

    def choice(self, key: str, options, default=_REQUIRED):
        value = self.raw(key, default)
        if value not in options:
            raise ConfigError(f"'{self._name(key)}' must be one of {list(options)}, got {value!r}")
        return value

    def section(self, key: str, default=_REQUIRED) -> "_Section":
        return _Section(self.raw(key, default), self._name(key))

    def finish(self) -> None:
        unknown = sorted(set(self.doc) - self.used)
        if unknown:
            raise ConfigError(f"unknown key(s) in '{self.path or '<root>'}': {', '.join(unknown)}")


def _complex(value, name: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        return complex(value[0], value[1])
    raise ConfigError(f"'{name}' must be a number or an [re, im] pair, got {value!r}")


def _parse_mode(sec: _Section, key: str, default) -> Fock | Coherent:
    doc = sec.raw(key, default)
    name = sec._name(key)
    if not isinstance(doc, dict) or len(doc) != 1:
        raise ConfigError(f"'{name}' must be {{\"fock\": n}} or {{\"coherent\": alpha}}, got {doc!r}")
    (kind, value), = doc.items()
    if kind == "fock":
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ConfigError(f"'{name}.fock' must be a non-negative integer, got {value!r}")
        return Fock(value)
    if kind == "coherent":
        return Coherent(_complex(value, f"{name}.coherent"))
    raise ConfigError(f"unknown key(s) in '{name}': {kind}")


def _parse_atom(sec: _Section):
    doc = sec.raw("atom", "e")
    if isinstance(doc, str):
        if doc not in ("e", "g"):
            raise ConfigError(f"'state.atom' must be 'e', 'g' or an amplitude object, got {doc!r}")
        return doc
    amp = _Section(doc, "state.atom")
    ce = _complex(amp.raw("e", 0.0), "state.atom.e")
    cg = _complex(amp.raw("g", 0.0), "state.atom.g")
    amp.finish()
    if ce == 0 and cg == 0:
        raise ConfigError("'state.atom' amplitudes must not both vanish")
    return (ce, cg)


def _parse_sweep(doc) -> dict:
    sec = _Section(doc, "sweep")
    axes = {}
    for axis in doc:
        if axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis 'sweep.{axis}'; expected one of {list(SWEEP_AXES)}")
        spec = sec.raw(axis)
        if isinstance(spec, list):
            if not spec:
                raise ConfigError(f"'sweep.{axis}' must not be empty")
            values = [_Section({"v": v}, f"sweep.{axis}[{i}]").number("v") for i, v in enumerate(spec)]
        else:
            rng = _Section(spec, f"sweep.{axis}")
            start = rng.number("start")
            stop = rng.number("stop")
            num = rng.integer("num", minimum=1)
            scale = rng.choice("scale", ("linear", "log"), "linear")
            rng.finish()
            if scale == "log":
                if not (start > 0 and stop > 0):
                    raise ConfigError(f"'sweep.{axis}' log scale needs positive start and stop")
                values = np.geomspace(start, stop, num).tolist()
            else:
                values = np.linspace(start, stop, num).tolist()
        axes[axis] = [float(v) for v in values]
    sec.finish()
    return axes


def load_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ConfigError("configuration document must be a JSON object")
    return doc


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document.

    Raises :class:`ConfigError` for syntax and schema problems and
    :class:`ModelAssumptionError` when ``model`` is ``"int"`` but omega != omega0.
    """
    return config_from_dict(load_document(text))


def config_from_dict(doc: dict) -> RunConfig:
    root = _Section(doc, "")
    model = root.choice("model", MODELS, "int")

    p = root.section("params")
    params_kwargs = dict(
        nu=p.number("nu", positive=True),
        lam=p.number("lambda", nonneg=True),
        chi=p.number("chi"),
        omega=p.number("omega", 1.0, positive=True),
    )
    omega0 = p.number("omega0", None, positive=True, optional=True)
    cavity_length = p.number("cavity_length", None, positive=True, optional=True)
    mirror_mass = p.number("mirror_mass", None, positive=True, optional=True)
    p.finish()

    d = root.section("dims")
    field_dim = d.integer("field", minimum=2)
    mirror_dim = d.integer("mirror", minimum=2)
    d.finish()

    g = root.section("grid")
    t_start = g.number("t_start", 0.0, nonneg=True)
    t_end = g.number("t_end")
    steps = g.integer("steps", minimum=1)
    g.finish()
    if not t_end > t_start:
        raise ConfigError(f"'grid.t_end' must exceed 'grid.t_start', got {t_end!r} <= {t_start!r}")

    s = root.section("state", {})
    atom = _parse_atom(s)
    state = StateSpec(
        atom=atom,
        field=_parse_mode(s, "field", {"coherent": 1.0}),
        mirror=_parse_mode(s, "mirror", {"fock": 0}),
    )
    s.finish()

    variant = root.choice("variant", VARIANTS, "derivation")
    kind = root.choice("kind", KINDS, "exact")
    both_variants = root.boolean("both_variants", False)
    override_regime = root.boolean("override_regime", False)

    th = root.section("thresholds", {})
    thresholds = Thresholds(
        leakage=th.number("leakage", 1e-8, positive=True),
        guard=th.integer("guard", 2, minimum=1),
        pole_guard=th.number("pole_guard", 1e-6, positive=True),
        fidelity_floor=th.number("fidelity_floor", 0.99, positive=True),
    )
    th.finish()

    sp = root.section("spectrum", {})
    n_max = sp.integer("n_max", 8, minimum=0)
    method = sp.choice("method", ("analytic", "numeric"), "analytic")
    sp.finish()

    sweep = _parse_sweep(root.raw("sweep", {}))
    max_total_dim = root.integer("max_total_dim", 8192, minimum=8)
    workers = root.integer("workers", 1, minimum=1)
    root.finish()

    try:
        params = SystemParams(
            **params_kwargs, omega0=omega0, cavity_length=cavity_length,
            mirror_mass=mirror_mass, eff_variant=variant, pole_guard=thresholds.pole_guard,
        )
        layout = TensorLayout(field_dim, mirror_dim)
    except ConfigError:
        raise
    except (MirrorFieldError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if layout.total_dim > max_total_dim:
        raise ConfigError(
            f"total dimension {layout.total_dim} exceeds max_total_dim = {max_total_dim}"
        )
    if thresholds.guard >= min(field_dim, mirror_dim):
        raise ConfigError(
            f"'thresholds.guard' = {thresholds.guard} must be below min(dims) = {min(field_dim, mirror_dim)}"
        )
    if model == "int" and not params.is_resonant():
        raise ModelAssumptionError(
            f"model 'int' is the resonant interaction picture and needs omega == omega0; "
            f"got omega={params.omega!r}, omega0={params.omega0!r}"
        )
    return RunConfig(
        params=params, layout=layout, grid=TimeGrid(t_start, t_end, steps), state=state,
        model=model, variant=variant, kind=kind, both_variants=both_variants,
        override_regime=override_regime, thresholds=thresholds,
        spectrum_n_max=n_max, spectrum_method=method, sweep=sweep,
        max_total_dim=max_total_dim, workers=workers,
    )


def default_config() -> RunConfig:
    return config_from_dict(json.loads(json.dumps(DEFAULT_DOCUMENT)))
