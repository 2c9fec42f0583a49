"""Command-line entry point.

Exit codes: 0 success, 1 internal error or failed validation check,
2 configuration error, 3 physics-assumption error (pole, regime, leakage,
instability, off-resonance model).
"""
from __future__ import annotations

import argparse
import dataclasses
import itertools
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analysis import regime_check, sector_spectrum
from .config import SWEEP_AXES, RunConfig, config_from_dict, default_config, parse_config
from .dynamics import compare, evolve, occupied_photon_max
from .errors import ConfigError, PhysicsError
from .hamiltonians import sector_params
from .operators import make_state
from .output import FORMATS, Table, write_metadata, write_series
from .validation import run_validation

COMMANDS = ("validate", "evolve", "compare", "spectrum", "sweep")
OUT_ENV = "MIRRORFIELD_OUT"

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_PHYSICS = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration (defaults used if omitted)")
    common.add_argument("--out", type=Path,
                        help=f"output directory (default ${OUT_ENV} or the working directory)")
    common.add_argument("--format", choices=FORMATS, default="csv")
    common.add_argument("--variant", choices=("derivation", "as_printed"))
    common.add_argument("--override-regime", action="store_true",
                        help="run despite an invalid dispersive-regime verdict")
    parser = _Parser(prog="mirrorfield", description="Atom-field-mirror dynamics and effective models.")
    parser.add_argument("--version", action="version", version=f"mirrorfield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "validate": "run the identity and property checks",
        "evolve": "one trajectory of observables",
        "compare": "exact versus effective evolution",
        "spectrum": "per-sector effective spectra",
        "sweep": "compare over a parameter grid",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def load_config(args) -> RunConfig:
    if args.config is None:
        config = default_config()
    else:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        config = parse_config(text)
    if args.variant is None and not args.override_regime:
        return config
    doc = config.to_dict()
    if args.variant is not None:
        doc["variant"] = args.variant
    if args.override_regime:
        doc["override_regime"] = True
    return config_from_dict(doc)


def _metadata(command: str, config: RunConfig) -> dict:
    doc = config.to_dict()
    return {
        "command": command,
        "config": doc,
        "dims": doc["dims"],
        "variant": config.variant,
        "thresholds": doc["thresholds"],
    }


class _Writer:
    def __init__(self, out_dir: Path, fmt: str, metadata: dict):
        self.out_dir = out_dir
        self.fmt = fmt
        self.metadata = metadata

    def __call__(self, stem: str, obj) -> Path:
        path = write_series(obj, self.out_dir / f"{stem}.{self.fmt}", self.fmt, self.metadata)
        if self.fmt == "csv":
            write_metadata(self.out_dir / f"{stem}.meta.json", self.metadata)
        return path


def _state(config: RunConfig):
    th = config.thresholds
    return make_state(config.state, config.layout, guard=th.guard, max_leakage=th.leakage)


def cmd_validate(config: RunConfig, write: _Writer) -> int:
    checks = run_validation(config.params, config.layout)
    table = Table(("check", "value", "tol", "passed"),
                  [(c.name, c.value, c.tol, c.passed) for c in checks],
                  {"passed": all(c.passed for c in checks)})
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.value:.3e} <= {c.tol:.3e}")
    write("validate", table)
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print(f"mirrorfield: {len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def cmd_evolve(config: RunConfig, write: _Writer) -> int:
    if config.model != "int" and config.kind != "exact":
        raise ConfigError(f"model {config.model!r} supports only kind 'exact', got {config.kind!r}")
    th = config.thresholds
    series = evolve(_state(config), config.kind, config.grid, config.params, config.variant,
                    leakage_threshold=th.leakage, guard=th.guard, model=config.model)
    path = write("evolve", series)
    print(f"wrote {len(series.times)} samples to {path}")
    return EXIT_OK


def _require_int_model(config: RunConfig, command: str) -> None:
    if config.model != "int":
        raise ConfigError(f"'{command}' needs model 'int', got {config.model!r}")


def cmd_compare(config: RunConfig, write: _Writer) -> int:
    _require_int_model(config, "compare")
    th = config.thresholds
    report = compare(_state(config), config.params, config.grid, config.variant,
                     both_variants=config.both_variants, override_regime=config.override_regime,
                     leakage_threshold=th.leakage, guard=th.guard)
    path = write("compare", report)
    if report.alternate is not None and write.fmt == "csv":
        write(f"compare_{report.alternate.variant}", report.alternate)
    for rep in filter(None, (report, report.alternate)):
        print(f"{rep.variant}: min fidelity {rep.min_fidelity:.12f} (regime {rep.regime.verdict})")
    if report.min_fidelity < th.fidelity_floor:
        print(f"mirrorfield: warning: min fidelity {report.min_fidelity:.6f} is below the floor "
              f"{th.fidelity_floor}", file=sys.stderr)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_spectrum(config: RunConfig, write: _Writer) -> int:
    count = config.layout.mirror_dim // 2
    rows = []
    for n in range(config.spectrum_n_max + 1):
        for s in (1, -1):
            spec = sector_params(n, s, config.params, config.variant)
            levels = sector_spectrum(n, s, config.params, config.variant,
                                     method=config.spectrum_method, mirror_dim=config.layout.mirror_dim)
            for m, energy in enumerate(levels[:count]):
                rows.append((n, s, m, float(energy), spec.kappa, spec.mu, spec.offset, spec.stable))
    table = Table(("n", "s", "level", "energy", "kappa", "mu", "offset", "stable"), rows,
                  {"method": config.spectrum_method, "levels_per_sector": count})
    path = write("spectrum", table)
    print(f"wrote {len(rows)} levels to {path}")
    return EXIT_OK


def _sweep_point(config: RunConfig, values: dict) -> tuple:
    updates = {SWEEP_AXES[axis]: v for axis, v in values.items()}
    th = config.thresholds
    try:
        params = dataclasses.replace(config.params, cavity_length=None, mirror_mass=None, **updates)
        psi0 = _state(config)
        regime = regime_check(params, occupied_photon_max(psi0))
        report = compare(psi0, params, config.grid, config.variant,
                         override_regime=config.override_regime, operator_distance=False,
                         leakage_threshold=th.leakage, guard=th.guard)
        return ("ok", regime.verdict, regime.max_xi1, regime.max_xi2, report.min_fidelity)
    except (PhysicsError, ConfigError) as exc:
        return (type(exc).__name__, "", math.nan, math.nan, math.nan)


def cmd_sweep(config: RunConfig, write: _Writer) -> int:
    _require_int_model(config, "sweep")
    if not config.sweep:
        raise ConfigError("'sweep' needs at least one axis")
    axes = list(config.sweep)
    points = [dict(zip(axes, combo)) for combo in itertools.product(*config.sweep.values())]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        results = list(pool.map(lambda p: _sweep_point(config, p), points))
    rows = [tuple(p[a] for a in axes) + r for p, r in zip(points, results)]
    header = tuple(axes) + ("status", "verdict", "max_xi1", "max_xi2", "min_fidelity")
    failed = sum(r[0] != "ok" for r in results)
    path = write("sweep", Table(header, rows, {"points": len(rows), "failed": failed}))
    print(f"wrote {len(rows)} sweep points to {path}")
    if failed:
        print(f"mirrorfield: {failed} sweep point(s) violated a physics assumption; "
              "see the status column", file=sys.stderr)
        return EXIT_PHYSICS
    return EXIT_OK


HANDLERS = {
    "validate": cmd_validate, "evolve": cmd_evolve, "compare": cmd_compare,
    "spectrum": cmd_spectrum, "sweep": cmd_sweep,
}


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code; diagnostics go to stderr."""
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args)
        out_dir = args.out or Path(os.environ.get(OUT_ENV) or ".")
        write = _Writer(out_dir, args.format, _metadata(args.command, config))
        return HANDLERS[args.command](config, write)
    except ConfigError as exc:
        print(f"mirrorfield: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsError as exc:
        print(f"mirrorfield: physics error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except SystemExit as exc:
        # --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except Exception as exc:  # noqa: BLE001 - last-resort exit-code mapping
        print(f"mirrorfield: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run_command())
