"""Deterministic CSV/JSON serialisation.

Numbers are written with 17 significant digits in CSV and with ``repr`` in
JSON, both of which round-trip binary64 exactly.  No timestamps or other
run-dependent state are emitted, and files are replaced atomically.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__

FORMATS = ("csv", "json")


@dataclass(frozen=True)
class Table:
    """Generic column-ordered table for validation, spectrum and sweep results."""

    header: tuple[str, ...]
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def columns(self) -> dict[str, list]:
        return {name: [row[i] for row in self.rows] for i, name in enumerate(self.header)}


def _header(obj) -> tuple[str, ...]:
    return tuple(getattr(obj, "COLUMNS", None) or obj.header)


def format_number(value) -> str:
    """CSV cell text; locale-independent and lossless for floats."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def to_jsonable(value) -> Any:
    """Plain JSON types; non-finite floats become ``null``."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if value is None or isinstance(value, str):
        return value
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    raise TypeError(f"cannot serialise {type(value).__name__}")


def render_csv(obj) -> str:
    header = _header(obj)
    cols = obj.columns()
    lines = [",".join(header)]
    length = len(cols[header[0]]) if header else 0
    for i in range(length):
        lines.append(",".join(format_number(cols[name][i]) for name in header))
    return "\n".join(lines) + "\n"


def _summary(obj) -> dict:
    if isinstance(obj, Table):
        return dict(obj.summary)
    out = {}
    for name in ("kind", "variant", "min_fidelity"):
        if hasattr(obj, name):
            out[name] = getattr(obj, name)
    if getattr(obj, "operator_distance", None) is not None:
        out["max_operator_distance"] = float(np.max(obj.operator_distance, initial=0.0))
    if hasattr(obj, "regime"):
        out["regime"] = obj.regime.to_dict()
    alternate = getattr(obj, "alternate", None)
    if alternate is not None:
        out["alternate"] = {"summary": _summary(alternate), "data": alternate.columns()}
    return out


def render_json(obj, metadata: Optional[dict] = None) -> str:
    doc = {
        "metadata": {"tool": "mirrorfield", "version": __version__, **(metadata or {})},
        "summary": _summary(obj),
        "columns": list(_header(obj)),
        "data": obj.columns(),
    }
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> Path:
    """Write ``text`` (UTF-8, LF) to a temp file beside ``path`` and rename it over ``path``."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(text.encode("utf-8"))
        os.replace(tmp, path)
    except BaseException as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        if isinstance(exc, OSError):
            raise OSError(f"cannot write {path}: {exc}") from exc
        raise
    return path


def write_series(obj, path, format: str = "csv", metadata: Optional[dict] = None) -> Path:
    """Serialise a series, comparison report or :class:`Table` to ``path``.

    CSV holds the header and one row per sample.  JSON additionally carries
    ``metadata`` (resolved configuration, dims, thresholds), a summary block
    and the data arrays.
    """
    if format == "csv":
        return atomic_write(path, render_csv(obj))
    if format == "json":
        return atomic_write(path, render_json(obj, metadata))
    raise ValueError(f"format must be one of {FORMATS}, got {format!r}")


def write_metadata(path, metadata: dict) -> Path:
    doc = {"tool": "mirrorfield", "version": __version__, **metadata}
    return atomic_write(path, json.dumps(to_jsonable(doc), sort_keys=True, indent=2,
                                         allow_nan=False) + "\n")
