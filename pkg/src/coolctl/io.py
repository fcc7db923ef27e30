"""JSON and CSV plumbing for the command line front end.

Complex matrices are nested row-major lists of ``[re, im]`` pairs.  A system
config holds either explicit matrices::

    {"name": "decay", "dimension": 2,
     "hamiltonian": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]],
     "lindblad_terms": [[[[0, 0], [1, 0]], [[0, 0], [0, 0]]]]}

or a builtin tag with parameters::

    {"name": "v", "builtin": "vsys", "params": {"gamma1": 1, "gamma2": 2}}
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .quantum import LindbladSystem
from .qubit import rank_one_system
from .systems import make_lambda_system, make_spin_spin, make_v_system

BUILTINS = ("lambda", "vsys", "spinspin", "qubit_rank_one")


class ConfigError(ValueError):
    pass


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrix entries must be [re, im] pairs: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"expected an n x n x 2 array, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def system_from_config(cfg: dict) -> LindbladSystem:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    has_builtin = "builtin" in cfg
    has_explicit = "lindblad_terms" in cfg or "hamiltonian" in cfg
    if has_builtin == has_explicit:
        raise ConfigError("give exactly one of 'builtin' or explicit matrices")
    name = str(cfg.get("name", ""))
    if has_builtin:
        tag = cfg["builtin"]
        p = cfg.get("params", {})
        if tag == "lambda":
            sys = make_lambda_system(float(p.get("gamma1", 1.0)), float(p.get("gamma2", 2.0)))
        elif tag == "vsys":
            sys = make_v_system(float(p.get("gamma1", 1.0)), float(p.get("gamma2", 2.0)))
        elif tag == "spinspin":
            sys = make_spin_spin()
        elif tag == "qubit_rank_one":
            sys = rank_one_system(float(p.get("nu", 0.5)))
        else:
            raise ConfigError(f"unknown builtin {tag!r}; choose from {BUILTINS}")
        if name:
            sys.name = name
        return sys
    terms = [matrix_from_json(t) for t in cfg.get("lindblad_terms", [])]
    if not terms:
        raise ConfigError("need at least one Lindblad term")
    h0 = matrix_from_json(cfg["hamiltonian"]) if "hamiltonian" in cfg else None
    dim = cfg.get("dimension")
    if dim is not None and any(t.shape[0] != int(dim) for t in terms):
        raise ConfigError("term dimension disagrees with 'dimension'")
    try:
        return LindbladSystem.from_terms(terms, h0=h0, name=name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise ConfigError(str(exc)) from None


def builtin_tag(cfg: dict) -> str | None:
    return cfg.get("builtin") if isinstance(cfg, dict) else None


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def fmt(x) -> str:
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    return format(float(x), ".17g")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    write_atomic(path, csv_text(header, rows))


def write_json(path, obj) -> None:
    write_atomic(path, json.dumps(obj, indent=2) + "\n")
