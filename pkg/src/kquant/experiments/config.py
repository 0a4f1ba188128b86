"""Parsing and validation of study configurations.

A configuration is JSON::

    {"studies": [{"kind": "distance",
                  "u0": {"coeffs": []},
                  "u1": {"coeffs": [0.5, -0.5]},
                  "kgrid": [8, 16, 32],
                  "tol": 0.05}],
     "out_dir": "reports",
     "seed": 0}

A potential is given by the coefficients ``c_1..c_12`` of its correction
``f(p) = const + sum_m c_m p^m``; ``const`` is optional.  Every error is
reported with the JSON location it came from.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import DomainError
from ..toric import MAX_DEGREE, SymplecticPotential
from .studies import DEFAULT_KGRID, StudyInputs, StudyKind, default_inputs

K_MIN, K_MAX = 4, 256


class ConfigError(ValueError):
    """Invalid configuration; ``location`` names the offending entry."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass
class RunConfig:
    studies: list = field(default_factory=list)
    out_dir: Path = Path("kq-reports")
    seed: int = 0


def _number(v, loc) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(loc, f"expected a finite number, got {v!r}")
    return float(v)


def parse_potential(spec, loc: str) -> SymplecticPotential:
    """``{"coeffs": [c1, ...], "const": c0}`` (or a bare list) to a validated potential."""
    if isinstance(spec, list):
        spec = {"coeffs": spec}
    if not isinstance(spec, dict):
        raise ConfigError(loc, f"expected an object with 'coeffs', got {type(spec).__name__}")
    unknown = set(spec) - {"coeffs", "const"}
    if unknown:
        raise ConfigError(loc, f"unknown keys {sorted(unknown)}")
    raw = spec.get("coeffs", [])
    if not isinstance(raw, list):
        raise ConfigError(f"{loc}.coeffs", "expected a list of numbers")
    if len(raw) > MAX_DEGREE:
        raise ConfigError(f"{loc}.coeffs", f"at most {MAX_DEGREE} coefficients (c_1..c_{MAX_DEGREE}), got {len(raw)}")
    coeffs = [_number(v, f"{loc}.coeffs[{i}]") for i, v in enumerate(raw)]
    const = _number(spec.get("const", 0.0), f"{loc}.const")
    u = SymplecticPotential(tuple([const] + coeffs))
    try:
        u.validate()
    except DomainError as exc:
        raise ConfigError(f"{loc}.coeffs", f"inadmissible potential with coefficients {coeffs}: {exc}") from None
    return u


def parse_kgrid(raw, loc: str) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(loc, "expected a non-empty list of integers")
    ks = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{loc}[{i}]", f"expected an integer, got {v!r}")
        if not K_MIN <= v <= K_MAX:
            raise ConfigError(f"{loc}[{i}]", f"k={v} outside [{K_MIN}, {K_MAX}]")
        ks.append(v)
    if len(set(ks)) != len(ks):
        raise ConfigError(loc, "duplicate k values")
    return tuple(sorted(ks))


_FLOAT_KEYS = ("tol", "t", "eps")
_INT_KEYS = ("samples", "n_times")


def parse_study(entry, loc: str, seed: int) -> StudyInputs:
    if not isinstance(entry, dict):
        raise ConfigError(loc, "expected an object")
    if "kind" not in entry:
        raise ConfigError(loc, "missing 'kind'")
    try:
        kind = StudyKind(entry["kind"])
    except ValueError:
        raise ConfigError(f"{loc}.kind", f"unknown study {entry['kind']!r}; expected one of {[k.value for k in StudyKind]}") from None
    allowed = {"kind", "u0", "u1", "u2", "kgrid", *_FLOAT_KEYS, *_INT_KEYS}
    unknown = set(entry) - allowed
    if unknown:
        raise ConfigError(loc, f"unknown keys {sorted(unknown)}")
    inputs = default_inputs(kind, seed=seed)
    updates = {}
    for name in ("u0", "u1", "u2"):
        if name in entry:
            updates[name] = parse_potential(entry[name], f"{loc}.{name}")
    if "kgrid" in entry:
        updates["kgrid"] = parse_kgrid(entry["kgrid"], f"{loc}.kgrid")
    for name in _FLOAT_KEYS:
        if name in entry:
            updates[name] = _number(entry[name], f"{loc}.{name}")
    for name in _INT_KEYS:
        if name in entry:
            v = entry[name]
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ConfigError(f"{loc}.{name}", f"expected a non-negative integer, got {v!r}")
            updates[name] = v
    if "tol" in updates and not updates["tol"] > 0:
        raise ConfigError(f"{loc}.tol", "tolerance must be positive")
    if "n_times" in updates and updates["n_times"] < 5:
        raise ConfigError(f"{loc}.n_times", "need at least 5 time samples")
    return replace(inputs, **updates)


def parse_config(data) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("$", "top level must be an object")
    unknown = set(data) - {"studies", "out_dir", "seed"}
    if unknown:
        raise ConfigError("$", f"unknown keys {sorted(unknown)}")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("$.seed", f"expected an integer, got {seed!r}")
    out_dir = data.get("out_dir", "kq-reports")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("$.out_dir", "expected a non-empty string")
    studies = data.get("studies")
    if not isinstance(studies, list) or not studies:
        raise ConfigError("$.studies", "expected a non-empty list")
    parsed = [parse_study(s, f"$.studies[{i}]", seed) for i, s in enumerate(studies)]
    return RunConfig(parsed, Path(out_dir), seed)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", f"invalid JSON: {exc.msg}") from None
    return parse_config(data)


__all__ = ["ConfigError", "RunConfig", "DEFAULT_KGRID", "parse_potential", "parse_kgrid", "parse_study", "parse_config", "load_config"]
