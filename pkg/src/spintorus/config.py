"""System descriptions: JSON files, named presets and their canonical hash.

A system file looks like::

    {"potential": "coulomb", "alpha": 0.0072973525693, "mass": 1.0, "c": 1.0, "hbar": 1.0}

``potential`` is one of ``coulomb``, ``harmonic`` (key ``k``), ``polynomial``
(key ``coefficients`` mapping integer powers to coefficients) or ``free``.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from pathlib import Path
from typing import Optional

from . import symbol
from .symbol import FieldConfig

ENV_VAR = "SPINTORUS_CONFIG"

PRESETS = {
    "kepler": {"potential": "coulomb", "alpha": symbol.ALPHA_FS},
    "harmonic": {"potential": "harmonic", "k": 1e-4},
    "free": {"potential": "free"},
}

_UNITS = ("mass", "c", "hbar")


class ConfigError(ValueError):
    """Malformed or inconsistent system description."""


def normalize(raw: dict) -> dict:
    """Fill defaults and validate; the result is what gets hashed."""
    if not isinstance(raw, dict):
        raise ConfigError("system description must be a JSON object")
    kind = raw.get("potential")
    known = {"coulomb": {"alpha"}, "harmonic": {"k"}, "polynomial": {"coefficients"}, "free": set()}
    if kind not in known:
        raise ConfigError(f"potential must be one of {sorted(known)}, got {kind!r}")
    allowed = known[kind] | set(_UNITS) | {"potential", "charge", "name"}
    extra = set(raw) - allowed
    if extra:
        raise ConfigError(f"unknown keys for {kind} system: {sorted(extra)}")
    out = {"potential": kind}
    for key in _UNITS:
        value = float(raw.get(key, 1.0))
        if not (value > 0 and math.isfinite(value)):
            raise ConfigError(f"{key} must be positive and finite")
        out[key] = value
    if "charge" in raw:
        out["charge"] = float(raw["charge"])
    if "name" in raw:
        out["name"] = str(raw["name"])
    if kind == "coulomb":
        alpha = float(raw.get("alpha", symbol.ALPHA_FS))
        if not alpha > 0:
            raise ConfigError("alpha must be positive (attractive field)")
        out["alpha"] = alpha
    elif kind == "harmonic":
        out["k"] = float(raw.get("k", 1.0))
    elif kind == "polynomial":
        coeffs = raw.get("coefficients")
        if not isinstance(coeffs, dict) or not coeffs:
            raise ConfigError("polynomial systems need a non-empty 'coefficients' object")
        try:
            out["coefficients"] = {str(int(k)): float(v) for k, v in coeffs.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad polynomial coefficients: {exc}") from exc
    return out


def config_hash(system: dict) -> str:
    blob = json.dumps(normalize(system), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read system file {path}: {exc}") from exc
    try:
        return normalize(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def resolve(path: Optional[str] = None, preset: Optional[str] = None, overrides: Optional[dict] = None) -> dict:
    """Pick the system: explicit file, then preset, then $SPINTORUS_CONFIG, then the Kepler preset."""
    if path is not None:
        system = load_file(path)
    elif preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown system {preset!r}; presets are {sorted(PRESETS)}")
        system = normalize(PRESETS[preset])
    elif os.environ.get(ENV_VAR):
        system = load_file(os.environ[ENV_VAR])
    else:
        system = normalize(PRESETS["kepler"])
    if overrides:
        merged = dict(system)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        system = normalize(merged)
    return system


def build(system: dict) -> FieldConfig:
    s = normalize(system)
    units = {k: s[k] for k in _UNITS}
    kind = s["potential"]
    if kind == "coulomb":
        return symbol.coulomb(s["alpha"], **units)
    extra = {"charge": s["charge"]} if "charge" in s else {}
    if kind == "harmonic":
        return symbol.harmonic(s["k"], **extra, **units)
    if kind == "polynomial":
        return symbol.polynomial({int(k): v for k, v in s["coefficients"].items()}, **extra, **units)
    return symbol.free_particle(**extra, **units)
