"""Run configuration: a sectioned TOML file validated against a fixed schema.

Complex values are written as ``[re, im]`` (a bare number means a real
value). Optional keys without a default are simply absent.
"""

from __future__ import annotations

import copy
import hashlib
import math
import sys
from dataclasses import dataclass
from typing import Any, Dict, Iterable

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .spectral import QuadratureSpec

MEDIUM_MODELS = ("vacuum", "mg_constant", "mg_windowed", "lorentzian")
RENORM_MODES = ("self_consistent", "resonance")

# section -> key -> (kind, default); default None means optional
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "run": {
        "output_dir": ("str", "."),
        "prefix": ("str", "run"),
        "parallelism": ("int", 1),
    },
    "grid": {
        "k_min": ("float", 0.1),
        "k_max": ("float", 1.0),
        "n_points": ("int", 10),
        "spacing": ("str", "linear"),
    },
    "medium": {
        "model": ("str", "vacuum"),
        "n": ("float", None),
        "eps": ("complex", None),
        "alpha_tilde": ("complex", None),
        "rho": ("float", 1.0),
        "xi": ("float", 0.1),
        "q_c": ("float", None),
        "f": ("float", None),
        "omega_res": ("float", None),
        "gamma": ("float", None),
    },
    "quadrature": {
        "q_max": ("float", math.inf),
        "eta": ("float", 1e-6),
        "rel_tol": ("float", 1e-10),
        "max_subdivisions": ("int", 200),
        "richardson": ("bool", True),
    },
    "renorm": {
        "mode": ("str", "self_consistent"),
        "alpha0": ("float", 0.01),
        "k0": ("float", 1.0),
        "bracket_lo": ("float", 0.5),
        "bracket_hi": ("float", 2.0),
        "damping": ("float", 0.5),
    },
    "vacuum": {
        "f": ("float", 1e-3),
        "omega_res": ("float", 1.0),
        "gamma": ("float", 1e-3),
        "rho": ("float", 1.0),
        "omega_max": ("float", None),
    },
    "cdm": {
        "rho": ("float", 5.0),
        "rho_alpha": ("float", 0.05),
        "k_xi": ("float", 0.2),
        "k": ("float", 1.0),
        "n_dipoles": ("int", 500),
        "n_configs": ("int", 200),
        "base_seed": ("int", 0),
        "rel_tol": ("float", 0.10),
    },
    "units": {
        "length_m": ("float", None),
    },
}

POSITIVE = {
    "run.parallelism", "grid.k_min", "grid.k_max", "grid.n_points", "medium.n", "medium.rho", "medium.xi",
    "medium.q_c", "medium.omega_res", "medium.gamma", "quadrature.q_max", "quadrature.rel_tol",
    "quadrature.max_subdivisions", "renorm.alpha0", "renorm.k0", "renorm.bracket_lo", "renorm.bracket_hi",
    "renorm.damping", "vacuum.f", "vacuum.omega_res", "vacuum.gamma", "vacuum.rho", "vacuum.omega_max",
    "cdm.rho", "cdm.rho_alpha", "cdm.k_xi", "cdm.k", "cdm.n_dipoles", "cdm.n_configs", "cdm.rel_tol",
    "units.length_m",
}


def _coerce(path: str, kind: str, value):
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if kind == "float":
        if isinstance(value, str) and value.lower() in ("inf", "+inf"):
            return math.inf
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if kind == "complex":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return complex(value)
        if isinstance(value, (list, tuple)) and len(value) == 2 and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return complex(value[0], value[1])
        if isinstance(value, complex):
            return value
        raise ConfigError(f"{path}: expected a number or [re, im], got {value!r}")
    raise AssertionError(kind)


def _encode(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with every default filled in."""

    data: Dict[str, Dict[str, Any]]

    # -- construction ---------------------------------------------------
    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a table of sections")
        unknown = set(raw) - set(SCHEMA)
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
        data: Dict[str, Dict[str, Any]] = {}
        for sec, fields in SCHEMA.items():
            given = raw.get(sec, {})
            if not isinstance(given, dict):
                raise ConfigError(f"{sec}: expected a section")
            bad = set(given) - set(fields)
            if bad:
                raise ConfigError(f"{sec}: unknown key(s) {', '.join(sorted(bad))}")
            out = {}
            for key, (kind, default) in fields.items():
                path = f"{sec}.{key}"
                if key in given:
                    out[key] = _coerce(path, kind, given[key])
                elif default is not None:
                    out[key] = default
            data[sec] = out
        cfg = cls(data)
        cfg.validate()
        return cfg

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config is not valid TOML: {exc}") from None
        return cls.from_dict(raw)

    @classmethod
    def load(cls, path, overrides: Iterable[str] = ()) -> "RunConfig":
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config is not valid TOML: {exc}") from None
        for item in overrides:
            apply_override(raw, item)
        return cls.from_dict(raw)

    # -- validation -----------------------------------------------------
    def validate(self) -> None:
        d = self.data
        for path in sorted(POSITIVE):
            sec, key = path.split(".")
            v = d[sec].get(key)
            if v is not None and not v > 0:
                raise ConfigError(f"{path}: must be positive, got {v!r}")
        g = d["grid"]
        if g["spacing"] not in ("linear", "log"):
            raise ConfigError("grid.spacing: must be 'linear' or 'log'")
        if g["n_points"] > 1 and not g["k_max"] > g["k_min"]:
            raise ConfigError("grid.k_max: must exceed grid.k_min")
        m = d["medium"]
        if m["model"] not in MEDIUM_MODELS:
            raise ConfigError(f"medium.model: must be one of {', '.join(MEDIUM_MODELS)}")
        if m["model"] in ("mg_constant", "mg_windowed"):
            given = [k for k in ("n", "eps", "alpha_tilde") if k in m]
            if len(given) != 1:
                raise ConfigError("medium: give exactly one of n, eps, alpha_tilde for a Maxwell-Garnett model")
        if m["model"] == "lorentzian":
            for key in ("f", "omega_res", "gamma"):
                if key not in m:
                    raise ConfigError(f"medium.{key}: required for the lorentzian model")
            if not 0 <= m["f"] < 1:
                raise ConfigError("medium.f: must lie in [0, 1)")
        q = d["quadrature"]
        if q["rel_tol"] > 1e-2:
            raise ConfigError("quadrature.rel_tol: must not exceed 1e-2")
        if q["eta"] < 0:
            raise ConfigError("quadrature.eta: must be non-negative")
        r = d["renorm"]
        if r["mode"] not in RENORM_MODES:
            raise ConfigError(f"renorm.mode: must be one of {', '.join(RENORM_MODES)}")
        if not r["bracket_hi"] > r["bracket_lo"]:
            raise ConfigError("renorm.bracket_hi: must exceed renorm.bracket_lo")
        if r["damping"] > 1:
            raise ConfigError("renorm.damping: must lie in (0, 1]")
        if d["vacuum"]["f"] >= 1:
            raise ConfigError("vacuum.f: must be below 1")
        if d["cdm"]["n_configs"] < 2:
            raise ConfigError("cdm.n_configs: must be at least 2")

    # -- views ----------------------------------------------------------
    def __getitem__(self, section):
        return self.data[section]

    def k_grid(self) -> np.ndarray:
        g = self.data["grid"]
        if g["n_points"] == 1:
            return np.array([g["k_min"]])
        if g["spacing"] == "log":
            return np.geomspace(g["k_min"], g["k_max"], g["n_points"])
        return np.linspace(g["k_min"], g["k_max"], g["n_points"])

    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(**self.data["quadrature"])

    # -- serialization --------------------------------------------------
    def to_toml(self) -> str:
        """Canonical serialization: sorted sections and keys, defaults included."""
        doc = {sec: {k: _encode(v) for k, v in sorted(vals.items())} for sec, vals in sorted(self.data.items())}
        return tomli_w.dumps(doc)

    def sha256(self) -> str:
        return hashlib.sha256(self.to_toml().encode()).hexdigest()

    def replace(self, section: str, **values) -> "RunConfig":
        raw = copy.deepcopy(self.data)
        raw[section].update(values)
        return RunConfig.from_dict(raw)


def apply_override(raw: dict, item: str) -> None:
    """Apply ``section.key=value`` to a raw config dict; value is parsed as TOML."""
    if "=" not in item:
        raise ConfigError(f"override {item!r}: expected section.key=value")
    path, text = item.split("=", 1)
    parts = path.strip().split(".")
    if len(parts) != 2:
        raise ConfigError(f"override {item!r}: key must look like section.key")
    try:
        value = tomllib.loads(f"v = {text.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = text.strip()
    raw.setdefault(parts[0], {})[parts[1]] = value
