"""Experiment configuration: TOML/JSON ingestion, defaults, and digests.

Configs are strict: unknown keys and malformed values are reported with their
field path.  The resolved configuration (defaults applied, command-line
overrides folded in, execution-only knobs excluded) is serialized canonically
and hashed; that digest stamps every output table.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .model import (CanonicalModel, ModelError, ModelSpec, PeriodicPotential,
                    SingleSitePotential, canonicalize, harmonic_periodic, indicator_site,
                    table_density, uniform_density, zero_periodic)
from .operator import DIRICHLET, NEUMANN, GridSpec, OperatorError

__all__ = ["ConfigError", "Experiment", "load_config", "build_experiment", "config_digest"]


class ConfigError(Exception):
    """Malformed configuration; message carries the offending field path."""


DEFAULTS = {
    "model": {
        "periodic": "zero",
        "site": "indicator(0.15)",
        "density": "uniform(0, 1)",
    },
    "grid": {
        "box_length": 32,
        "points_per_cell": 32,
        "bc": "dirichlet",
    },
    "ensemble": {
        "master_seed": 271828,
        "realizations": 1000,
    },
    "ids": {
        "energy_min": 0.0,
        "energy_max": 20.0,
        "energy_points": 201,
        "box_lengths": None,  # falls back to [grid.box_length]
    },
    "wegner": {
        "energy": 1.0,
        "eps": [0.002, 0.005, 0.01, 0.02, 0.05, 0.1],
        "box_lengths": [16, 32, 64],
    },
    "verify": {
        "window": [0.0, 10.0],
        "box_lengths": [16, 32, 64],
        "realizations": 3,
        "hf_box_length": 8,
        "hf_cases": 200,
        "hf_delta": 1e-4,
        "bracket_box_length": 16,
        "bracket_realizations": 100,
        "bracket_energies": 200,
        "c_floor": 1e-6,
    },
    "localize": {
        "energy_min": 0.25,
        "energy_max": 4.0,
        "energy_points": 16,
        "chain_cells": 100_000,
        "box_length": 64,
        "states": 6,
    },
}


def load_config(path) -> dict:
    """Parse a TOML (default) or JSON (by suffix) config file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(raw.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    else:
        try:
            doc = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return doc


def _merge(defaults: dict, given: dict, path: str = "") -> dict:
    out = {}
    for key, dval in defaults.items():
        here = f"{path}.{key}" if path else key
        if key in given:
            gval = given[key]
            if isinstance(dval, dict):
                if not isinstance(gval, dict):
                    raise ConfigError(f"{here}: expected a table")
                out[key] = _merge(dval, gval, here)
            else:
                out[key] = gval
        else:
            out[key] = dict(dval) if isinstance(dval, dict) else dval
    for key in given:
        if key not in defaults:
            here = f"{path}.{key}" if path else key
            raise ConfigError(f"{here}: unknown key")
    return out


_CALL_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def _parse_call(text: str, where: str) -> tuple[str, list[float]]:
    m = _CALL_RE.match(text)
    if not m:
        raise ConfigError(f"{where}: cannot parse {text!r}")
    name, args = m.group(1), m.group(2)
    if args is None or not args.strip():
        return name, []
    try:
        return name, [float(a) for a in args.split(",")]
    except ValueError as exc:
        raise ConfigError(f"{where}: bad numeric argument in {text!r}") from exc


def _build_periodic(value, where: str) -> PeriodicPotential:
    if isinstance(value, str):
        name, args = _parse_call(value, where)
        if name == "zero" and not args:
            return zero_periodic()
        if name == "harmonic" and len(args) == 1:
            return harmonic_periodic(args[0])
        raise ConfigError(f"{where}: expected 'zero', 'harmonic(amplitude)', or a sample list")
    if isinstance(value, (list, tuple)):
        try:
            return PeriodicPotential(np.asarray(value, dtype=float))
        except (ModelError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: expected a string form or a sample list")


def _build_site(value, where: str) -> SingleSitePotential:
    if isinstance(value, str):
        name, args = _parse_call(value, where)
        if name == "indicator" and len(args) in (1, 2):
            return indicator_site(*args)
        raise ConfigError(f"{where}: expected 'indicator(R[, kappa])' or a profile table")
    if isinstance(value, dict):
        try:
            support = value["support"]
            return SingleSitePotential(
                values=np.asarray(value["values"], dtype=float),
                support_lo=float(support[0]),
                support_hi=float(support[1]),
                window_halfwidth=float(value["window_halfwidth"]),
                kappa=float(value.get("kappa", 1.0)),
                window_center=float(value.get("center", 0.0)),
            )
        except (KeyError, IndexError, TypeError, ValueError, ModelError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: expected a string form or a profile table")


def _build_density(value, where: str):
    if isinstance(value, str):
        name, args = _parse_call(value, where)
        if name == "uniform" and len(args) == 2:
            try:
                return uniform_density(args[0], args[1])
            except ModelError as exc:
                raise ConfigError(f"{where}: {exc}") from exc
        raise ConfigError(f"{where}: expected 'uniform(lo, hi)' or a density table")
    if isinstance(value, dict):
        try:
            support = value["support"]
            return table_density(float(support[0]), float(support[1]),
                                 np.asarray(value["values"], dtype=float))
        except (KeyError, IndexError, TypeError, ValueError, ModelError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: expected a string form or a density table")


def _int(value, where: str, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value}")
    return int(value)


def _float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if not np.isfinite(value):
        raise ConfigError(f"{where}: must be finite, got {value!r}")
    return float(value)


def _int_list(value, where: str, minimum=1) -> tuple[int, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{where}: expected a nonempty integer list")
    return tuple(_int(v, where, minimum) for v in value)


def _float_list(value, where: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{where}: expected a nonempty number list")
    return tuple(_float(v, where) for v in value)


@dataclass(frozen=True, eq=False)
class Experiment:
    """Fully resolved experiment: model, base grid, seeds, and section knobs."""

    model: CanonicalModel
    grid: GridSpec
    master_seed: int
    realizations: int
    resolved: dict  # canonical config dict hashed into every output

    @property
    def digest(self) -> str:
        return config_digest(self.resolved)

    def section(self, name: str) -> dict:
        return self.resolved[name]


def config_digest(resolved: dict) -> str:
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode()).hexdigest()


def build_experiment(doc: dict | None = None, seed: int | None = None,
                     realizations: int | None = None) -> Experiment:
    """Apply defaults and overrides, build the model, and validate every field."""
    merged = _merge(DEFAULTS, doc or {})
    if seed is not None:
        merged["ensemble"]["master_seed"] = int(seed)
    if realizations is not None:
        merged["ensemble"]["realizations"] = int(realizations)

    spec = ModelSpec(
        periodic=_build_periodic(merged["model"]["periodic"], "model.periodic"),
        site=_build_site(merged["model"]["site"], "model.site"),
        coupling=_build_density(merged["model"]["density"], "model.density"),
    )
    try:
        model = canonicalize(spec)
    except ModelError as exc:
        raise ConfigError(f"model: {exc}") from exc

    g = merged["grid"]
    bc = g["bc"]
    if bc not in (DIRICHLET, NEUMANN):
        raise ConfigError(f"grid.bc: expected 'dirichlet' or 'neumann', got {bc!r}")
    try:
        grid = GridSpec(_int(g["box_length"], "grid.box_length", 1),
                        _int(g["points_per_cell"], "grid.points_per_cell", 1), bc)
    except OperatorError as exc:
        raise ConfigError(f"grid: {exc}") from exc

    ens = merged["ensemble"]
    master_seed = _int(ens["master_seed"], "ensemble.master_seed", 0)
    n_real = _int(ens["realizations"], "ensemble.realizations", 1)

    ids = merged["ids"]
    _float(ids["energy_min"], "ids.energy_min")
    _float(ids["energy_max"], "ids.energy_max")
    _int(ids["energy_points"], "ids.energy_points", 2)
    if ids["box_lengths"] is None:
        ids["box_lengths"] = [grid.box_length]
    ids["box_lengths"] = list(_int_list(ids["box_lengths"], "ids.box_lengths"))

    weg = merged["wegner"]
    _float(weg["energy"], "wegner.energy")
    eps = _float_list(weg["eps"], "wegner.eps")
    if any(e < 0 for e in eps):
        raise ConfigError("wegner.eps: widths must be nonnegative")
    weg["eps"] = list(eps)
    weg["box_lengths"] = list(_int_list(weg["box_lengths"], "wegner.box_lengths"))

    ver = merged["verify"]
    win = _float_list(ver["window"], "verify.window")
    if len(win) != 2 or win[0] > win[1]:
        raise ConfigError("verify.window: expected [lo, hi] with lo <= hi")
    ver["window"] = list(win)
    ver["box_lengths"] = list(_int_list(ver["box_lengths"], "verify.box_lengths"))
    for key in ("realizations", "hf_box_length", "hf_cases", "bracket_box_length",
                "bracket_realizations", "bracket_energies"):
        ver[key] = _int(ver[key], f"verify.{key}", 1)
    ver["hf_delta"] = _float(ver["hf_delta"], "verify.hf_delta")
    ver["c_floor"] = _float(ver["c_floor"], "verify.c_floor")

    loc = merged["localize"]
    _float(loc["energy_min"], "localize.energy_min")
    _float(loc["energy_max"], "localize.energy_max")
    _int(loc["energy_points"], "localize.energy_points", 1)
    loc["chain_cells"] = _int(loc["chain_cells"], "localize.chain_cells", 10_000)
    loc["box_length"] = _int(loc["box_length"], "localize.box_length", 1)
    loc["states"] = _int(loc["states"], "localize.states", 1)

    return Experiment(model=model, grid=grid, master_seed=master_seed,
                      realizations=n_real, resolved=merged)
