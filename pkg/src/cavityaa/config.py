"""JSON run configuration: documented defaults, strict validation.

One JSON document drives every command; command-line flags only select the
config file, the command and the output directory.  Unknown keys anywhere in
the document are a hard error naming the offending dotted path, so typos
cannot silently fall back to defaults.  The effective (defaults-merged)
configuration is echoed into the metadata sidecar of every run, and a sidecar
can itself be passed back as the config to reproduce the run.
"""

from __future__ import annotations

import copy
import json

import numpy as np

from .lattice import GOLDEN_BETA

#: Defaults for every configurable field.
DEFAULTS = {
    "lattice": {
        "depth_W0": -15.0,          # confining depth in E_r; sign sets site centers
        "planewave_cutoff_M": 15,   # plane waves span -M..+M
        "quasimomentum_samples_Nq": 128,
        "beta": GOLDEN_BETA,        # incommensuration k / k0
        "window_sites": 5,          # Wannier window half-width in sites
        "points_per_site": 64,      # Wannier samples per site
    },
    "model": {
        "L": 233,                   # chain length (hard walls)
        "mode": "cavity",           # "cavity" or "aa"
        "v0": 0.05,                 # potential strength in E_r
        "C": -1.0,                  # cooperativity (signed)
        "delta_c_prime": 0.0,       # detuning over kappa
    },
    "pump": {
        "enabled": False,
        "pump_mode": "cavity_pumped",
        "eta": 0.0,                 # cavity drive in kappa units
        "Omega": 0.0,               # laser Rabi frequency in kappa units
        "Delta_a": 1.0,             # atomic detuning in kappa units
        "g": 0.0,                   # vacuum Rabi frequency in kappa units
        "kappa_over_recoil": 1.0,   # hbar kappa / E_r
    },
    "fit": {
        "background_factor": 10.0,
        "min_window_sites": 10,
        "min_r2": 0.9,
        "asymmetry_tol": 0.2,
    },
    "sweep": {
        "name": "sweep",
        "axis1": {
            "name": "v0",
            "scale": "log",         # "log" or "linear"; ignored with "values"
            "start": 0.01,
            "stop": 0.3,
            "num": 40,
            "unit": "Er",           # "Er" or "t" (grid scaled by the hopping)
            "values": None,         # explicit grid overrides start/stop/num
        },
        "axis2": None,              # same shape as axis1, or null for 1-D
        "fixed": {},                # remaining parameters by axis name
        "observables": ["ipr"],
    },
    "output": {
        "wavefunction_csv": True,   # ground-state command: dump (n, psi, psi^2)
        "wannier_csv": False,       # wannier command: dump (x, w0)
    },
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


#: Free-form mappings whose keys are validated separately, not schema-merged.
_OPAQUE_PATHS = ("sweep.fixed",)

#: Parameters accepted as sweep axes or fixed values.
_PARAM_NAMES = ("v0", "C", "delta_c_prime", "eta", "U0", "delta_c", "W0")


def _merge(defaults, given, path):
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    merged = copy.deepcopy(defaults)
    for key, value in given.items():
        dotted = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown key: {dotted}")
        if dotted in _OPAQUE_PATHS:
            if not isinstance(value, dict):
                raise ConfigError(f"{dotted}: expected an object")
            merged[key] = copy.deepcopy(value)
        elif isinstance(defaults[key], dict) and value is not None:
            if not isinstance(value, dict):
                raise ConfigError(f"{dotted}: expected an object")
            merged[key] = _merge(defaults[key], value, dotted)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


_AXIS_DEFAULTS = DEFAULTS["sweep"]["axis1"]


def effective_config(doc: dict) -> dict:
    """Merge a raw document over the defaults, rejecting unknown keys."""
    merged = _merge(DEFAULTS, doc, "")
    for axis_key in ("axis1", "axis2"):
        axis = merged["sweep"][axis_key]
        if axis is not None:
            merged["sweep"][axis_key] = _merge(_AXIS_DEFAULTS, axis,
                                               f"sweep.{axis_key}")
    _validate(merged)
    return merged


def _require(cond: bool, key: str, message: str):
    if not cond:
        raise ConfigError(f"{key}: {message}")


def _validate(cfg: dict):
    lat = cfg["lattice"]
    _require(lat["planewave_cutoff_M"] >= 8, "lattice.planewave_cutoff_M",
             "must be >= 8")
    nq = lat["quasimomentum_samples_Nq"]
    _require(nq >= 64 and nq % 2 == 0, "lattice.quasimomentum_samples_Nq",
             "must be even and >= 64")
    _require(0.0 < lat["beta"] < 1.0, "lattice.beta", "must be in (0, 1)")
    _require(lat["window_sites"] >= 2, "lattice.window_sites", "must be >= 2")
    _require(lat["points_per_site"] >= 16, "lattice.points_per_site",
             "must be >= 16")

    mdl = cfg["model"]
    _require(mdl["L"] >= 3, "model.L", "must be >= 3")
    _require(mdl["mode"] in ("cavity", "aa"), "model.mode",
             "must be 'cavity' or 'aa'")
    _require(mdl["v0"] >= 0.0, "model.v0", "must be non-negative")

    pump = cfg["pump"]
    _require(pump["pump_mode"] in ("cavity_pumped", "atom_pumped"),
             "pump.pump_mode", "must be cavity_pumped or atom_pumped")
    _require(pump["kappa_over_recoil"] > 0.0, "pump.kappa_over_recoil",
             "must be positive")
    if pump["enabled"] and pump["pump_mode"] == "atom_pumped":
        _require(pump["Delta_a"] != 0.0, "pump.Delta_a", "must be nonzero")
    if pump["enabled"] and pump["pump_mode"] == "cavity_pumped":
        _require(pump["eta"] >= 0.0, "pump.eta", "must be non-negative")

    fit = cfg["fit"]
    _require(fit["background_factor"] > 1.0, "fit.background_factor",
             "must exceed 1")
    _require(fit["min_window_sites"] >= 3, "fit.min_window_sites",
             "must be >= 3")
    _require(0.0 < fit["min_r2"] <= 1.0, "fit.min_r2", "must be in (0, 1]")

    for name in cfg["sweep"]["fixed"]:
        _require(name in _PARAM_NAMES, f"sweep.fixed.{name}",
                 f"must be one of {_PARAM_NAMES}")

    for axis_key in ("axis1", "axis2"):
        axis = cfg["sweep"][axis_key]
        if axis is None:
            continue
        key = f"sweep.{axis_key}"
        _require(axis["name"] in _PARAM_NAMES, f"{key}.name",
                 f"must be one of {_PARAM_NAMES}")
        _require(axis["scale"] in ("log", "linear"), f"{key}.scale",
                 "must be 'log' or 'linear'")
        _require(axis["unit"] in ("Er", "t"), f"{key}.unit",
                 "must be 'Er' or 't'")
        if axis["values"] is None:
            _require(int(axis["num"]) >= 1, f"{key}.num", "must be >= 1")
            if axis["scale"] == "log":
                _require(axis["start"] > 0 and axis["stop"] > 0,
                         f"{key}.start", "log grids must be positive")


def axis_values(axis_cfg: dict, hopping: float) -> np.ndarray:
    """Materialize an axis grid; unit 't' scales the grid by the hopping."""
    if axis_cfg["values"] is not None:
        vals = np.asarray(axis_cfg["values"], dtype=np.float64)
    elif axis_cfg["scale"] == "log":
        vals = np.geomspace(axis_cfg["start"], axis_cfg["stop"],
                            int(axis_cfg["num"]))
    else:
        vals = np.linspace(axis_cfg["start"], axis_cfg["stop"],
                           int(axis_cfg["num"]))
    if axis_cfg["unit"] == "t":
        vals = vals * hopping
    return vals


def load_config(path) -> dict:
    """Load a config file; a metadata sidecar is unwrapped to its config echo."""
    try:
        with open(str(path), encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    if "config" in doc and "metadata" in doc:
        doc = doc["config"]  # sidecar round-trip
    return effective_config(doc)
