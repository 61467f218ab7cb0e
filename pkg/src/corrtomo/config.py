"""Experiment configuration: YAML schema, validation and object builders.

Every key carries its unit in the name (``_thz`` linear frequency in THz,
``_fs`` femtoseconds, ``_um`` micrometres, ``_k`` kelvin). :func:`load_config`
returns a normalized nested dict with all defaults filled in, and
:func:`dump_config` writes that dict back so that parsing a dumped config
gives the same dict.
"""

from __future__ import annotations

import copy
from pathlib import Path

import numpy as np
import yaml

from .crystal import CrystalConfig, Sellmeier, discretize_couplings, nl_generator, nl_symplectic
from .elements import ARM_PHASE, Detector
from .measurement import FS
from .modes import ModeBasis, ModeBasisParams, PulseSpectrumParams
from .states import (FockStateSpec, GaussianState, mode_quadratures, multimode_squeezed_vacuum,
                     single_mode_squeezed, thermal_state, vacuum)

STATE_KINDS = ("vacuum", "thermal", "mmsv", "smsv", "fock")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# None marks an optional value; nested dicts are sections.
DEFAULTS = {
    "basis": {"sigma_thz": 100.0, "k": 0.5, "i_max": 20},
    "lo": {"center_thz": 230.0, "bandwidth_thz": 59.0},
    "detection": {
        "mode": "homodyne",
        "probe_amplitude": 0.0,
        "arm_phase_convention": "main",
        "vacuum_model": "rotated",
        "efficiency": None,
        "lo_threshold": 1e-3,
    },
    "crystal": {
        "length_um": 20.0,
        "profile": "rect",
        "beam_area_um2": float(np.pi * 9.0),
        "r41_pm_per_v": 4.0,
        "sellmeier": {"a": 4.27, "b": 3.01, "gamma_um2": 0.142},
        "poling_period_um": None,
        "phase_matching": "full",
        "validity_fraction": 0.9,
        "beam_splitter_model": "difference",
        "probe": {"sigma_thz": 100.0, "k": 4.0},
    },
    "state": {
        "kind": "vacuum",
        "temperature_k": 1000.0,
        "thermal_model": "single_mode",
        "alpha_gx": 2e3,
        "pump": {"sigma_thz": 100.0, "k": 4.0},
        "sigma_x": 1.0,
        "sigma_p": 0.25,
        "phase_rad": 0.0,
        "photons": 3,
        "mode": {"center_thz": 202.0, "bandwidth_thz": 59.0},
    },
    "scan": {
        "delay_min_fs": -12.0,
        "delay_max_fs": 12.0,
        "points": 25,
        "phi_a_rad": 0.0,
        "phi_b_rad": 0.0,
        "vacuum_port": False,
        "samples": None,
    },
    "reconstruction": {
        "delay_window_fs": 12.0,
        "delays": 16,
        "cutoff": 1e-3,
        "n_sweep": [4, 8, 16],
    },
    "analysis": {"delay_min_fs": -5.0, "delay_max_fs": 5.0, "points": 11},
    "fock": {
        "dt_a_fs": 0.0,
        "dt_b_fs": [0.0, 0.62, 1.24, 2.47],
        "grid_points": 101,
        "trace_min_fs": -8.0,
        "trace_max_fs": 8.0,
        "trace_step_fs": 0.02,
    },
    "outputs": {"svg": False},
}

CHOICES = {
    ("detection", "mode"): ("homodyne", "eos"),
    ("detection", "arm_phase_convention"): ("main", "swapped"),
    ("detection", "vacuum_model"): ("rotated", "literal"),
    ("crystal", "profile"): ("rect", "gaussian_exp", "cos_poled"),
    ("crystal", "phase_matching"): ("full", "engineered"),
    ("crystal", "beam_splitter_model"): ("difference", "sum"),
    ("state", "kind"): STATE_KINDS,
    ("state", "thermal_model"): ("single_mode", "multimode"),
}


def _coerce(value, default, path):
    name = ".".join(path)
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be a mapping")
        return _merge(default, value, path)
    if value is None:
        return None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        try:
            ok = not isinstance(value, bool) and float(value) == int(float(value))
        except (TypeError, ValueError, OverflowError):
            ok = False
        if not ok:
            raise ConfigError(f"{name} must be an integer")
        return int(float(value))
    if default is None and (isinstance(value, bool) or not isinstance(value, (int, float))):
        raise ConfigError(f"{name} must be a number or null")
    if isinstance(default, float) or default is None:
        try:
            out = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number") from None
        if not np.isfinite(out):
            raise ConfigError(f"{name} must be finite")
        return out
    if isinstance(default, list):
        if not isinstance(value, list):
            value = [value]
        kind = type(default[0]) if default else float
        try:
            return [kind(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a list of numbers") from None
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string")
        choices = CHOICES.get(tuple(path))
        if choices and value not in choices:
            raise ConfigError(f"{name} must be one of {choices}, got {value!r}")
        return value
    return value


def _merge(default: dict, given: dict, path=()) -> dict:
    unknown = set(given) - set(default)
    if unknown:
        raise ConfigError(f"unknown keys in {'.'.join(path) or 'config'}: {sorted(unknown)}")
    out = {}
    for key, dval in default.items():
        p = path + (key,)
        if key in given:
            out[key] = _coerce(given[key], dval, p)
        else:
            out[key] = copy.deepcopy(dval)
    return out


def _check_ranges(cfg: dict):
    b = cfg["basis"]
    if b["sigma_thz"] <= 0 or b["k"] <= 0 or b["i_max"] < 1:
        raise ConfigError("basis needs sigma_thz > 0, k > 0, i_max >= 1")
    if cfg["lo"]["center_thz"] <= 0 or cfg["lo"]["bandwidth_thz"] <= 0:
        raise ConfigError("lo needs positive center_thz and bandwidth_thz")
    if cfg["detection"]["mode"] == "eos" and cfg["detection"]["probe_amplitude"] == 0:
        raise ConfigError("eos detection needs a nonzero probe_amplitude")
    s = cfg["scan"]
    if s["points"] < 1 or s["delay_max_fs"] < s["delay_min_fs"]:
        raise ConfigError("scan needs points >= 1 and delay_max_fs >= delay_min_fs")
    if s["samples"] is not None and s["samples"] < 1:
        raise ConfigError("scan.samples must be positive")
    r = cfg["reconstruction"]
    if r["delays"] < 1 or r["delay_window_fs"] <= 0 or r["cutoff"] <= 0:
        raise ConfigError("reconstruction needs delays >= 1, delay_window_fs > 0, cutoff > 0")
    st = cfg["state"]
    if st["kind"] == "thermal" and st["temperature_k"] <= 0:
        raise ConfigError("state.temperature_k must be positive")
    if st["kind"] == "fock" and st["photons"] < 0:
        raise ConfigError("state.photons must be nonnegative")
    f = cfg["fock"]
    if f["trace_step_fs"] <= 0 or f["grid_points"] < 2:
        raise ConfigError("fock needs trace_step_fs > 0 and grid_points >= 2")


def parse_config(data: dict | None) -> dict:
    """Validate a raw mapping and fill in defaults."""
    cfg = _merge(DEFAULTS, data or {})
    if cfg["scan"]["samples"] is not None:
        cfg["scan"]["samples"] = int(cfg["scan"]["samples"])
    _check_ranges(cfg)
    return cfg


def load_config(path) -> dict:
    """Read and validate a YAML config file.

    Raises:
        ConfigError: unreadable file, bad YAML or schema violation.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return parse_config(data)


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=False)


def build_basis(cfg: dict) -> ModeBasis:
    b = cfg["basis"]
    return ModeBasis(ModeBasisParams.from_thz(b["sigma_thz"], b["k"], b["i_max"]))


def _pulse(block: dict) -> PulseSpectrumParams:
    if "center_thz" in block:
        return PulseSpectrumParams.from_center_bandwidth_thz(block["center_thz"],
                                                             block["bandwidth_thz"])
    return PulseSpectrumParams.from_thz(block["sigma_thz"], block["k"])


def build_crystal(cfg: dict) -> CrystalConfig:
    c = cfg["crystal"]
    s = c["sellmeier"]
    return CrystalConfig(
        length=c["length_um"] * 1e-6,
        profile=c["profile"],
        beam_area=c["beam_area_um2"] * 1e-12,
        r41=c["r41_pm_per_v"] * 1e-12,
        sellmeier=Sellmeier(s["a"], s["b"], s["gamma_um2"] * 1e-12),
        poling_period=None if c["poling_period_um"] is None else c["poling_period_um"] * 1e-6,
        phase_matching=c["phase_matching"],
        validity_fraction=c["validity_fraction"],
        beam_splitter_model=c["beam_splitter_model"],
    )


def build_detector(cfg: dict, basis: ModeBasis) -> tuple[Detector, float]:
    """Detector and the probe amplitude used by both arms."""
    d = cfg["detection"]
    arm_phase = dict(ARM_PHASE)
    if d["arm_phase_convention"] == "swapped":
        arm_phase = {"a": -ARM_PHASE["a"], "b": -ARM_PHASE["b"]}
    g_nl = None
    alpha = 0.0
    if d["mode"] == "eos":
        crystal = build_crystal(cfg)
        probe = _pulse(cfg["crystal"]["probe"])
        g_nl = nl_generator(discretize_couplings(basis, crystal, probe))
        alpha = d["probe_amplitude"]
    det = Detector(basis, _pulse(cfg["lo"]), g_nl=g_nl, efficiency=d["efficiency"],
                   arm_phase=arm_phase, threshold=d["lo_threshold"])
    return det, alpha


def build_state(cfg: dict, basis: ModeBasis) -> GaussianState:
    """Gaussian input state; a Fock state returns vacuum here (see :func:`build_fock`)."""
    st = cfg["state"]
    kind = st["kind"]
    if kind in ("vacuum", "fock"):
        return vacuum(basis.n)
    if kind == "thermal":
        return thermal_state(st["temperature_k"], basis, st["thermal_model"])
    if kind == "mmsv":
        g = nl_generator(discretize_couplings(basis, build_crystal(cfg), _pulse(st["pump"])))
        return multimode_squeezed_vacuum(nl_symplectic(g, st["alpha_gx"]))
    coeffs, _ = basis.project(_pulse(st["mode"]).spectrum, None)
    zx, zp = mode_quadratures(coeffs * np.exp(1j * st["phase_rad"]))
    return single_mode_squeezed(st["sigma_x"], st["sigma_p"], zx, zp)


def build_fock(cfg: dict, basis: ModeBasis) -> FockStateSpec:
    st = cfg["state"]
    return FockStateSpec.from_mode(st["photons"], _pulse(st["mode"]), basis)


def delay_grid(block: dict) -> np.ndarray:
    """Uniform delays in seconds from a section with delay_min_fs/delay_max_fs/points."""
    return np.linspace(block["delay_min_fs"], block["delay_max_fs"], block["points"]) * FS


__all__ = [
    "ConfigError", "DEFAULTS", "STATE_KINDS", "parse_config", "load_config", "dump_config",
    "build_basis", "build_crystal", "build_detector", "build_state", "build_fock", "delay_grid",
]
