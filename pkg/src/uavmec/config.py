"""Scenario ingestion: JSON overrides on top of the stock parameter set.

The stock scenario is the 20 MHz / 10 s / 50-slot / 4-UE setup with the
UAV crossing from (-5,-5) to (5,-5) past an access point at the origin.
Gain-like fields accept dB figures and noise accepts dBm, either as bare
numbers (interpreted in those customary units) or as strings with an
explicit unit suffix; everything is stored linear-scale SI.
"""

from __future__ import annotations

import json
from dataclasses import replace

import numpy as np

from .model import ConfigError, ScenarioConfig, UeSpec

DEFAULT_UE_POSITIONS = ((5.0, 5.0), (-5.0, 5.0), (-5.0, -5.0), (-5.0, 5.0))
DEFAULT_TASK_BITS = 400e6


def default_config() -> ScenarioConfig:
    ues = tuple(UeSpec(pos=p, input_bits=DEFAULT_TASK_BITS)
                for p in DEFAULT_UE_POSITIONS)
    return ScenarioConfig(ues=ues)


def parse_gain(value, field="ref_gain"):
    """Channel gain: bare numbers are dB; strings take 'dB' or 'linear'."""
    if isinstance(value, str):
        text = value.replace("−", "-").strip()
        low = text.lower()
        if low.endswith("db"):
            return 10.0 ** (float(text[:-2]) / 10.0)
        if low.endswith("linear"):
            return float(text[:-6])
        raise ConfigError(f"{field}: unit suffix must be 'dB' or 'linear', got {value!r}")
    return 10.0 ** (float(value) / 10.0)


def parse_power(value, field="noise_w"):
    """Noise power: bare numbers are dBm; strings take 'dBm' or 'W'."""
    if isinstance(value, str):
        text = value.replace("−", "-").strip()
        low = text.lower()
        if low.endswith("dbm"):
            return 10.0 ** (float(text[:-3]) / 10.0) * 1e-3
        if low.endswith("w"):
            return float(text[:-1])
        raise ConfigError(f"{field}: unit suffix must be 'dBm' or 'W', got {value!r}")
    return 10.0 ** (float(value) / 10.0) * 1e-3


def _pair(value, field):
    try:
        x, y = value
        return (float(x), float(y))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{field}: expected a coordinate pair, got {value!r}") from exc


_SCALARS = {
    "bandwidth_hz": float, "horizon_s": float, "n_slots": int,
    "altitude_m": float, "max_speed": float, "theta1": float,
    "theta2": float, "kappa_uav": float, "tol_outer": float,
    "tol_inner": float,
}
_PAIRS = ("ap_pos", "uav_start", "uav_end")
_KNOWN = set(_SCALARS) | set(_PAIRS) | {
    "ref_gain", "noise_power", "ues", "uniform_task_bits",
}


def config_from_dict(data: dict) -> ScenarioConfig:
    unknown = set(data) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    cfg = default_config()
    updates = {}
    for name, cast in _SCALARS.items():
        if name in data:
            try:
                updates[name] = cast(data[name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{name}: {exc}") from exc
    for name in _PAIRS:
        if name in data:
            updates[name] = _pair(data[name], name)
    if "ref_gain" in data:
        updates["ref_gain"] = parse_gain(data["ref_gain"])
    if "noise_power" in data:
        updates["noise_w"] = parse_power(data["noise_power"])
    if "ues" in data:
        ues = []
        for i, entry in enumerate(data["ues"]):
            extra = set(entry) - {"pos", "input_bits", "cycles_per_bit", "kappa"}
            if extra:
                raise ConfigError(f"ues[{i}]: unknown fields {sorted(extra)}")
            if "pos" not in entry:
                raise ConfigError(f"ues[{i}].pos is required")
            ues.append(UeSpec(
                pos=_pair(entry["pos"], f"ues[{i}].pos"),
                input_bits=float(entry.get("input_bits", DEFAULT_TASK_BITS)),
                cycles_per_bit=float(entry.get("cycles_per_bit", 1000.0)),
                kappa=float(entry.get("kappa", 1e-28))))
        updates["ues"] = tuple(ues)
    cfg = replace(cfg, **updates)
    if "uniform_task_bits" in data:
        bits = float(data["uniform_task_bits"])
        cfg = replace(cfg, ues=tuple(replace(u, input_bits=bits) for u in cfg.ues))
    return cfg.validate()


def load_config(path) -> ScenarioConfig:
    """Read a JSON override file; an empty object yields the stock scenario."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(data)


def config_echo(cfg: ScenarioConfig) -> dict:
    """Linear-SI dump of a scenario for result files."""
    return {
        "bandwidth_hz": cfg.bandwidth_hz,
        "horizon_s": cfg.horizon_s,
        "n_slots": cfg.n_slots,
        "num_ues": cfg.num_ues,
        "ref_gain_linear": cfg.ref_gain,
        "noise_w": cfg.noise_w,
        "altitude_m": cfg.altitude_m,
        "max_speed": cfg.max_speed,
        "theta1": cfg.theta1,
        "theta2": cfg.theta2,
        "kappa_uav": cfg.kappa_uav,
        "ap_pos": list(cfg.ap_pos),
        "uav_start": list(cfg.uav_start),
        "uav_end": list(cfg.uav_end),
        "tol_outer": cfg.tol_outer,
        "tol_inner": cfg.tol_inner,
        "ues": [{"pos": list(u.pos), "input_bits": u.input_bits,
                 "cycles_per_bit": u.cycles_per_bit, "kappa": u.kappa}
                for u in cfg.ues],
    }
