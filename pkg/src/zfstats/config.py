"""Network configuration and the plain ``key = value`` config file format."""

import math
from dataclasses import dataclass, fields

import numpy as np


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0


@dataclass(frozen=True)
class NetworkConfig:
    """Physical network parameters, all in linear SI units (watts, meters)."""

    num_cells: int
    users_per_cell: int
    antennas_per_bs: int
    cell_side: float
    exclusion_radius: float
    tx_power: float
    noise_power: float
    path_loss_exponent: float
    reference_distance: float

    def __post_init__(self):
        q, k, m = self.num_cells, self.users_per_cell, self.antennas_per_bs
        if q < 1 or math.isqrt(q) ** 2 != q:
            raise ConfigError(f"num_cells must be a perfect square >= 1, got {q}")
        if k < 1:
            raise ConfigError("users_per_cell must be >= 1")
        if m <= k:
            raise ConfigError(f"zero-forcing needs M > K (got M={m}, K={k})")
        if not self.cell_side > 0:
            raise ConfigError("cell_side must be positive")
        if not 0 <= self.exclusion_radius < self.cell_side / 2:
            raise ConfigError("exclusion_radius must lie in [0, cell_side/2)")
        for name in ("tx_power", "noise_power", "path_loss_exponent", "reference_distance"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    @property
    def grid_side(self):
        return math.isqrt(self.num_cells)

    @property
    def world_side(self):
        return self.grid_side * self.cell_side


# key -> (type, default). ``antennas`` has no default on purpose.
SETTINGS = {
    "cells": (int, 9),
    "users_per_cell": (int, 10),
    "antennas": (int, None),
    "cell_side_m": (float, 1000.0),
    "exclusion_radius_m": (float, 20.0),
    "tx_power_dbm": (float, 45.0),
    "noise_density_dbm_hz": (float, -174.0),
    "bandwidth_hz": (float, 900e3),
    "noise_mode": (str, "density"),
    "alpha": (float, 3.8),
    "d0_m": (float, 1.1),
    "seed": (int, 2021),
}

NOISE_MODES = ("density", "total")


def default_settings():
    return {key: default for key, (_, default) in SETTINGS.items()}


def _coerce(key, raw):
    if key not in SETTINGS:
        raise ConfigError(f"unknown key {key!r}; valid keys: {', '.join(SETTINGS)}")
    kind = SETTINGS[key][0]
    try:
        if kind is int:
            value = int(float(raw)) if float(raw).is_integer() else int(raw)
        else:
            value = kind(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    if key == "noise_mode" and value not in NOISE_MODES:
        raise ConfigError(f"noise_mode must be one of {NOISE_MODES}")
    return value


def parse_settings(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        out[key] = _coerce(key, raw)
    return out


def apply_overrides(settings, overrides):
    """Apply ``key=value`` strings on top of ``settings`` (returns a copy)."""
    merged = dict(settings)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = (part.strip() for part in item.split("=", 1))
        merged[key] = _coerce(key, raw)
    return merged


def load_settings(path=None, overrides=()):
    """Defaults, then the file at ``path``, then ``overrides``."""
    settings = default_settings()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            settings.update(parse_settings(fh.read()))
    return apply_overrides(settings, overrides)


def noise_power_watts(settings):
    if settings["noise_mode"] == "total":
        return float(dbm_to_watts(settings["noise_density_dbm_hz"]))
    total_dbm = settings["noise_density_dbm_hz"] + 10.0 * math.log10(settings["bandwidth_hz"])
    return float(dbm_to_watts(total_dbm))


def network_config(settings, antennas=None):
    m = antennas if antennas is not None else settings["antennas"]
    if m is None:
        raise ConfigError("antennas is not set (pass it in the config or as an override)")
    return NetworkConfig(
        num_cells=settings["cells"],
        users_per_cell=settings["users_per_cell"],
        antennas_per_bs=int(m),
        cell_side=settings["cell_side_m"],
        exclusion_radius=settings["exclusion_radius_m"],
        tx_power=float(dbm_to_watts(settings["tx_power_dbm"])),
        noise_power=noise_power_watts(settings),
        path_loss_exponent=settings["alpha"],
        reference_distance=settings["d0_m"],
    )


def describe(config):
    return "\n".join(f"{f.name} = {getattr(config, f.name)!r}" for f in fields(config))
