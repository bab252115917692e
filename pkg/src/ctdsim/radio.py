"""Log-distance path-loss model for BLE proximity estimation.

RSSI falls off as ``-10 n log10(d) + C``; walls subtract a fixed
attenuation per crossing. Inverting the model on an attenuated signal
yields an inflated distance, which is how barriers keep a pair from
being flagged as a close contact.

The scalar functions use :mod:`math`; the ``*_array`` variants are the
numpy versions used by the simulation's pair loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidParameterError(ValueError):
    pass


@dataclass(frozen=True)
class RadioParams:
    path_loss_exponent: float = 2.0
    system_constant_dbm: float = -40.0
    noise_sigma_db: float = 0.0
    wall_attenuation_db: float = 15.0
    min_distance_m: float = 0.01

    def __post_init__(self):
        for name in ("path_loss_exponent", "system_constant_dbm", "noise_sigma_db",
                     "wall_attenuation_db", "min_distance_m"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidParameterError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value!r}")
        if self.path_loss_exponent <= 0:
            raise InvalidParameterError("path_loss_exponent must be > 0")
        if self.noise_sigma_db < 0:
            raise InvalidParameterError("noise_sigma_db must be >= 0")
        if self.wall_attenuation_db < 0:
            raise InvalidParameterError("wall_attenuation_db must be >= 0")
        if self.min_distance_m <= 0:
            raise InvalidParameterError("min_distance_m must be > 0")

    def to_dict(self) -> dict:
        return {
            "path_loss_exponent": float(self.path_loss_exponent),
            "system_constant_dbm": float(self.system_constant_dbm),
            "noise_sigma_db": float(self.noise_sigma_db),
            "wall_attenuation_db": float(self.wall_attenuation_db),
            "min_distance_m": float(self.min_distance_m),
        }


def rssi_from_distance(d: float, walls_crossed: int, params: RadioParams,
                       noise_sample: float = 0.0) -> float:
    """Received signal strength (dBm) at true distance ``d`` metres.

    Distances below ``params.min_distance_m`` are clamped up to it so the
    logarithm stays finite.
    """
    if not math.isfinite(d) or not math.isfinite(noise_sample):
        raise InvalidParameterError(f"non-finite input: d={d!r}, noise={noise_sample!r}")
    if d < 0:
        raise InvalidParameterError(f"distance must be >= 0, got {d!r}")
    if walls_crossed < 0:
        raise InvalidParameterError(f"walls_crossed must be >= 0, got {walls_crossed!r}")
    d = max(d, params.min_distance_m)
    return (-10.0 * params.path_loss_exponent * math.log10(d)
            + params.system_constant_dbm
            - walls_crossed * params.wall_attenuation_db
            + noise_sample)


def distance_from_rssi(rssi: float, params: RadioParams) -> float:
    """Invert the path-loss model: estimated distance in metres (always > 0)."""
    if not math.isfinite(rssi):
        raise InvalidParameterError(f"rssi must be finite, got {rssi!r}")
    if params.path_loss_exponent == 0:
        raise InvalidParameterError("path_loss_exponent must be non-zero")
    return 10.0 ** ((params.system_constant_dbm - rssi) / (10.0 * params.path_loss_exponent))


def rssi_array(d: np.ndarray, walls: np.ndarray | int, params: RadioParams,
               noise: np.ndarray | float = 0.0) -> np.ndarray:
    d = np.maximum(np.asarray(d, dtype=float), params.min_distance_m)
    return (-10.0 * params.path_loss_exponent * np.log10(d)
            + params.system_constant_dbm
            - np.asarray(walls) * params.wall_attenuation_db
            + noise)


def distance_array(rssi: np.ndarray, params: RadioParams) -> np.ndarray:
    return np.power(10.0, (params.system_constant_dbm - np.asarray(rssi, dtype=float))
                    / (10.0 * params.path_loss_exponent))
