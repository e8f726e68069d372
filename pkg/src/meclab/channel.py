"""Geometry, fading and SINR-based offload rates.

The channel gain between a user and the edge server factors into a
free-space large-scale term g0 / d^2 and a Rician small-scale term
|sqrt(k/(k+1)) + sqrt(1/(k+1)) * hbar|^2, where hbar is a unit-variance
complex Gaussian draw. All users share one band, so every other user's
transmission counts as interference in the uplink rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .system import Scenario, SystemConfig


@dataclass
class ChannelSnapshot:
    """Per-user composite gains and 3D distances for one slot."""

    gains: np.ndarray      # composite power gain per user (dimensionless)
    distances: np.ndarray  # user-to-server 3D distance per user (m)


def distance(
    user_pos: tuple[float, float],
    server_pos: tuple[float, float],
    server_height: float,
) -> float:
    """3D separation between a ground user and the elevated server."""
    if server_height < 0:
        raise ValueError("server_height must be >= 0")
    dx = user_pos[0] - server_pos[0]
    dy = user_pos[1] - server_pos[1]
    return math.sqrt(dx * dx + dy * dy + server_height * server_height)


def large_scale_gain(d: float, ref_gain: float) -> float:
    """Free-space path gain g0 / d^2, referenced to 1 m."""
    if d <= 0:
        # d = 0 means the user sits on the server antenna; a real deployment
        # has server_height > 0, so surface the configuration bug.
        raise ValueError("distance must be > 0 for the path-loss model")
    return ref_gain / (d * d)


def small_scale_gain(hbar: complex, rician_k: float) -> float:
    """Rician power gain: squared magnitude of the LOS + scatter mixture."""
    if rician_k < 0:
        raise ValueError("rician_k must be >= 0")
    los = math.sqrt(rician_k / (rician_k + 1.0))
    scatter = math.sqrt(1.0 / (rician_k + 1.0))
    return abs(los + scatter * complex(hbar)) ** 2


def channel_gain(
    user_pos: tuple[float, float], hbar: complex, config: SystemConfig
) -> float:
    """Composite gain: large-scale path gain times small-scale Rician gain."""
    d = distance(user_pos, config.server_pos, config.server_height)
    return large_scale_gain(d, config.ref_gain) * small_scale_gain(
        hbar, config.rician_k
    )


def snapshot(scenario: Scenario, slot: int) -> ChannelSnapshot:
    """Compute every user's composite gain for one slot of a scenario."""
    cfg = scenario.config
    K = scenario.user_count
    dists = np.empty(K)
    gains = np.empty(K)
    for k in range(K):
        pos = (float(scenario.positions[slot, k, 0]), float(scenario.positions[slot, k, 1]))
        dists[k] = distance(pos, cfg.server_pos, cfg.server_height)
        gains[k] = large_scale_gain(dists[k], cfg.ref_gain) * small_scale_gain(
            scenario.fading_draws[slot, k], cfg.rician_k
        )
    return ChannelSnapshot(gains=gains, distances=dists)


def offload_rate(
    k: int, powers: np.ndarray, gains: np.ndarray, config: SystemConfig
) -> float:
    """Uplink rate of user k in bits/s with all other transmitters as interference."""
    powers = np.asarray(powers, dtype=float)
    gains = np.asarray(gains, dtype=float)
    received = powers * gains
    interference = float(received.sum() - received[k])
    sinr = received[k] / (interference + config.noise_power_w)
    return config.bandwidth_hz * math.log2(1.0 + sinr)


def offload_rates(
    powers: np.ndarray, gains: np.ndarray, config: SystemConfig
) -> np.ndarray:
    """All users' uplink rates at once (vectorized form of offload_rate)."""
    powers = np.asarray(powers, dtype=float)
    gains = np.asarray(gains, dtype=float)
    received = powers * gains
    total = received.sum()
    sinr = received / (total - received + config.noise_power_w)
    return config.bandwidth_hz * np.log2(1.0 + sinr)
