"""System constants, per-user state, scenario construction and dataset generators.

A Scenario bundles everything one simulation run consumes: the global
configuration, the user population, per-slot positions, per-slot task
volumes and pre-sampled small-scale fading draws. Pre-sampling the fading
into the scenario means every solver sees identical channels, which keeps
comparisons fair and runs reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

# Experiment sweep buckets. Ranges are (low, high); DSCC entries are exact
# server seconds-per-bit values (server cycles/bit stays at 900, the server
# cycle rate is derived).
DSCC_SERVER_SEC_PER_BIT = (1e-8, 2e-8, 3e-8, 4e-8, 5e-8)
DUSD_DATA_MBIT = ((0.5, 1.0), (1.5, 2.0), (2.5, 3.0), (3.5, 4.0), (4.5, 5.0))
DUP_MAX_POWER_W = ((0.75, 1.0), (1.0, 1.25), (1.25, 1.5), (1.5, 1.75), (1.75, 2.0))
DUCC_USER_SEC_PER_BIT = (
    (0.5e-6, 1.0e-6),
    (1.0e-6, 1.5e-6),
    (1.5e-6, 2.0e-6),
    (2.0e-6, 2.5e-6),
    (2.5e-6, 3.0e-6),
)

BUCKET_COUNT = 5
DATASET_SLOT_COUNT = 10  # every sweep dataset spans 10 time slots


class DatasetKind(str, Enum):
    """Which system parameter a sweep dataset varies."""

    DSCC = "DSCC"  # server computing capability (s/bit)
    DUSD = "DUSD"  # user task data volume (Mbit)
    DUP = "DUP"    # user maximum transmit power (W)
    DUCC = "DUCC"  # user computing capability (s/bit)


@dataclass
class SystemConfig:
    """Global constants shared by all users in one deployment."""

    bandwidth_hz: float = 10e6          # uplink bandwidth shared by all users
    noise_power_w: float = 1e-10        # receiver noise power
    server_cycles_per_sec: float = 30e9 # edge server compute rate
    server_cycles_per_bit: float = 900.0  # cycles the server spends per offloaded bit
    ref_gain: float = 1e-5              # channel gain at 1 m reference distance
    rician_k: float = 50.0              # line-of-sight to scatter power ratio
    energy_coeff: float = 1e-27         # J*s^2/cycle^3, chip energy coefficient
    slot_count: int = 10                # slots per time block
    slot_duration_s: float = 1.0        # slot length; carried through, nothing consumes it
    server_pos: tuple[float, float] = (150.0, 150.0)  # server ground coordinates (m)
    server_height: float = 20.0         # server antenna height (m)
    area_side_m: float = 300.0          # users roam a square of this side length

    def validate(self) -> list[str]:
        """Return all violated invariants; empty list means the config is usable."""
        errors = []
        if not self.bandwidth_hz > 0:
            errors.append("bandwidth_hz must be > 0")
        if not self.noise_power_w > 0:
            errors.append("noise_power_w must be > 0")
        if not self.server_cycles_per_sec > 0:
            errors.append("server_cycles_per_sec must be > 0")
        if not self.server_cycles_per_bit > 0:
            errors.append("server_cycles_per_bit must be > 0")
        if not self.ref_gain > 0:
            errors.append("ref_gain must be > 0")
        if not self.rician_k >= 0:
            errors.append("rician_k must be >= 0")
        if not self.energy_coeff > 0:
            errors.append("energy_coeff must be > 0")
        if not self.slot_count >= 1:
            errors.append("slot_count must be >= 1")
        if not self.slot_duration_s > 0:
            errors.append("slot_duration_s must be > 0")
        if not self.server_height >= 0:
            errors.append("server_height must be >= 0")
        if not self.area_side_m > 0:
            errors.append("area_side_m must be > 0")
        return errors


def validate_config(config: SystemConfig) -> list[str]:
    """Module-level alias for :meth:`SystemConfig.validate`."""
    return config.validate()


class InvalidConfigError(ValueError):
    """Raised when an operation receives a config that fails validation."""


def _require_valid(config: SystemConfig) -> None:
    errors = config.validate()
    if errors:
        raise InvalidConfigError("; ".join(errors))


@dataclass
class MobileUser:
    """Static per-user capabilities and limits."""

    id: int
    cycles_per_sec: float    # local compute rate (cycles/s)
    cycles_per_bit: float    # local processing demand (cycles/bit)
    max_power_w: float = 2.0      # transmit power cap
    energy_budget_j: float = 1000.0  # energy cap over the whole time block


@dataclass
class Scenario:
    """Full input to one simulation run.

    positions: (T, K, 2) user coordinates in meters, frozen within a slot.
    task_bits: (T, K) task volumes in bits.
    fading_draws: (T, K) complex small-scale samples, CN(0, 1).
    """

    config: SystemConfig
    users: list[MobileUser]
    positions: np.ndarray
    task_bits: np.ndarray
    fading_draws: np.ndarray
    rng_seed: int = 0

    @property
    def user_count(self) -> int:
        return len(self.users)

    @property
    def slot_count(self) -> int:
        return int(self.task_bits.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.config == other.config
            and self.users == other.users
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.task_bits, other.task_bits)
            and np.array_equal(self.fading_draws, other.fading_draws)
            and self.rng_seed == other.rng_seed
        )


def generate_scenario(
    config: SystemConfig,
    user_count: int,
    seed: int,
    *,
    cycles_range: tuple[float, float] = (0.5e9, 2e9),
    cycles_per_bit_range: tuple[int, int] = (500, 1500),
    data_bits_range: tuple[float, float] = (0.5e6, 5e6),
    max_power_range: tuple[float, float] | None = None,
    max_power_w: float = 2.0,
    energy_budget_j: float = 1000.0,
    user_sec_per_bit_range: tuple[float, float] | None = None,
    speed_m_per_slot: float = 5.0,
    zero_fading: bool = False,
) -> Scenario:
    """Sample a reproducible scenario: identical inputs give identical output.

    Users start uniformly in the square and follow a random-waypoint walk
    (each user heads to a uniform waypoint at ``speed_m_per_slot``,
    re-picking on arrival). When ``user_sec_per_bit_range`` is given, the
    per-user compute rate is derived as cycles_per_bit / ratio instead of
    being drawn directly, which is how the DUCC sweep fixes seconds-per-bit.
    ``zero_fading`` stores all-zero small-scale draws so the channel is
    purely deterministic geometry.
    """
    if user_count < 1:
        raise ValueError("user_count must be >= 1")
    _require_valid(config)
    rng = np.random.default_rng(seed)
    T = config.slot_count
    side = config.area_side_m

    # Per-user attributes. Draw order is fixed so common seeds give common
    # random numbers across sweep buckets of the same kind.
    cycles_per_bit = rng.integers(
        cycles_per_bit_range[0], cycles_per_bit_range[1] + 1, size=user_count
    ).astype(float)
    if user_sec_per_bit_range is not None:
        ratio = rng.uniform(*user_sec_per_bit_range, size=user_count)
        cycles_per_sec = cycles_per_bit / ratio
    else:
        cycles_per_sec = rng.uniform(*cycles_range, size=user_count)
    if max_power_range is not None:
        p_max = rng.uniform(*max_power_range, size=user_count)
    else:
        p_max = np.full(user_count, float(max_power_w))
    users = [
        MobileUser(
            id=k,
            cycles_per_sec=float(cycles_per_sec[k]),
            cycles_per_bit=float(cycles_per_bit[k]),
            max_power_w=float(p_max[k]),
            energy_budget_j=float(energy_budget_j),
        )
        for k in range(user_count)
    ]

    # Random-waypoint walk, positions frozen within each slot.
    positions = np.empty((T, user_count, 2))
    pos = rng.uniform(0.0, side, size=(user_count, 2))
    waypoints = rng.uniform(0.0, side, size=(user_count, 2))
    positions[0] = pos
    for t in range(1, T):
        for k in range(user_count):
            delta = waypoints[k] - pos[k]
            dist = float(np.hypot(delta[0], delta[1]))
            if dist <= speed_m_per_slot:
                pos[k] = waypoints[k]
                waypoints[k] = rng.uniform(0.0, side, size=2)
            else:
                pos[k] = pos[k] + delta * (speed_m_per_slot / dist)
        positions[t] = pos

    task_bits = rng.uniform(*data_bits_range, size=(T, user_count))

    # Circularly-symmetric complex Gaussian, zero mean, unit variance.
    raw = rng.standard_normal((T, user_count, 2))
    fading = (raw[..., 0] + 1j * raw[..., 1]) / np.sqrt(2.0)
    if zero_fading:
        fading = np.zeros((T, user_count), dtype=complex)

    return Scenario(
        config=config,
        users=users,
        positions=positions,
        task_bits=task_bits,
        fading_draws=fading,
        rng_seed=int(seed),
    )


def generate_dataset(
    kind: DatasetKind,
    bucket: int,
    base_config: SystemConfig | None = None,
    seed: int = 0,
    *,
    user_count: int = 10,
    zero_fading: bool = False,
) -> Scenario:
    """Build a 10-slot sweep scenario with one parameter drawn from a bucket.

    DSCC fixes a server seconds-per-bit value by scaling the server cycle
    rate; DUSD, DUP and DUCC draw task volume, power cap and user
    seconds-per-bit from the bucket range. Everything not swept keeps its
    default distribution.
    """
    kind = DatasetKind(kind)
    if not 0 <= bucket < BUCKET_COUNT:
        raise ValueError(f"bucket must be in [0, {BUCKET_COUNT - 1}], got {bucket}")
    config = base_config if base_config is not None else SystemConfig()
    _require_valid(config)

    config = replace(config, slot_count=DATASET_SLOT_COUNT)
    kwargs: dict = {"zero_fading": zero_fading}
    if kind is DatasetKind.DSCC:
        sec_per_bit = DSCC_SERVER_SEC_PER_BIT[bucket]
        config = replace(
            config, server_cycles_per_sec=config.server_cycles_per_bit / sec_per_bit
        )
    elif kind is DatasetKind.DUSD:
        lo, hi = DUSD_DATA_MBIT[bucket]
        kwargs["data_bits_range"] = (lo * 1e6, hi * 1e6)
    elif kind is DatasetKind.DUP:
        kwargs["max_power_range"] = DUP_MAX_POWER_W[bucket]
    elif kind is DatasetKind.DUCC:
        kwargs["user_sec_per_bit_range"] = DUCC_USER_SEC_PER_BIT[bucket]

    return generate_scenario(config, user_count, seed, **kwargs)


# --- JSON serialization -----------------------------------------------------
# Scenarios and configs round-trip through plain JSON documents so the CLI
# can pass them between subcommands. Complex fading draws are stored as
# [re, im] pairs.


def config_to_dict(config: SystemConfig) -> dict:
    return {
        "bandwidth_hz": config.bandwidth_hz,
        "noise_power_w": config.noise_power_w,
        "server_cycles_per_sec": config.server_cycles_per_sec,
        "server_cycles_per_bit": config.server_cycles_per_bit,
        "ref_gain": config.ref_gain,
        "rician_k": config.rician_k,
        "energy_coeff": config.energy_coeff,
        "slot_count": config.slot_count,
        "slot_duration_s": config.slot_duration_s,
        "server_pos": list(config.server_pos),
        "server_height": config.server_height,
        "area_side_m": config.area_side_m,
    }


def config_from_dict(doc: dict) -> SystemConfig:
    doc = dict(doc)
    doc["server_pos"] = tuple(doc["server_pos"])
    return SystemConfig(**doc)


def scenario_to_dict(scenario: Scenario) -> dict:
    fading = np.stack(
        [scenario.fading_draws.real, scenario.fading_draws.imag], axis=-1
    )
    return {
        "config": config_to_dict(scenario.config),
        "users": [
            {
                "id": u.id,
                "cycles_per_sec": u.cycles_per_sec,
                "cycles_per_bit": u.cycles_per_bit,
                "max_power_w": u.max_power_w,
                "energy_budget_j": u.energy_budget_j,
            }
            for u in scenario.users
        ],
        "positions": scenario.positions.tolist(),
        "task_bits": scenario.task_bits.tolist(),
        "fading_draws": fading.tolist(),
        "rng_seed": scenario.rng_seed,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    fading = np.asarray(doc["fading_draws"], dtype=float)
    return Scenario(
        config=config_from_dict(doc["config"]),
        users=[MobileUser(**u) for u in doc["users"]],
        positions=np.asarray(doc["positions"], dtype=float),
        task_bits=np.asarray(doc["task_bits"], dtype=float),
        fading_draws=fading[..., 0] + 1j * fading[..., 1],
        rng_seed=int(doc["rng_seed"]),
    )


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh)


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))
