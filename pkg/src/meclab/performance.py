"""Latency and energy accounting, the average-latency objective, and
constraint checking for per-slot offloading decisions.

Each user splits its task: a 1-alpha fraction is computed locally, the
alpha fraction is transmitted and processed on the edge server, and the
user finishes when the slower of the two paths finishes. Decisions that
send data with no rate (p = 0) or no server share (beta = 0) get an
infinite-latency sentinel: the quantity is undefined there, and a silent
large number would corrupt averages. Solvers treat such decisions as
infeasible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import channel
from .system import MobileUser, Scenario, SystemConfig

UNSERVED = math.inf  # latency sentinel: task fraction sent but never served

# Column order for the per-user-slot evaluation CSV.
EVALUATION_COLUMNS = (
    "slot", "user", "alpha", "beta", "power_w", "rate_bps",
    "local_s", "off_s", "mec_s", "total_s", "local_j", "off_j",
)


@dataclass
class Decision:
    """One slot's control variables: per-user (alpha, beta, power) vectors."""

    alpha: np.ndarray    # offloaded fraction per user, in [0, 1]
    beta: np.ndarray     # server compute share per user, in [0, 1], sum <= 1
    power_w: np.ndarray  # transmit power per user (W)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        self.power_w = np.asarray(self.power_w, dtype=float)
        if not (len(self.alpha) == len(self.beta) == len(self.power_w)):
            raise ValueError("alpha, beta and power_w must have equal length")

    def copy(self) -> "Decision":
        return Decision(self.alpha.copy(), self.beta.copy(), self.power_w.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Decision):
            return NotImplemented
        return (
            np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.beta, other.beta)
            and np.array_equal(self.power_w, other.power_w)
        )

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "power_w": self.power_w.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Decision":
        return cls(doc["alpha"], doc["beta"], doc["power_w"])


@dataclass
class SlotState:
    """Everything a solver needs about one slot: users, tasks and channels."""

    config: SystemConfig
    users: list[MobileUser]
    task_bits: np.ndarray  # per-user task volume (bits)
    gains: np.ndarray      # per-user composite channel gain

    @property
    def user_count(self) -> int:
        return len(self.users)

    @property
    def max_power(self) -> np.ndarray:
        return np.array([u.max_power_w for u in self.users])

    @property
    def slot_energy_budget(self) -> np.ndarray:
        """Per-user energy allowance for one slot (block budget split evenly)."""
        return np.array(
            [u.energy_budget_j / self.config.slot_count for u in self.users]
        )


def slot_state(scenario: Scenario, slot: int) -> SlotState:
    snap = channel.snapshot(scenario, slot)
    return SlotState(
        config=scenario.config,
        users=scenario.users,
        task_bits=np.asarray(scenario.task_bits[slot], dtype=float),
        gains=snap.gains,
    )


@dataclass
class SlotEvaluation:
    """Per-user latency/energy breakdown for one slot under one decision."""

    local_latency_s: np.ndarray
    offload_latency_s: np.ndarray
    mec_latency_s: np.ndarray
    total_latency_s: np.ndarray
    local_energy_j: np.ndarray
    offload_energy_j: np.ndarray
    rate_bps: np.ndarray

    @property
    def mean_latency_s(self) -> float:
        return float(np.mean(self.total_latency_s))


# --- scalar building blocks --------------------------------------------------


def local_latency(
    alpha: float, task_bits: float, cycles_per_bit: float, cycles_per_sec: float
) -> float:
    """Time to process the retained (1 - alpha) fraction on the device."""
    return (1.0 - alpha) * cycles_per_bit * task_bits / cycles_per_sec


def local_energy(
    alpha: float,
    task_bits: float,
    cycles_per_bit: float,
    cycles_per_sec: float,
    energy_coeff: float,
) -> float:
    """Device energy for local processing; energy per cycle is coeff * f^2."""
    return energy_coeff * cycles_per_sec**2 * (1.0 - alpha) * cycles_per_bit * task_bits


def offload_latency(alpha: float, task_bits: float, rate_bps: float) -> float:
    """Transmission time of the offloaded fraction; unserved if rate is zero."""
    if alpha <= 0.0:
        return 0.0
    if rate_bps <= 0.0:
        return UNSERVED
    return alpha * task_bits / rate_bps


def offload_energy(power_w: float, offload_latency_s: float) -> float:
    """Radio energy: transmit power times time on air."""
    if power_w <= 0.0 or offload_latency_s <= 0.0:
        return 0.0
    return power_w * offload_latency_s


def mec_latency(
    alpha: float,
    task_bits: float,
    server_cycles_per_bit: float,
    beta: float,
    server_cycles_per_sec: float,
) -> float:
    """Server processing time of the offloaded fraction under a beta share."""
    if alpha <= 0.0:
        return 0.0
    if beta <= 0.0:
        return UNSERVED
    return alpha * server_cycles_per_bit * task_bits / (beta * server_cycles_per_sec)


def user_latency(local_s: float, offload_s: float, mec_s: float) -> float:
    """A user finishes when both the local and the remote path have finished."""
    return max(local_s, offload_s + mec_s)


# --- slot-level evaluation ---------------------------------------------------


def evaluate_state(state: SlotState, decision: Decision) -> SlotEvaluation:
    """Evaluate one decision against one slot, interference included."""
    cfg = state.config
    alpha, beta, power = decision.alpha, decision.beta, decision.power_w
    D = state.task_bits
    f = np.array([u.cycles_per_sec for u in state.users])
    phi = np.array([u.cycles_per_bit for u in state.users])

    rates = channel.offload_rates(power, state.gains, cfg)
    local_lat = (1.0 - alpha) * phi * D / f
    local_j = cfg.energy_coeff * f**2 * (1.0 - alpha) * phi * D

    with np.errstate(divide="ignore", invalid="ignore"):
        off_lat = np.where(alpha > 0, alpha * D / rates, 0.0)
        mec_lat = np.where(
            alpha > 0,
            alpha * cfg.server_cycles_per_bit * D / (beta * cfg.server_cycles_per_sec),
            0.0,
        )
        off_j = np.where((power > 0) & (off_lat > 0), power * off_lat, 0.0)

    total = np.maximum(local_lat, off_lat + mec_lat)
    return SlotEvaluation(
        local_latency_s=local_lat,
        offload_latency_s=off_lat,
        mec_latency_s=mec_lat,
        total_latency_s=total,
        local_energy_j=local_j,
        offload_energy_j=off_j,
        rate_bps=rates,
    )


def evaluate_slot(scenario: Scenario, slot: int, decision: Decision) -> SlotEvaluation:
    return evaluate_state(slot_state(scenario, slot), decision)


def slot_energy(state: SlotState, decision: Decision) -> np.ndarray:
    """Per-user total energy (local + radio) spent in one slot."""
    ev = evaluate_state(state, decision)
    return ev.local_energy_j + ev.offload_energy_j


def objective(evaluations: list[SlotEvaluation]) -> float:
    """Average latency over all slots and users."""
    if not evaluations:
        raise ValueError("objective needs at least one slot evaluation")
    return float(np.mean([ev.total_latency_s for ev in evaluations]))


# --- constraint checking -----------------------------------------------------

# Absolute slack for many-term sums (beta simplex, energy accumulation).
SUM_TOLERANCE = 1e-9


@dataclass
class ConstraintCheck:
    name: str
    ok: bool
    worst_violation: float


@dataclass
class ConstraintReport:
    checks: dict[str, ConstraintCheck]

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.checks.values())

    def __getitem__(self, name: str) -> ConstraintCheck:
        return self.checks[name]


def check_constraints(
    scenario: Scenario, decisions: list[Decision]
) -> ConstraintReport:
    """Check a full time block of decisions against every problem constraint.

    Componentwise bounds are closed (a power exactly at its cap passes);
    the beta-sum and energy-budget checks allow SUM_TOLERANCE of float
    round-off.
    """
    if len(decisions) != scenario.slot_count:
        raise ValueError(
            f"need one decision per slot: got {len(decisions)}, "
            f"expected {scenario.slot_count}"
        )
    p_max = np.array([u.max_power_w for u in scenario.users])
    e_max = np.array([u.energy_budget_j for u in scenario.users])

    power_viol = 0.0
    alpha_viol = 0.0
    beta_viol = 0.0
    beta_sum_viol = 0.0
    energy = np.zeros(scenario.user_count)
    for t, dec in enumerate(decisions):
        power_viol = max(
            power_viol,
            float(np.max(np.maximum(dec.power_w - p_max, -dec.power_w), initial=0.0)),
        )
        alpha_viol = max(
            alpha_viol,
            float(np.max(np.maximum(dec.alpha - 1.0, -dec.alpha), initial=0.0)),
        )
        beta_viol = max(
            beta_viol,
            float(np.max(np.maximum(dec.beta - 1.0, -dec.beta), initial=0.0)),
        )
        beta_sum_viol = max(beta_sum_viol, float(dec.beta.sum()) - 1.0)
        energy += slot_energy(slot_state(scenario, t), dec)

    energy_viol = float(np.max(energy - e_max, initial=0.0))
    checks = {
        "power_bounds": ConstraintCheck("power_bounds", power_viol <= 0.0, max(power_viol, 0.0)),
        "alpha_range": ConstraintCheck("alpha_range", alpha_viol <= 0.0, max(alpha_viol, 0.0)),
        "beta_range": ConstraintCheck("beta_range", beta_viol <= 0.0, max(beta_viol, 0.0)),
        "beta_sum": ConstraintCheck("beta_sum", beta_sum_viol <= SUM_TOLERANCE, max(beta_sum_viol, 0.0)),
        "energy_budget": ConstraintCheck("energy_budget", energy_viol <= SUM_TOLERANCE, max(energy_viol, 0.0)),
    }
    return ConstraintReport(checks=checks)


def evaluation_rows(
    slot: int, decision: Decision, evaluation: SlotEvaluation
) -> list[list]:
    """Flatten one slot's evaluation into CSV rows (see EVALUATION_COLUMNS)."""
    rows = []
    for k in range(len(decision.alpha)):
        rows.append([
            slot, k,
            float(decision.alpha[k]), float(decision.beta[k]), float(decision.power_w[k]),
            float(evaluation.rate_bps[k]),
            float(evaluation.local_latency_s[k]),
            float(evaluation.offload_latency_s[k]),
            float(evaluation.mec_latency_s[k]),
            float(evaluation.total_latency_s[k]),
            float(evaluation.local_energy_j[k]),
            float(evaluation.offload_energy_j[k]),
        ])
    return rows
