"""Per-slot decision solvers: trivial baselines, a deterministic alternating
heuristic, an exhaustive discretized oracle, and feasibility repair.

The block-level energy budget couples slots; solvers stay myopic by
enforcing the even per-slot split budget_j / slot_count, which guarantees
the cumulative budget by construction. The oracle enumerates every grid
point and is the ground truth for solution quality at small scale; its
grids always contain the baseline decisions (endpoints 0 and 1, the power
cap, and the equal server share 1/K), so baselines can never beat it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product

import numpy as np

from . import channel
from .performance import Decision, SlotState, evaluate_state, slot_energy

# Slack shared with the constraint checker for sum-type feasibility tests.
FEASIBILITY_TOL = 1e-9


class SolverKind(str, Enum):
    LOCAL_ONLY = "local-only"
    FULL_OFFLOAD_EQUAL = "full-offload"
    RANDOM_FEASIBLE = "random"
    ALTERNATING = "alternating"
    GRID_ORACLE = "grid-oracle"
    RAG_LLM = "rag-llm"


@dataclass
class SolverSpec:
    """Addressable solver configuration (CLI: --solver grid-oracle --grid 11)."""

    kind: SolverKind = SolverKind.ALTERNATING
    grid_resolution: int = 11    # points per axis for the oracle
    max_rounds: int = 12         # alternating-iteration cap
    power_grid_points: int = 21  # line-search grid for the heuristic's power step
    seed: int = 0
    eval_budget: int = 100_000_000  # oracle refuses enumerations above this

    def __post_init__(self):
        self.kind = SolverKind(self.kind)
        if self.grid_resolution < 2:
            raise ValueError("grid_resolution must be >= 2")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.power_grid_points < 2:
            raise ValueError("power_grid_points must be >= 2")


class GridBudgetError(RuntimeError):
    """Oracle enumeration would exceed the configured evaluation budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(
            f"grid oracle needs {required} evaluations, budget is {budget}"
        )
        self.required = required
        self.budget = budget


def _mean_latency(state: SlotState, alpha, beta, power) -> float:
    return evaluate_state(state, Decision(alpha, beta, power)).mean_latency_s


def _slot_feasible(state: SlotState, decision: Decision) -> bool:
    """Componentwise bounds, beta simplex and the per-slot energy budget."""
    p_max = state.max_power
    if np.any(decision.power_w < 0) or np.any(decision.power_w > p_max):
        return False
    if np.any(decision.alpha < 0) or np.any(decision.alpha > 1):
        return False
    if np.any(decision.beta < 0) or np.any(decision.beta > 1):
        return False
    if decision.beta.sum() > 1.0 + FEASIBILITY_TOL:
        return False
    budget = state.slot_energy_budget
    return bool(np.all(slot_energy(state, decision) <= budget + FEASIBILITY_TOL))


# --- baselines ----------------------------------------------------------------


def solve_local_only(state: SlotState) -> Decision:
    """Everything on-device: no offloading, no transmission."""
    K = state.user_count
    return Decision(np.zeros(K), np.zeros(K), np.zeros(K))


def solve_full_offload_equal(state: SlotState) -> Decision:
    """Everything to the server at full power, compute split equally."""
    K = state.user_count
    return Decision(np.ones(K), np.full(K, 1.0 / K), state.max_power.copy())


def solve_random_feasible(state: SlotState, spec: SolverSpec) -> Decision:
    """Uniform random triples projected onto the constraint set."""
    rng = np.random.default_rng(spec.seed)
    K = state.user_count
    alpha = rng.uniform(0.0, 1.0, K)
    beta = rng.uniform(0.0, 1.0, K)
    power = rng.uniform(0.0, 1.0, K) * state.max_power
    return repair_decision(alpha, beta, power, state)


# --- alternating heuristic -----------------------------------------------------


def _closed_form_alpha(state: SlotState, beta: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Latency-equalizing offload fraction given a compute share and rates.

    Balances the local path (1-a)*phi/f against the remote path
    a*(1/r + phi_srv/(beta*F)) per bit; the task volume cancels. Users with
    no rate or no server share keep everything local.
    """
    cfg = state.config
    f = np.array([u.cycles_per_sec for u in state.users])
    phi = np.array([u.cycles_per_bit for u in state.users])
    local_per_bit = phi / f
    with np.errstate(divide="ignore"):
        remote_per_bit = 1.0 / rates + cfg.server_cycles_per_bit / (
            beta * cfg.server_cycles_per_sec
        )
    alpha = np.where(
        np.isfinite(remote_per_bit),
        local_per_bit / (local_per_bit + remote_per_bit),
        0.0,
    )
    return np.clip(alpha, 0.0, 1.0)


def solve_alternating(state: SlotState, spec: SolverSpec) -> Decision:
    """Coordinate descent over (alpha, beta, power) with a monotone safeguard.

    Each round: (i) set alpha to the latency-equalizing closed form,
    (ii) split the server share proportionally to per-user edge demand,
    (iii) grid line-search each user's power. A step is kept only when it
    does not increase the slot objective and stays inside the per-slot
    energy budget, so the objective is non-increasing round over round.
    """
    cfg = state.config
    K = state.user_count
    phi_srv = cfg.server_cycles_per_bit
    D = state.task_bits
    p_max = state.max_power
    budget = state.slot_energy_budget

    # Start at local-only with full transmit power so step (i) sees real rates.
    alpha = np.zeros(K)
    beta = np.full(K, 1.0 / K)
    power = p_max.copy()
    best = Decision(alpha, beta, power)
    best_obj = _mean_latency(state, alpha, beta, power)

    def try_accept(alpha_c, beta_c, power_c) -> None:
        nonlocal best, best_obj
        cand = Decision(alpha_c, beta_c, power_c)
        obj = evaluate_state(state, cand).mean_latency_s
        if obj <= best_obj and _slot_feasible(state, cand):
            best, best_obj = cand, obj

    power_grids = [np.linspace(0.0, p_max[k], spec.power_grid_points) for k in range(K)]

    for _ in range(spec.max_rounds):
        round_start_obj = best_obj

        # (i) latency-equalizing alpha given (beta, power)
        rates = channel.offload_rates(best.power_w, state.gains, cfg)
        try_accept(_closed_form_alpha(state, best.beta, rates), best.beta, best.power_w)

        # (ii) server share proportional to edge demand alpha * phi_srv * D
        demand = best.alpha * phi_srv * D
        total = demand.sum()
        beta_c = demand / total if total > 0 else np.full(K, 1.0 / K)
        try_accept(best.alpha, beta_c, best.power_w)

        # (iii) per-user power line search, others held fixed
        for k in range(K):
            candidates = np.unique(np.append(power_grids[k], best.power_w[k]))
            trial_powers = np.tile(best.power_w, (len(candidates), 1))
            trial_powers[:, k] = candidates
            best_val = best_obj
            best_p = best.power_w[k]
            for row in trial_powers:
                cand = Decision(best.alpha, best.beta, row)
                obj = evaluate_state(state, cand).mean_latency_s
                if obj < best_val - 0.0 and _slot_feasible(state, cand):
                    best_val, best_p = obj, row[k]
            if best_p != best.power_w[k]:
                new_power = best.power_w.copy()
                new_power[k] = best_p
                best = Decision(best.alpha, best.beta, new_power)
                best_obj = best_val

        if round_start_obj - best_obj < 1e-12:
            break

    if not _slot_feasible(state, best):
        # Only reachable when the starting point itself breaks the energy
        # budget; hand the result to the repair projection.
        best = repair_decision(best.alpha, best.beta, best.power_w, state)
    return best


# --- exhaustive grid oracle -----------------------------------------------------


def oracle_grids(
    state: SlotState, resolution: int
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    """Per-axis grids. Endpoints 0, 1, the power caps and 1/K are always present
    so the trivial baselines are grid-representable."""
    K = state.user_count
    alpha_axis = np.linspace(0.0, 1.0, resolution)
    beta_axis = np.unique(np.append(np.linspace(0.0, 1.0, resolution), 1.0 / K))
    power_axes = [
        np.linspace(0.0, state.max_power[k], resolution) for k in range(K)
    ]
    return alpha_axis, beta_axis, power_axes


def solve_grid_oracle(state: SlotState, spec: SolverSpec) -> Decision:
    """Enumerate every grid decision and return the feasible minimizer.

    Ties break to the lexicographically smallest (alpha, beta, power)
    vector, which falls out of scanning candidates in lexicographic order
    and keeping the first minimum.
    """
    cfg = state.config
    K = state.user_count
    alpha_axis, beta_axis, power_axes = oracle_grids(state, spec.grid_resolution)

    required = (len(alpha_axis) ** K) * (len(beta_axis) ** K) * (
        spec.grid_resolution**K
    )
    if required > spec.eval_budget:
        raise GridBudgetError(required, spec.eval_budget)

    f = np.array([u.cycles_per_sec for u in state.users])
    phi = np.array([u.cycles_per_bit for u in state.users])
    D = state.task_bits
    budget = state.slot_energy_budget
    phi_srv = cfg.server_cycles_per_bit
    F = cfg.server_cycles_per_sec

    # Candidate vectors per block, each list in lexicographic order.
    alphas = np.array(list(product(alpha_axis, repeat=K)))          # (Na, K)
    betas = np.array([b for b in product(beta_axis, repeat=K)
                      if sum(b) <= 1.0 + FEASIBILITY_TOL])          # (Nb, K)
    powers = np.array(list(product(*power_axes)))                   # (Np, K)

    rates = np.empty_like(powers)  # (Np, K)
    for i, p in enumerate(powers):
        rates[i] = channel.offload_rates(p, state.gains, cfg)

    with np.errstate(divide="ignore", invalid="ignore"):
        # (Na, 1, K) and (1, Np, K) pieces that do not involve beta
        local_lat = ((1.0 - alphas) * phi * D / f)[:, None, :]
        local_j = (cfg.energy_coeff * f**2 * (1.0 - alphas) * phi * D)[:, None, :]
        off_lat = np.where(
            alphas[:, None, :] > 0, alphas[:, None, :] * D / rates[None, :, :], 0.0
        )
        off_j = np.where(
            (powers[None, :, :] > 0) & (off_lat > 0),
            powers[None, :, :] * off_lat,
            0.0,
        )
        # (Nb, K) server latency per offloaded bit-volume unit
        mec_per_alpha = np.where(betas > 0, phi_srv * D / (betas * F), np.inf)

    energy_ok = np.all(local_j + off_j <= budget + FEASIBILITY_TOL, axis=2)  # (Na, Np)

    best_obj = np.inf
    best_idx: tuple[int, int, int] | None = None
    with np.errstate(invalid="ignore"):
        for ia in range(len(alphas)):
            # remote path latency for every (beta, power) pair at this alpha
            mec_lat = np.where(
                alphas[ia][None, :] > 0, alphas[ia][None, :] * mec_per_alpha, 0.0
            )  # (Nb, K)
            remote = off_lat[ia][None, :, :] + mec_lat[:, None, :]  # (Nb, Np, K)
            total = np.maximum(local_lat[ia][None, :, :], remote)
            obj = total.mean(axis=2)  # (Nb, Np)
            obj = np.where(energy_ok[ia][None, :], obj, np.inf)
            flat = int(np.argmin(obj))
            val = float(obj.flat[flat])
            if val < best_obj:
                best_obj = val
                best_idx = (ia, flat // obj.shape[1], flat % obj.shape[1])

    assert best_idx is not None
    ia, ib, ip = best_idx
    return Decision(alphas[ia].copy(), betas[ib].copy(), powers[ip].copy())


def project_to_grid(decision: Decision, state: SlotState, resolution: int) -> Decision:
    """Snap a decision onto the oracle's grid without leaving the feasible set.

    Alpha snaps to the nearest grid point; beta and power snap downward so
    the simplex and power-cap constraints survive the projection. Any grid
    point is bounded below by the oracle optimum, which makes projection
    the fair way to compare continuous solvers against the oracle.
    """
    alpha_axis, beta_axis, power_axes = oracle_grids(state, resolution)

    def nearest(axis: np.ndarray, values: np.ndarray) -> np.ndarray:
        idx = np.abs(axis[None, :] - values[:, None]).argmin(axis=1)
        return axis[idx]

    def floor_to(axis: np.ndarray, values: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(axis, values + 1e-15, side="right") - 1
        return axis[np.clip(idx, 0, len(axis) - 1)]

    alpha = nearest(alpha_axis, decision.alpha)
    beta = floor_to(beta_axis, decision.beta)
    power = np.array(
        [floor_to(power_axes[k], decision.power_w[k : k + 1])[0]
         for k in range(state.user_count)]
    )
    return Decision(alpha, beta, power)


# --- feasibility repair ----------------------------------------------------------


def repair_decision(alpha, beta, power, state: SlotState) -> Decision:
    """Project arbitrary (possibly garbage) triples onto the constraint set.

    Non-finite entries become 0, boxes are clamped, an oversubscribed beta
    is rescaled to sum exactly 1, and if the slot energy overshoots the
    per-slot budget all powers are scaled down by bisection. Idempotent:
    a feasible decision comes back unchanged.
    """
    K = state.user_count

    def sanitize(v) -> np.ndarray:
        arr = np.asarray(v, dtype=float).reshape(-1)
        if len(arr) != K:
            fixed = np.zeros(K)
            fixed[: min(K, len(arr))] = arr[: min(K, len(arr))]
            arr = fixed
        return np.where(np.isfinite(arr), arr, 0.0)

    alpha = np.clip(sanitize(alpha), 0.0, 1.0)
    beta = np.clip(sanitize(beta), 0.0, 1.0)
    power = np.clip(sanitize(power), 0.0, state.max_power)

    total = beta.sum()
    if total > 1.0 + FEASIBILITY_TOL:
        beta = beta / total

    budget = state.slot_energy_budget

    def fits(p: np.ndarray) -> bool:
        dec = Decision(alpha, beta, p)
        return bool(np.all(slot_energy(state, dec) <= budget + FEASIBILITY_TOL))

    if not fits(power):
        if not fits(np.zeros(K)):
            # Local compute alone busts the budget; powering down is all the
            # repair can do.
            power = np.zeros(K)
        else:
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if fits(mid * power):
                    lo = mid
                else:
                    hi = mid
            power = lo * power

    return Decision(alpha, beta, power)


# --- dispatch ---------------------------------------------------------------------


def solve(state: SlotState, spec: SolverSpec) -> Decision:
    """Run the solver named by ``spec.kind`` on one slot."""
    if spec.kind is SolverKind.LOCAL_ONLY:
        return solve_local_only(state)
    if spec.kind is SolverKind.FULL_OFFLOAD_EQUAL:
        return solve_full_offload_equal(state)
    if spec.kind is SolverKind.RANDOM_FEASIBLE:
        return solve_random_feasible(state, spec)
    if spec.kind is SolverKind.ALTERNATING:
        return solve_alternating(state, spec)
    if spec.kind is SolverKind.GRID_ORACLE:
        return solve_grid_oracle(state, spec)
    raise ValueError(
        f"solver kind {spec.kind.value!r} is not a per-slot solver; "
        "use the llm pipeline for rag-llm"
    )
