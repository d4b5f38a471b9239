"""Three-block alternating minimization of the total energy consumption.

Each outer iteration solves the task-routing block, the bandwidth-split
block, and the flight-path block in that order, every block against the
incumbent values of the other two.  A block's candidate is adopted only if
it does not increase the total, which keeps the energy trace exactly
non-increasing even in the presence of solver tolerances.  Bandwidth on
idle (UE, slot) pairs is re-offered to the next task block at the equal
split so a slot silenced in one iteration can re-enter later.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import BandwidthDuals, solve_bandwidth
from .model import (BandwidthAllocation, EnergyBreakdown, ScenarioConfig,
                    SolverError, TaskAllocation, Trajectory, check_feasibility,
                    total_energy)
from .task_alloc import TaskDuals, solve_task_allocation
from .trajectory import initial_trajectory, sca_solve


@dataclass
class SolveReport:
    outer_iterations: int = 0
    tec_trace: list = field(default_factory=list)
    block_deltas: list = field(default_factory=list)
    final_breakdown: EnergyBreakdown | None = None
    final_violations: list = field(default_factory=list)
    wall_time_s: float = 0.0
    converged: bool = False
    task_report: object = None
    bandwidth_report: object = None
    sca_traces: list = field(default_factory=list)

    def summary(self):
        return {
            "outer_iterations": self.outer_iterations,
            "converged": self.converged,
            "tec": self.tec_trace[-1] if self.tec_trace else None,
        }


@dataclass(frozen=True)
class Solution:
    tasks: TaskAllocation
    bandwidth: BandwidthAllocation
    trajectory: Trajectory
    report: SolveReport


def equal_split_bandwidth(cfg: ScenarioConfig) -> BandwidthAllocation:
    """Half the band to each link on every slot where the link may carry bits."""
    n = cfg.n_slots
    b = BandwidthAllocation.zeros(cfg.num_ues, n)
    b.b_offload[:, 1:n] = cfg.bandwidth_hz / 2.0
    b.b_forward[:, 2:] = cfg.bandwidth_hz / 2.0
    return b


def _revive_idle(b: BandwidthAllocation, cfg: ScenarioConfig) -> BandwidthAllocation:
    """Re-offer the equal split on pairs where both links ended up at zero."""
    n = cfg.n_slots
    out = b.copy()
    idle = (out.b_offload <= 0.0) & (out.b_forward <= 0.0)
    half = cfg.bandwidth_hz / 2.0
    off = idle.copy()
    off[:, 0] = False
    off[:, n] = False
    out.b_offload[off] = half
    fwd = idle.copy()
    fwd[:, :2] = False
    out.b_forward[fwd] = half
    return out


def solve(cfg: ScenarioConfig, max_outer=50, pin_local=False,
          fixed_trajectory: Trajectory | None = None,
          fixed_bandwidth: BandwidthAllocation | None = None) -> Solution:
    """Run the alternating optimization to a stationary total energy.

    ``pin_local`` forbids on-UE computing; ``fixed_trajectory`` /
    ``fixed_bandwidth`` freeze those blocks (used by the comparison
    schemes).  The returned solution is feasible and its energy trace is
    non-increasing.
    """
    cfg.validate()
    t_start = time.perf_counter()
    report = SolveReport()

    traj = fixed_trajectory.copy() if fixed_trajectory is not None \
        else initial_trajectory(cfg)
    bw = fixed_bandwidth.copy() if fixed_bandwidth is not None \
        else equal_split_bandwidth(cfg)
    tasks, duals, task_rep = solve_task_allocation(
        bw, traj, cfg, warm=None, pin_local=pin_local)
    tec = total_energy(tasks, bw, traj, cfg).tec
    report.tec_trace.append(tec)
    bw_rep = None

    for outer in range(1, max_outer + 1):
        deltas = {}
        tec_before = tec

        if outer > 1:
            offer = bw if fixed_bandwidth is not None else _revive_idle(bw, cfg)
            cand_tasks, cand_duals, task_rep_c = solve_task_allocation(
                offer, traj, cfg, warm=duals, pin_local=pin_local)
            cand_tec = total_energy(cand_tasks, offer, traj, cfg).tec
            if cand_tec <= tec:
                tasks, duals, task_rep = cand_tasks, cand_duals, task_rep_c
                bw, tec = offer, cand_tec
        deltas["task"] = tec - tec_before

        if fixed_bandwidth is None:
            t0 = tec
            cand_bw, _, bw_rep_c = solve_bandwidth(tasks, traj, cfg)
            cand_tec = total_energy(tasks, cand_bw, traj, cfg).tec
            if cand_tec <= tec:
                bw, tec, bw_rep = cand_bw, cand_tec, bw_rep_c
            deltas["bandwidth"] = tec - t0

        if fixed_trajectory is None:
            t0 = tec
            cand_traj, sca_state = sca_solve(tasks, bw, traj, cfg)
            cand_tec = total_energy(tasks, bw, cand_traj, cfg).tec
            if cand_tec <= tec:
                traj, tec = cand_traj, cand_tec
            report.sca_traces.append(sca_state.objective_trace)
            deltas["trajectory"] = tec - t0

        report.tec_trace.append(tec)
        report.block_deltas.append(deltas)
        report.outer_iterations = outer
        if tec_before - tec <= cfg.tol_outer * max(abs(tec_before), 1e-300):
            report.converged = True
            break

    report.task_report = task_rep
    report.bandwidth_report = bw_rep
    report.final_breakdown = total_energy(tasks, bw, traj, cfg)
    report.final_violations = check_feasibility(tasks, bw, traj, cfg)
    report.wall_time_s = time.perf_counter() - t_start
    if report.final_violations:
        raise SolverError(
            "alternating solve ended infeasible",
            best=Solution(tasks, bw, traj, report),
            residuals={"violations": [v.code for v in report.final_violations]})
    return Solution(tasks, bw, traj, report)
