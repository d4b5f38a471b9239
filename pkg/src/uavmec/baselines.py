"""Comparison schemes against the full three-block optimization.

``local_computing``  every task bit computed on its own UE, spread evenly
                     over the slots (the cubic law makes the even split
                     optimal); the UAV still flies the straight line and
                     its propulsion is charged to the total.
``direct_trajectory`` straight-line flight at the average speed;
                     task routing and bandwidth still alternate.
``offloading_only``  full optimization with on-UE computing forbidden.
``equal_bandwidth``  full optimization with every split pinned to half
                     the band (boundary zeros kept).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import (BandwidthAllocation, ScenarioConfig, TaskAllocation,
                    Trajectory, total_energy)
from .solver import SolveReport, Solution, equal_split_bandwidth, solve
from .trajectory import initial_trajectory


class BaselineKind(str, Enum):
    local_computing = "local_computing"
    direct_trajectory = "direct_trajectory"
    offloading_only = "offloading_only"
    equal_bandwidth = "equal_bandwidth"


@dataclass(frozen=True)
class BaselineResult:
    kind: BaselineKind
    solution: Solution
    metadata: dict


def run_baseline(kind, cfg: ScenarioConfig, max_outer=50) -> BaselineResult:
    """Evaluate one comparison scheme; the result is feasible for the
    scheme's own restricted constraint set."""
    kind = BaselineKind(kind)
    if kind is BaselineKind.local_computing:
        return _local_computing(cfg)
    if kind is BaselineKind.direct_trajectory:
        sol = solve(cfg, max_outer=max_outer,
                    fixed_trajectory=initial_trajectory(cfg))
        return BaselineResult(kind, sol, {"trajectory": "straight-line"})
    if kind is BaselineKind.offloading_only:
        sol = solve(cfg, max_outer=max_outer, pin_local=True)
        return BaselineResult(kind, sol, {"local_computing": "disabled"})
    sol = solve(cfg, max_outer=max_outer,
                fixed_bandwidth=equal_split_bandwidth(cfg))
    return BaselineResult(kind, sol, {"bandwidth": "equal-split"})


def _local_computing(cfg: ScenarioConfig) -> BaselineResult:
    cfg.validate()
    n = cfg.n_slots
    tasks = TaskAllocation.zeros(cfg.num_ues, n)
    for k, ue in enumerate(cfg.ues):
        tasks.l_local[k, 1:] = ue.input_bits / n
    bw = BandwidthAllocation.zeros(cfg.num_ues, n)
    traj = initial_trajectory(cfg)
    breakdown = total_energy(tasks, bw, traj, cfg)
    report = SolveReport(outer_iterations=1, tec_trace=[breakdown.tec],
                         final_breakdown=breakdown, converged=True)
    sol = Solution(tasks, bw, traj, report)
    # The propulsion of the (idle) UAV is included in the total so the
    # comparison uses the same objective as every other scheme.
    return BaselineResult(BaselineKind.local_computing, sol,
                          {"uav_fly_energy_included": True,
                           "uav_fly_energy_joules": float(breakdown.e_fly.sum())})
