"""Energy-optimal task routing, bandwidth sharing, and flight planning for a
relay-assisted aerial edge-computing system."""

from .model import (AllocationError, BandwidthAllocation, ConfigError,
                    EnergyBreakdown, ScenarioConfig, SolverError,
                    TaskAllocation, TimeGrid, Trajectory, UeSpec, Violation,
                    channel_gain_ap, channel_gain_ue, check_feasibility,
                    fly_energy, local_energy, total_energy,
                    uav_compute_energy, uav_offload_energy, ue_offload_energy)
from .lambertw import LambertResult, w0, w0_log
from .task_alloc import (TaskDuals, TaskSolveReport, primal_from_duals,
                         solve_task_allocation)
from .bandwidth import (BandwidthDuals, BandwidthSolveReport, band_from_dual,
                        solve_bandwidth)
from .trajectory import (ApproxProblem, ScaState, build_approx_problem,
                         initial_trajectory, sca_solve, solve_inner,
                         trajectory_objective)
from .solver import SolveReport, Solution, equal_split_bandwidth, solve
from .baselines import BaselineKind, BaselineResult, run_baseline
from .config import config_from_dict, default_config, load_config

__version__ = "0.1.0"
