"""Shared scenarios and session-scoped solves reused across the suite."""

import numpy as np
import pytest

from uavmec.baselines import BaselineKind, run_baseline
from uavmec.config import default_config
from uavmec.model import ScenarioConfig, UeSpec
from uavmec.solver import equal_split_bandwidth, solve
from uavmec.trajectory import initial_trajectory

UE_POSITIONS = ((5.0, 5.0), (-5.0, 5.0), (-5.0, -5.0), (-5.0, 5.0))


def stock_config(task_bits=400e6, horizon_s=10.0, n_slots=50, positions=UE_POSITIONS,
                 **kw):
    sizes = task_bits if np.ndim(task_bits) else [task_bits] * len(positions)
    ues = tuple(UeSpec(pos=p, input_bits=float(s))
                for p, s in zip(positions, sizes))
    return ScenarioConfig(horizon_s=horizon_s, n_slots=n_slots, ues=ues, **kw)


def straight_line(cfg):
    frac = np.linspace(0.0, 1.0, cfg.n_slots + 1)[:, None]
    pts = np.asarray(cfg.uav_start) * (1 - frac) + np.asarray(cfg.uav_end) * frac
    from uavmec.model import Trajectory
    return Trajectory(pts)


def random_scenario(rng, n_slots=16, num_ues=2):
    positions = [tuple(rng.uniform(-5.0, 5.0, 2)) for _ in range(num_ues)]
    sizes = rng.uniform(200e6, 600e6, num_ues)
    ues = tuple(UeSpec(pos=p, input_bits=float(s))
                for p, s in zip(positions, sizes))
    return ScenarioConfig(n_slots=n_slots, ues=ues)


@pytest.fixture(scope="session")
def table1_cfg():
    return default_config()


@pytest.fixture(scope="session")
def table1_solution(table1_cfg):
    return solve(table1_cfg)


@pytest.fixture(scope="session")
def table1_baselines(table1_cfg):
    return {kind: run_baseline(kind, table1_cfg) for kind in BaselineKind}


@pytest.fixture(scope="session")
def i500_solutions():
    cfg = stock_config(task_bits=500e6)
    return {"proposed": solve(cfg),
            "offloading_only": run_baseline("offloading_only", cfg)}


@pytest.fixture(scope="session")
def i300_solution():
    return solve(stock_config(task_bits=300e6))


@pytest.fixture(scope="session")
def horizon_solutions():
    return {t: solve(stock_config(horizon_s=t)) for t in (8.0, 12.0)}


@pytest.fixture(scope="session")
def skewed_task_solution():
    return solve(stock_config(task_bits=[600e6, 200e6, 400e6, 200e6]))


@pytest.fixture(scope="session")
def random_scenario_solutions():
    rng = np.random.default_rng(2024)
    out = []
    for _ in range(10):
        cfg = random_scenario(rng)
        out.append((cfg, solve(cfg)))
    return out
