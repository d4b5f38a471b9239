"""Task-routing block: closed forms, dual search, and the lattice oracle."""

import numpy as np
import pytest

from uavmec.model import (BandwidthAllocation, ScenarioConfig, UeSpec,
                          total_energy)
from uavmec.solver import equal_split_bandwidth
from uavmec.task_alloc import (TaskDuals, primal_from_duals,
                               solve_task_allocation)
from conftest import stock_config, straight_line
from oracles import lattice_task_oracle


def tiny_cfg(input_bits=1000.0, n_slots=3, noise_w=1e-9, kappa_uav=1e-28,
             cycles=1000.0, pos=(2.0, 3.0), ap_pos=(0.0, 0.0)):
    return ScenarioConfig(
        n_slots=n_slots, noise_w=noise_w, kappa_uav=kappa_uav, ap_pos=ap_pos,
        ues=(UeSpec(pos=pos, input_bits=input_bits, cycles_per_bit=cycles),))


def duals_for(cfg, lam=None, eta=0.0, beta=0.0):
    d = TaskDuals.zeros(cfg.num_ues, cfg.n_slots)
    if lam is not None:
        d.lam[:] = lam
    d.eta[:] = eta
    d.beta[:] = beta
    return d


class TestClosedForms:
    def test_nonpositive_beta_gives_zero_local(self):
        cfg = stock_config()
        b = equal_split_bandwidth(cfg)
        alloc = primal_from_duals(duals_for(cfg, beta=-1e-6), b,
                                  straight_line(cfg), cfg)
        assert np.all(alloc.l_local == 0.0)

    def test_local_hand_value(self):
        # beta = 3e-13, kappa = 1e-28, C = 1e3, tau = 0.2 -> 200 bits per slot
        cfg = stock_config()
        assert cfg.grid().tau == pytest.approx(0.2)
        b = equal_split_bandwidth(cfg)
        alloc = primal_from_duals(duals_for(cfg, beta=3e-13, eta=0.0), b,
                                  straight_line(cfg), cfg)
        assert alloc.l_local[0, 1] == pytest.approx(200.0, rel=1e-12)

    def test_small_bracket_gives_zero_offload(self):
        cfg = stock_config()
        b = equal_split_bandwidth(cfg)
        # bracket beta - eta <= 0 clamps the log argument
        alloc = primal_from_duals(duals_for(cfg, beta=1e-12, eta=1e-6), b,
                                  straight_line(cfg), cfg)
        assert np.all(alloc.l_offload == 0.0)

    def test_boundary_slots_forced_zero(self):
        cfg = stock_config()
        b = equal_split_bandwidth(cfg)
        alloc = primal_from_duals(duals_for(cfg, beta=1e-5, eta=1e-7), b,
                                  straight_line(cfg), cfg)
        n = cfg.n_slots
        assert np.all(alloc.l_offload[:, n] == 0.0)
        assert np.all(alloc.l_uav[:, 1] == 0.0)
        assert np.all(alloc.l_forward[:, 1] == 0.0)

    def test_zero_bandwidth_zeroes_offload_not_error(self):
        cfg = stock_config()
        b = BandwidthAllocation.zeros(cfg.num_ues, cfg.n_slots)
        alloc = primal_from_duals(duals_for(cfg, beta=1e-5, eta=1e-7), b,
                                  straight_line(cfg), cfg)
        assert np.all(alloc.l_offload == 0.0)
        assert np.all(alloc.l_forward == 0.0)

    def test_monotone_responses(self):
        # totals driving the equality searches move the right way
        cfg = stock_config()
        b = equal_split_bandwidth(cfg)
        traj = straight_line(cfg)
        rng = np.random.default_rng(5)
        for _ in range(8):
            beta = 10.0 ** rng.uniform(-8, -5)
            eta = beta * rng.uniform(0.05, 0.9)
            d0 = duals_for(cfg, beta=beta, eta=eta)
            up_b = duals_for(cfg, beta=beta * 1.02, eta=eta)
            up_e = duals_for(cfg, beta=beta, eta=eta * 1.02)
            a0 = primal_from_duals(d0, b, traj, cfg)
            ab = primal_from_duals(up_b, b, traj, cfg)
            ae = primal_from_duals(up_e, b, traj, cfg)
            total = lambda a: a.l_local.sum() + a.l_offload.sum()
            relay_gap = lambda a: (a.l_uav.sum() + a.l_forward.sum()
                                   - a.l_offload.sum())
            assert total(ab) >= total(a0) - 1e-9
            assert relay_gap(ae) >= relay_gap(a0) - 1e-9


class TestSolve:
    def test_zero_task_gives_zero_everything(self):
        cfg = stock_config(task_bits=0.0)
        b = equal_split_bandwidth(cfg)
        alloc, duals, rep = solve_task_allocation(b, straight_line(cfg), cfg)
        for arr in (alloc.l_local, alloc.l_offload, alloc.l_uav, alloc.l_forward):
            assert np.all(arr == 0.0)
        assert rep.task_energy == 0.0
        assert np.all(duals.lam == 0.0)

    def test_equalities_and_causality_met(self, table1_cfg):
        b = equal_split_bandwidth(table1_cfg)
        alloc, duals, rep = solve_task_allocation(b, straight_line(table1_cfg),
                                                  table1_cfg)
        assert rep.max_causality_violation <= 0.1
        assert np.max(np.abs(rep.task_equality_residual)) <= 0.1
        assert np.max(np.abs(rep.relay_equality_residual)) <= 0.1

    def test_duality_gap_certificate(self, table1_cfg):
        b = equal_split_bandwidth(table1_cfg)
        _, _, rep = solve_task_allocation(b, straight_line(table1_cfg), table1_cfg)
        assert rep.duality_gap_estimate >= -1e-9
        assert rep.duality_gap_estimate <= table1_cfg.tol_inner * rep.task_energy

    def test_complementary_slackness(self, table1_cfg):
        b = equal_split_bandwidth(table1_cfg)
        _, _, rep = solve_task_allocation(b, straight_line(table1_cfg), table1_cfg)
        assert rep.comp_slack_max <= 1e-6

    def test_no_drift_against_energy_model(self, table1_cfg):
        b = equal_split_bandwidth(table1_cfg)
        traj = straight_line(table1_cfg)
        alloc, _, rep = solve_task_allocation(b, traj, table1_cfg)
        br = total_energy(alloc, b, traj, table1_cfg)
        task_part = br.tec - br.e_fly.sum()
        assert task_part == pytest.approx(rep.task_energy, rel=1e-9)

    def test_tiny_instance_matches_lattice_oracle(self):
        cfg = tiny_cfg()
        b = equal_split_bandwidth(cfg)
        traj = straight_line(cfg)
        alloc, _, rep = solve_task_allocation(b, traj, cfg)
        oracle = lattice_task_oracle(cfg, traj, b, step_bits=10.0)
        assert rep.task_energy <= oracle * (1 + 1e-9)
        assert abs(rep.task_energy - oracle) <= 0.01 * oracle

    def test_mixed_regime_matches_lattice_oracle(self):
        # cheap radio so every route carries bits
        cfg = tiny_cfg(noise_w=1e-16)
        b = equal_split_bandwidth(cfg)
        traj = straight_line(cfg)
        alloc, _, rep = solve_task_allocation(b, traj, cfg)
        assert alloc.l_offload.sum() > 0
        oracle = lattice_task_oracle(cfg, traj, b, step_bits=10.0)
        assert abs(rep.task_energy - oracle) <= 0.01 * oracle

    def test_better_relay_channel_shifts_mass_forward(self):
        # same instance, but the relay->AP hop improves a hundredfold while
        # relay computing becomes costly: forwarded bits must grow
        base = tiny_cfg(noise_w=1e-16)
        b = equal_split_bandwidth(base)
        traj = straight_line(base)
        a0, _, r0 = solve_task_allocation(b, traj, base)
        better = tiny_cfg(noise_w=1e-16, kappa_uav=1e-22,
                          ap_pos=(2.0, 3.0))    # co-located with the UE
        a1, _, r1 = solve_task_allocation(b, straight_line(better), better)
        assert a1.l_forward.sum() > a0.l_forward.sum()
        assert a1.l_uav.sum() < a0.l_uav.sum()
        oracle = lattice_task_oracle(better, straight_line(better), b, 10.0)
        assert abs(r1.task_energy - oracle) <= 0.01 * oracle

    def test_warm_start_reproduces_solution(self, table1_cfg):
        b = equal_split_bandwidth(table1_cfg)
        traj = straight_line(table1_cfg)
        a0, duals, r0 = solve_task_allocation(b, traj, table1_cfg)
        a1, _, r1 = solve_task_allocation(b, traj, table1_cfg, warm=duals)
        assert r1.task_energy == pytest.approx(r0.task_energy, rel=1e-6)

    def test_stationarity_residual_tiny(self, table1_cfg):
        b = equal_split_bandwidth(table1_cfg)
        _, _, rep = solve_task_allocation(b, straight_line(table1_cfg), table1_cfg)
        assert rep.stationarity_max <= 1e-6

    def test_pinned_local_routes_everything_through_radio(self, table1_cfg):
        b = equal_split_bandwidth(table1_cfg)
        alloc, _, _ = solve_task_allocation(b, straight_line(table1_cfg),
                                            table1_cfg, pin_local=True)
        assert np.all(alloc.l_local == 0.0)
        for k, ue in enumerate(table1_cfg.ues):
            sent = alloc.l_offload[k, 1:table1_cfg.n_slots].sum()
            assert sent == pytest.approx(ue.input_bits, rel=1e-9)
