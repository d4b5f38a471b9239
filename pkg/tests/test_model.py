"""Channel/energy formulas, scenario validation, and the feasibility checker."""

import numpy as np
import pytest

from uavmec.model import (AllocationError, BandwidthAllocation, ConfigError,
                          ScenarioConfig, TaskAllocation, TimeGrid, Trajectory,
                          UeSpec, channel_gain_ap, channel_gain_ue,
                          check_feasibility, fly_energy, local_energy,
                          total_energy, uav_compute_energy, ue_offload_energy,
                          uav_offload_energy)
from conftest import stock_config, straight_line


def _cfg(**kw):
    return stock_config(**kw)


class TestChannelGain:
    def test_overhead_point(self):
        cfg = _cfg(ap_pos=(0.0, 0.0))
        assert channel_gain_ap((0.0, 0.0), cfg) == pytest.approx(1e-5, rel=1e-12)

    def test_distance_symmetry(self):
        a = channel_gain_ap((0.0, 0.0), _cfg(ap_pos=(10.0, 0.0)))
        b = channel_gain_ap((10.0, 0.0), _cfg(ap_pos=(0.0, 0.0)))
        assert a == pytest.approx(b, rel=1e-14)

    def test_three_four_five(self):
        cfg = _cfg(ap_pos=(0.0, 0.0))
        assert channel_gain_ap((3.0, 4.0), cfg) == pytest.approx(8e-6, rel=1e-12)

    def test_ue_matches_ap_law(self):
        cfg = _cfg(positions=((5.0, 5.0),), task_bits=[1e6], ap_pos=(5.0, 5.0))
        u = (1.0, 2.0)
        assert channel_gain_ue(0, u, cfg) == pytest.approx(
            channel_gain_ap(u, cfg), rel=1e-14)

    def test_monotone_in_distance(self):
        cfg = _cfg()
        gains = [channel_gain_ue(0, (5.0 + d, 5.0), cfg) for d in np.linspace(0, 30, 40)]
        assert all(g1 > g2 for g1, g2 in zip(gains, gains[1:]))

    def test_rigid_translation_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            shift = rng.uniform(-50, 50, 2)
            cfg = _cfg(ap_pos=(1.0, 2.0))
            cfg2 = _cfg(ap_pos=tuple(np.array([1.0, 2.0]) + shift))
            u = rng.uniform(-10, 10, 2)
            assert channel_gain_ap(u + shift, cfg2) == pytest.approx(
                channel_gain_ap(u, cfg), rel=1e-12)


class TestEnergies:
    grid = TimeGrid(tau=0.2, delta=0.05)

    def test_local_zero(self):
        ue = UeSpec(pos=(0, 0), input_bits=1e6)
        assert local_energy(0.0, ue, self.grid) == 0.0

    def test_local_hand_value(self):
        ue = UeSpec(pos=(0, 0), input_bits=1e6, cycles_per_bit=1e3, kappa=1e-28)
        assert local_energy(200.0, ue, self.grid) == pytest.approx(2e-11, rel=1e-12)

    def test_local_cubic_law(self):
        ue = UeSpec(pos=(0, 0), input_bits=1e6)
        assert local_energy(400.0, ue, self.grid) == pytest.approx(
            8 * local_energy(200.0, ue, self.grid), rel=1e-12)

    def test_local_rejects_negative(self):
        ue = UeSpec(pos=(0, 0), input_bits=1e6)
        with pytest.raises(AllocationError):
            local_energy(-1.0, ue, self.grid)

    def test_offload_hand_value(self):
        cfg = _cfg()
        bits = 0.05 * 1e6  # one bit per second per hertz
        e = ue_offload_energy(bits, 1e6, 1e-5, cfg, self.grid)
        assert e == pytest.approx(5e-6, rel=1e-12)

    def test_offload_zero_bits_any_bandwidth(self):
        cfg = _cfg()
        assert ue_offload_energy(0.0, 0.0, 1e-5, cfg, self.grid) == 0.0

    def test_offload_bits_without_bandwidth_rejected(self):
        cfg = _cfg()
        with pytest.raises(AllocationError):
            ue_offload_energy(10.0, 0.0, 1e-5, cfg, self.grid)

    def test_offload_convex_increasing(self):
        cfg = _cfg()
        ls = np.linspace(1e3, 1e6, 50)
        es = ue_offload_energy(ls, np.full_like(ls, 1e6), 1e-5, cfg, self.grid)
        d1 = np.diff(es)
        assert np.all(d1 > 0)
        assert np.all(np.diff(d1) > 0)

    def test_uav_compute_hand_value(self):
        cfg = _cfg()
        ue = UeSpec(pos=(0, 0), input_bits=1e6, cycles_per_bit=1e3)
        e = uav_compute_energy(100.0, ue, cfg, self.grid)
        assert e == pytest.approx(4e-11, rel=1e-12)

    def test_uav_compute_delta_scaling(self):
        cfg = _cfg()
        ue = UeSpec(pos=(0, 0), input_bits=1e6)
        e1 = uav_compute_energy(100.0, ue, cfg, self.grid)
        e2 = uav_compute_energy(100.0, ue, cfg, TimeGrid(tau=0.4, delta=0.1))
        assert e1 == pytest.approx(4 * e2, rel=1e-12)

    def test_forward_equals_offload_law(self):
        cfg = _cfg()
        a = ue_offload_energy(5e4, 1e6, 8e-6, cfg, self.grid)
        b = uav_offload_energy(5e4, 1e6, 8e-6, cfg, self.grid)
        assert a == pytest.approx(b, rel=1e-14)

    def test_forward_hand_value(self):
        cfg = _cfg()
        bits = 2 * 0.05 * 1e6
        e = uav_offload_energy(bits, 1e6, 8e-6, cfg, self.grid)
        assert e == pytest.approx(1.875e-5, rel=1e-12)

    def test_fly_hand_value(self):
        cfg = _cfg()
        assert fly_energy(10.0, cfg, self.grid) == pytest.approx(1.54752, rel=1e-12)

    def test_fly_optimal_speed(self):
        cfg = _cfg()
        v_star = (cfg.theta2 / (3 * cfg.theta1)) ** 0.25
        assert v_star == pytest.approx(5.427, abs=5e-4)
        grid_v = np.linspace(0.5, 10.0, 20000)
        e = fly_energy(grid_v, cfg, self.grid)
        assert grid_v[np.argmin(e)] == pytest.approx(v_star, abs=1e-3)

    def test_fly_rejects_zero_speed(self):
        with pytest.raises(AllocationError):
            fly_energy(0.0, _cfg(), self.grid)

    def test_energy_convexity_in_bits(self):
        # second difference positive at random points for every bit-priced law
        cfg = _cfg()
        ue = UeSpec(pos=(0, 0), input_bits=1e6)
        rng = np.random.default_rng(11)
        for _ in range(10):
            x = rng.uniform(1e3, 1e6)
            h = max(1.0, 1e-4 * x)
            for f in (lambda v: local_energy(v, ue, self.grid),
                      lambda v: ue_offload_energy(v, 5e5, 1e-5, cfg, self.grid),
                      lambda v: uav_compute_energy(v, ue, cfg, self.grid)):
                second = f(x + h) - 2 * f(x) + f(x - h)
                assert second > 0


class TestTotalEnergy:
    def test_all_local_table1_value(self):
        cfg = _cfg()
        n = cfg.n_slots
        tasks = TaskAllocation.zeros(cfg.num_ues, n)
        for k, ue in enumerate(cfg.ues):
            tasks.l_local[k, 1:] = ue.input_bits / n
        bw = BandwidthAllocation.zeros(cfg.num_ues, n)
        traj = straight_line(cfg)
        br = total_energy(tasks, bw, traj, cfg)
        assert br.e_local.sum() == pytest.approx(2.56e5, rel=1e-9)
        assert br.e_fly.sum() == pytest.approx(159.82, abs=5e-3)
        assert br.tec == pytest.approx(br.e_local.sum() + br.e_fly.sum(), rel=1e-12)

    def test_zero_tasks_fly_only(self):
        cfg = _cfg()
        tasks = TaskAllocation.zeros(cfg.num_ues, cfg.n_slots)
        bw = BandwidthAllocation.zeros(cfg.num_ues, cfg.n_slots)
        br = total_energy(tasks, bw, straight_line(cfg), cfg)
        assert br.tec == pytest.approx(br.e_fly.sum(), rel=1e-14)

    def test_component_sum_and_slot_additivity(self):
        cfg = _cfg(n_slots=10, task_bits=1e6)
        n = cfg.n_slots
        tasks = TaskAllocation.zeros(cfg.num_ues, n)
        bw = BandwidthAllocation.zeros(cfg.num_ues, n)
        rng = np.random.default_rng(3)
        tasks.l_local[:, 1:] = rng.uniform(0, 1e4, (cfg.num_ues, n))
        tasks.l_offload[:, 1:n] = rng.uniform(0, 1e4, (cfg.num_ues, n - 1))
        bw.b_offload[:, 1:n] = 1e7
        br = total_energy(tasks, bw, straight_line(cfg), cfg)
        assert br.tec == pytest.approx(sum(br.component_totals().values()), rel=1e-12)
        assert br.tec == pytest.approx(br.per_slot_total()[1:].sum(), rel=1e-12)


class TestValidation:
    def test_unreachable_endpoint_rejected(self):
        with pytest.raises(ConfigError):
            _cfg(max_speed=0.5).validate()   # 10 m in 10 s needs 1 m/s

    def test_nonpositive_parameter_rejected(self):
        with pytest.raises(ConfigError):
            _cfg(bandwidth_hz=-1.0).validate()

    def test_stock_is_valid(self):
        _cfg().validate()


class TestFeasibilityChecker:
    def _blank(self, cfg):
        return (TaskAllocation.zeros(cfg.num_ues, cfg.n_slots),
                BandwidthAllocation.zeros(cfg.num_ues, cfg.n_slots),
                straight_line(cfg))

    def test_zero_allocation_misses_task(self):
        cfg = _cfg()
        tasks, bw, traj = self._blank(cfg)
        codes = {v.code for v in check_feasibility(tasks, bw, traj, cfg)}
        assert "task_incomplete" in codes

    def test_causality_prefix_violation(self):
        cfg = _cfg(task_bits=0.0)
        tasks, bw, traj = self._blank(cfg)
        tasks.l_offload[0, 1] = 100.0
        tasks.l_uav[0, 2] = 200.0   # more than arrived by slot 1
        bw.b_offload[0, 1] = 1e7
        viol = check_feasibility(tasks, bw, traj, cfg)
        assert any(v.code == "uav_causality" and v.slot == 2 for v in viol)

    def test_straight_line_respects_motion_limits(self):
        cfg = _cfg(task_bits=0.0)
        tasks, bw, traj = self._blank(cfg)
        viol = check_feasibility(tasks, bw, traj, cfg)
        assert not any(v.code in ("endpoint_start", "endpoint_end", "speed_limit")
                       for v in viol)

    def test_speed_cap_flagged(self):
        cfg = _cfg(task_bits=0.0)
        tasks, bw, traj = self._blank(cfg)
        pts = traj.points.copy()
        pts[5] += 30.0
        viol = check_feasibility(tasks, bw, Trajectory(pts), cfg)
        assert any(v.code == "speed_limit" for v in viol)

    def test_boundary_slot_rules(self):
        cfg = _cfg(task_bits=0.0)
        tasks, bw, traj = self._blank(cfg)
        n = cfg.n_slots
        tasks.l_offload[0, n] = 5.0
        tasks.l_uav[1, 1] = 5.0
        bw.b_forward[0, 1] = 10.0
        codes = {v.code for v in check_feasibility(tasks, bw, traj, cfg)}
        assert {"offload_last_slot", "uav_first_slot",
                "bandwidth_first_slot"} <= codes

    def test_split_equality_only_when_both_links_active(self):
        cfg = _cfg(task_bits=0.0, n_slots=10)
        tasks, bw, traj = self._blank(cfg)
        # single-active slot at half band: allowed (cap only)
        tasks.l_offload[0, 1] = 1e4
        bw.b_offload[0, 1] = cfg.bandwidth_hz / 2
        assert not any(v.code == "bandwidth_split"
                       for v in check_feasibility(tasks, bw, traj, cfg))
        # dual-active slot must use the whole band
        tasks.l_offload[0, 3] = 1e4
        tasks.l_forward[0, 3] = 1e4
        bw.b_offload[0, 3] = cfg.bandwidth_hz / 4
        bw.b_forward[0, 3] = cfg.bandwidth_hz / 4
        assert any(v.code == "bandwidth_split" and v.slot == 3
                   for v in check_feasibility(tasks, bw, traj, cfg))

    def test_band_cap_enforced(self):
        cfg = _cfg(task_bits=0.0)
        tasks, bw, traj = self._blank(cfg)
        bw.b_offload[0, 2] = cfg.bandwidth_hz
        bw.b_forward[0, 2] = cfg.bandwidth_hz
        assert any(v.code == "bandwidth_cap"
                   for v in check_feasibility(tasks, bw, traj, cfg))
