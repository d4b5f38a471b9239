"""Scenario description, channel/energy models, and the feasibility checker.

All quantities are linear-scale SI: watts, joules, hertz, meters, seconds,
bits.  Per-slot arrays carry N+1 columns indexed by slot number 1..N so the
code reads like the math; column 0 is always zero (for the trajectory,
index 0 is the start point).  UE indices are 0-based rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

LN2 = float(np.log(2.0))


class ConfigError(ValueError):
    """A scenario description is structurally or physically invalid."""


class AllocationError(ValueError):
    """An allocation pair is inconsistent (positive bits with zero bandwidth)."""


class SolverError(RuntimeError):
    """A solver failed to converge; carries the best iterate and residuals."""

    def __init__(self, message, best=None, residuals=None):
        super().__init__(message)
        self.best = best
        self.residuals = residuals or {}


@dataclass(frozen=True)
class UeSpec:
    """One ground terminal: position, task size, and compute characteristics."""

    pos: tuple[float, float]
    input_bits: float
    cycles_per_bit: float = 1000.0
    kappa: float = 1e-28

    def validate(self, path="ue"):
        if self.input_bits < 0:
            raise ConfigError(f"{path}.input_bits must be >= 0, got {self.input_bits}")
        if self.cycles_per_bit <= 0:
            raise ConfigError(f"{path}.cycles_per_bit must be > 0")
        if self.kappa <= 0:
            raise ConfigError(f"{path}.kappa must be > 0")


@dataclass(frozen=True)
class TimeGrid:
    """Slot duration tau = T/N and the per-UE access sub-slot delta = tau/K."""

    tau: float
    delta: float


@dataclass(frozen=True)
class ScenarioConfig:
    """Full physical/system parameterization of one scenario.

    ``ref_gain`` is the linear channel power gain at 1 m; ``noise_w`` the
    receiver noise power in watts.  ``theta1``/``theta2`` are the cubic and
    inverse-speed propulsion coefficients of the fixed-wing energy model
    ``tau * (theta1 v^3 + theta2 / v)``.
    """

    bandwidth_hz: float = 20e6
    horizon_s: float = 10.0
    n_slots: int = 50
    ref_gain: float = 1e-3
    noise_w: float = 1e-9
    altitude_m: float = 10.0
    max_speed: float = 10.0
    theta1: float = 0.00614
    theta2: float = 15.976
    kappa_uav: float = 1e-28
    ap_pos: tuple[float, float] = (0.0, 0.0)
    uav_start: tuple[float, float] = (-5.0, -5.0)
    uav_end: tuple[float, float] = (5.0, -5.0)
    ues: tuple[UeSpec, ...] = ()
    tol_outer: float = 1e-4
    tol_inner: float = 1e-4

    @property
    def num_ues(self):
        return len(self.ues)

    def grid(self) -> TimeGrid:
        tau = self.horizon_s / self.n_slots
        return TimeGrid(tau=tau, delta=tau / max(self.num_ues, 1))

    def validate(self):
        if self.n_slots < 2:
            raise ConfigError(f"n_slots must be >= 2, got {self.n_slots}")
        if self.num_ues < 1:
            raise ConfigError("at least one UE is required")
        for name in ("bandwidth_hz", "horizon_s", "ref_gain", "noise_w",
                     "altitude_m", "max_speed", "theta1", "theta2",
                     "kappa_uav", "tol_outer", "tol_inner"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        for i, ue in enumerate(self.ues):
            ue.validate(path=f"ues[{i}]")
        # The endpoints must be reachable at the speed cap.
        dist = float(np.hypot(self.uav_end[0] - self.uav_start[0],
                              self.uav_end[1] - self.uav_start[1]))
        if self.max_speed * self.horizon_s < dist * (1.0 - 1e-12):
            raise ConfigError(
                f"max_speed={self.max_speed} cannot reach uav_end from uav_start "
                f"within horizon_s={self.horizon_s} (need >= {dist / self.horizon_s:.6g} m/s)")
        return self


@dataclass(frozen=True)
class TaskAllocation:
    """Per-UE per-slot bit counts for the four processing routes.

    ``l_local``   bits computed on the UE itself,
    ``l_offload`` bits sent UE -> relay,
    ``l_uav``     bits computed on the relay,
    ``l_forward`` bits forwarded relay -> AP.
    Arrays have shape (K, N+1); slot column 0 is unused and zero.
    """

    l_local: np.ndarray
    l_offload: np.ndarray
    l_uav: np.ndarray
    l_forward: np.ndarray

    @classmethod
    def zeros(cls, num_ues, n_slots):
        shape = (num_ues, n_slots + 1)
        return cls(*(np.zeros(shape) for _ in range(4)))

    def copy(self):
        return TaskAllocation(self.l_local.copy(), self.l_offload.copy(),
                              self.l_uav.copy(), self.l_forward.copy())


@dataclass(frozen=True)
class BandwidthAllocation:
    """Per-UE per-slot bandwidth split between the UE->relay and relay->AP links."""

    b_offload: np.ndarray
    b_forward: np.ndarray

    @classmethod
    def zeros(cls, num_ues, n_slots):
        shape = (num_ues, n_slots + 1)
        return cls(np.zeros(shape), np.zeros(shape))

    def copy(self):
        return BandwidthAllocation(self.b_offload.copy(), self.b_forward.copy())


@dataclass(frozen=True)
class Trajectory:
    """UAV horizontal waypoints, shape (N+1, 2); index 0 is the start point."""

    points: np.ndarray

    def speeds(self, grid: TimeGrid) -> np.ndarray:
        """Per-slot speeds, shape (N+1,); entry 0 is unused and zero."""
        out = np.zeros(len(self.points))
        out[1:] = np.linalg.norm(np.diff(self.points, axis=0), axis=1) / grid.tau
        return out

    def copy(self):
        return Trajectory(self.points.copy())


@dataclass(frozen=True)
class EnergyBreakdown:
    """Per-slot energy components (joules) and their grand total."""

    e_local: np.ndarray
    e_offload: np.ndarray
    e_uav_compute: np.ndarray
    e_forward: np.ndarray
    e_fly: np.ndarray
    tec: float

    def component_totals(self):
        return {
            "local": float(self.e_local.sum()),
            "ue_offload": float(self.e_offload.sum()),
            "uav_compute": float(self.e_uav_compute.sum()),
            "uav_forward": float(self.e_forward.sum()),
            "fly": float(self.e_fly.sum()),
        }

    def per_slot_total(self):
        return (self.e_local + self.e_offload + self.e_uav_compute
                + self.e_forward).sum(axis=0) + self.e_fly


@dataclass(frozen=True)
class Violation:
    """One constraint violation; ``ue``/``slot`` are None when not applicable."""

    code: str
    ue: int | None
    slot: int | None
    amount: float
    message: str


def channel_gain_ap(u_n, cfg: ScenarioConfig):
    """Line-of-sight power gain UAV -> AP: ref_gain / (dist^2 + H^2)."""
    return _gain(u_n, cfg.ap_pos, cfg)


def channel_gain_ue(k, u_n, cfg: ScenarioConfig):
    """Line-of-sight power gain UAV -> UE k, same law as the AP link."""
    return _gain(u_n, cfg.ues[k].pos, cfg)


def _gain(u_n, pos, cfg):
    u_n = np.asarray(u_n, dtype=float)
    d2 = np.sum((u_n - np.asarray(pos, dtype=float)) ** 2, axis=-1)
    return cfg.ref_gain / (d2 + cfg.altitude_m ** 2)


def local_energy(bits, ue: UeSpec, grid: TimeGrid):
    """UE compute energy kappa * C^3 / tau^2 * bits^3 (DVFS, frequency = bits*C/tau)."""
    bits = np.asarray(bits, dtype=float)
    if np.any(bits < 0):
        raise AllocationError("negative local bit count")
    return ue.kappa * ue.cycles_per_bit ** 3 / grid.tau ** 2 * bits ** 3


def uav_compute_energy(bits, ue: UeSpec, cfg: ScenarioConfig, grid: TimeGrid):
    """Relay compute energy kappa_uav * C^3 / delta^2 * bits^3."""
    bits = np.asarray(bits, dtype=float)
    if np.any(bits < 0):
        raise AllocationError("negative relay-compute bit count")
    return cfg.kappa_uav * ue.cycles_per_bit ** 3 / grid.delta ** 2 * bits ** 3


def ue_offload_energy(bits, bw_hz, gain, cfg: ScenarioConfig, grid: TimeGrid):
    """Uplink radio energy delta * N0 / gain * (2^(bits / (delta * bw)) - 1).

    Zero bits cost zero energy regardless of bandwidth (limit convention);
    positive bits with zero bandwidth are an inconsistent pair and raise.
    """
    return _radio_energy(bits, bw_hz, gain, cfg.noise_w, grid.delta)


def uav_offload_energy(bits, bw_hz, gain_ap, cfg: ScenarioConfig, grid: TimeGrid):
    """Relay->AP radio energy; identical law to the uplink with the AP gain."""
    return _radio_energy(bits, bw_hz, gain_ap, cfg.noise_w, grid.delta)


def _radio_energy(bits, bw_hz, gain, noise_w, delta):
    bits = np.asarray(bits, dtype=float)
    bw_hz = np.asarray(bw_hz, dtype=float)
    gain = np.asarray(gain, dtype=float)
    if np.any(bits < 0):
        raise AllocationError("negative bit count")
    active = bits > 0
    if np.any(active & (bw_hz <= 0)):
        raise AllocationError("positive bits with zero bandwidth")
    rate = np.divide(bits, delta * bw_hz, out=np.zeros_like(bits + bw_hz),
                     where=bw_hz > 0)
    out = delta * noise_w / gain * np.expm1(rate * LN2)
    return np.where(active, out, 0.0) if out.ndim else (float(out) if active else 0.0)


def fly_energy(speed, cfg: ScenarioConfig, grid: TimeGrid):
    """Propulsion energy tau * (theta1 * v^3 + theta2 / v); diverges as v -> 0."""
    speed = np.asarray(speed, dtype=float)
    if np.any(speed <= 0):
        raise AllocationError("propulsion model requires speed > 0")
    return grid.tau * (cfg.theta1 * speed ** 3 + cfg.theta2 / speed)


def total_energy(l: TaskAllocation, b: BandwidthAllocation, traj: Trajectory,
                 cfg: ScenarioConfig) -> EnergyBreakdown:
    """Assemble every per-slot energy term and the total; pure function."""
    grid = cfg.grid()
    n = cfg.n_slots
    shape = (cfg.num_ues, n + 1)
    e_local = np.zeros(shape)
    e_off = np.zeros(shape)
    e_uav = np.zeros(shape)
    e_fwd = np.zeros(shape)
    h_ap = channel_gain_ap(traj.points[1:], cfg)
    for k, ue in enumerate(cfg.ues):
        h_k = channel_gain_ue(k, traj.points[1:], cfg)
        e_local[k, 1:] = local_energy(l.l_local[k, 1:], ue, grid)
        e_off[k, 1:] = ue_offload_energy(l.l_offload[k, 1:], b.b_offload[k, 1:],
                                         h_k, cfg, grid)
        e_uav[k, 1:] = uav_compute_energy(l.l_uav[k, 1:], ue, cfg, grid)
        e_fwd[k, 1:] = uav_offload_energy(l.l_forward[k, 1:], b.b_forward[k, 1:],
                                          h_ap, cfg, grid)
    e_fly = np.zeros(n + 1)
    e_fly[1:] = fly_energy(traj.speeds(grid)[1:], cfg, grid)
    tec = float(e_local.sum() + e_off.sum() + e_uav.sum() + e_fwd.sum() + e_fly.sum())
    return EnergyBreakdown(e_local, e_off, e_uav, e_fwd, e_fly, tec)


def default_tol_bits(cfg: ScenarioConfig) -> float:
    """Default bit tolerance: 1e-9 of the smallest positive task size."""
    sizes = [ue.input_bits for ue in cfg.ues if ue.input_bits > 0]
    return 1e-9 * min(sizes) if sizes else 1e-6


def check_feasibility(l: TaskAllocation, b: BandwidthAllocation, traj: Trajectory,
                      cfg: ScenarioConfig, tol_bits=None, tol_hz=1.0,
                      tol_m=1e-6) -> list[Violation]:
    """Return all constraint violations (empty list means feasible).

    Checks, per UE: route nonnegativity and boundary zeros, the relay
    causality prefix inequalities with one-slot delay, the relay balance
    equality, and the task-completion equality.  The bandwidth split is
    checked as a cap (sum <= B) on every slot and as an equality only on
    slots where both links carry bits.  Trajectory endpoints and the
    per-slot speed cap are checked against ``tol_m``.
    """
    if tol_bits is None:
        tol_bits = default_tol_bits(cfg)
    n = cfg.n_slots
    grid = cfg.grid()
    out: list[Violation] = []

    def bad(code, ue, slot, amount, msg):
        out.append(Violation(code, ue, slot, float(amount), msg))

    for k in range(cfg.num_ues):
        for name, arr in (("local", l.l_local), ("offload", l.l_offload),
                          ("uav_compute", l.l_uav), ("forward", l.l_forward)):
            neg = np.where(arr[k, 1:] < -tol_bits)[0]
            for i in neg:
                bad(f"negative_bits:{name}", k, int(i + 1), arr[k, i + 1],
                    f"{name} bits negative for ue {k} slot {i + 1}")
        if abs(l.l_offload[k, n]) > tol_bits:
            bad("offload_last_slot", k, n, l.l_offload[k, n],
                "offloading in the final slot can never be processed")
        for name, arr in (("uav_first_slot", l.l_uav), ("forward_first_slot", l.l_forward)):
            if abs(arr[k, 1]) > tol_bits:
                bad(name, k, 1, arr[k, 1],
                    "relay cannot process bits in the first slot")
        # One-slot-delay causality: bits processed by the relay through slot n
        # must already have been received through slot n-1.
        relay = l.l_uav[k] + l.l_forward[k]
        relay_prefix = np.cumsum(relay)
        off_prefix = np.cumsum(l.l_offload[k])
        for slot in range(2, n + 1):
            gap = relay_prefix[slot] - off_prefix[slot - 1]
            if gap > tol_bits:
                bad("uav_causality", k, slot, gap,
                    f"relay processed {gap:.3g} more bits than received by slot {slot - 1}")
        balance = relay_prefix[n] - off_prefix[n - 1]
        if abs(balance) > tol_bits:
            bad("relay_balance", k, None, balance,
                "offloaded bits not fully processed by the relay/AP")
        total = l.l_local[k, 1:].sum() + l.l_offload[k, 1:n].sum()
        short = total - cfg.ues[k].input_bits
        if abs(short) > tol_bits:
            bad("task_incomplete", k, None, short,
                f"task total off by {short:.6g} bits for ue {k}")

        for name, arr in (("bandwidth:offload", b.b_offload), ("bandwidth:forward", b.b_forward)):
            neg = np.where(arr[k, 1:] < -tol_hz)[0]
            for i in neg:
                bad(f"negative_{name}", k, int(i + 1), arr[k, i + 1], "negative bandwidth")
        if abs(b.b_offload[k, n]) > tol_hz:
            bad("bandwidth_last_slot", k, n, b.b_offload[k, n],
                "uplink bandwidth must be zero in the final slot")
        if abs(b.b_forward[k, 1]) > tol_hz:
            bad("bandwidth_first_slot", k, 1, b.b_forward[k, 1],
                "relay-link bandwidth must be zero in the first slot")
        for slot in range(1, n + 1):
            total_bw = b.b_offload[k, slot] + b.b_forward[k, slot]
            if total_bw > cfg.bandwidth_hz + tol_hz:
                bad("bandwidth_cap", k, slot, total_bw - cfg.bandwidth_hz,
                    "bandwidth split exceeds the system bandwidth")
            both_active = (l.l_offload[k, slot] > tol_bits
                           and l.l_forward[k, slot] > tol_bits)
            if both_active and abs(total_bw - cfg.bandwidth_hz) > tol_hz:
                bad("bandwidth_split", k, slot, total_bw - cfg.bandwidth_hz,
                    "active split must use the whole band")
            if l.l_offload[k, slot] > tol_bits and b.b_offload[k, slot] <= 0:
                bad("bandwidth_missing:offload", k, slot, l.l_offload[k, slot],
                    "uplink bits with no uplink bandwidth")
            if l.l_forward[k, slot] > tol_bits and b.b_forward[k, slot] <= 0:
                bad("bandwidth_missing:forward", k, slot, l.l_forward[k, slot],
                    "relay-link bits with no relay-link bandwidth")

    for name, idx, target in (("endpoint_start", 0, cfg.uav_start),
                              ("endpoint_end", n, cfg.uav_end)):
        err = float(np.linalg.norm(traj.points[idx] - np.asarray(target)))
        if err > tol_m:
            bad(name, None, idx, err, f"trajectory {name} off by {err:.3g} m")
    step_cap = cfg.max_speed * grid.tau
    steps = np.linalg.norm(np.diff(traj.points, axis=0), axis=1)
    for i, s in enumerate(steps):
        if s > step_cap + tol_m:
            bad("speed_limit", None, i + 1, s - step_cap,
                f"slot {i + 1} exceeds the speed cap")
    return out
