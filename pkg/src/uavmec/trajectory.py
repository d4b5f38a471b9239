"""Flight-path optimization for fixed bit schedules and bandwidth split.

The per-slot propulsion term ``tau*(theta1 v^3 + theta2/v)`` is nonconvex
in the waypoints through the inverse speed.  Each outer iteration replaces
``theta2/v[n]`` with ``theta2/vt[n]`` for a slack speed ``vt[n]`` bounded
above by a linearization of the squared slot displacement around the
incumbent path; the resulting inner problem (radio terms are affine in the
squared distances, hence convex) is solved by a feasible-start barrier
method with dense Newton steps.  The slack bound is tight at the
linearization point, so the true objective never increases across outer
iterations; endpoints hold exactly and the speed cap is kept strictly by
the barrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (LN2, BandwidthAllocation, ScenarioConfig, SolverError,
                    TaskAllocation, Trajectory, channel_gain_ap,
                    channel_gain_ue, fly_energy)

SPEED_FLOOR = 0.1  # m/s; far below any speed the propulsion model rewards


@dataclass
class ScaState:
    """Outer-iteration state: incumbent path, slack speeds, objective trace."""

    traj: Trajectory
    vtilde: np.ndarray
    objective_trace: list = field(default_factory=list)
    iteration: int = 0
    inner_kkt_residual: float = 0.0


@dataclass(frozen=True)
class ApproxProblem:
    """One convex inner problem: coefficients frozen at a linearization point."""

    n_slots: int
    tau: float
    theta1: float
    theta2: float
    vmax: float
    floor: float
    start: np.ndarray
    end: np.ndarray
    lin_delta: np.ndarray     # incumbent slot displacements, shape (N, 2)
    radio_w: np.ndarray       # quadratic weights per slot, shape (N+1,)
    radio_p: np.ndarray       # weighted pull points per slot, shape (N+1, 2)
    radio_c: np.ndarray       # constant radio terms per slot, shape (N+1,)


def radio_weights(l: TaskAllocation, b: BandwidthAllocation, cfg: ScenarioConfig):
    """Per-slot coefficients of the position-dependent radio energy.

    Each active link contributes ``coeff * (dist^2 + H^2)`` with
    ``coeff = delta*N0*(2^(bits/(delta*bw)) - 1)/ref_gain``; returns the
    per-(UE, slot) uplink and relay-link coefficient arrays.
    """
    grid = cfg.grid()
    n = cfg.n_slots
    coeff_ue = np.zeros((cfg.num_ues, n + 1))
    coeff_ap = np.zeros((cfg.num_ues, n + 1))
    base = grid.delta * cfg.noise_w / cfg.ref_gain
    for k in range(cfg.num_ues):
        act = l.l_offload[k] > 0
        rate = np.divide(l.l_offload[k], grid.delta * b.b_offload[k],
                         out=np.zeros(n + 1), where=b.b_offload[k] > 0)
        coeff_ue[k] = np.where(act, base * np.expm1(rate * LN2), 0.0)
        act = l.l_forward[k] > 0
        rate = np.divide(l.l_forward[k], grid.delta * b.b_forward[k],
                         out=np.zeros(n + 1), where=b.b_forward[k] > 0)
        coeff_ap[k] = np.where(act, base * np.expm1(rate * LN2), 0.0)
    return coeff_ue, coeff_ap


def trajectory_objective(traj: Trajectory, l: TaskAllocation,
                         b: BandwidthAllocation, cfg: ScenarioConfig) -> float:
    """Propulsion plus position-dependent radio energy along the path."""
    grid = cfg.grid()
    fly = float(fly_energy(traj.speeds(grid)[1:], cfg, grid).sum())
    coeff_ue, coeff_ap = radio_weights(l, b, cfg)
    h2 = cfg.altitude_m ** 2
    radio = 0.0
    pts = traj.points
    for k, ue in enumerate(cfg.ues):
        d2 = np.sum((pts[1:] - np.asarray(ue.pos)) ** 2, axis=1)
        radio += float((coeff_ue[k, 1:] * (d2 + h2)).sum())
    d2 = np.sum((pts[1:] - np.asarray(cfg.ap_pos)) ** 2, axis=1)
    radio += float((coeff_ap[:, 1:].sum(axis=0) * (d2 + h2)).sum())
    return fly + radio


def build_approx_problem(state: ScaState, l: TaskAllocation,
                         b: BandwidthAllocation, cfg: ScenarioConfig) -> ApproxProblem:
    """Freeze the convex inner problem at the incumbent path."""
    grid = cfg.grid()
    n = cfg.n_slots
    coeff_ue, coeff_ap = radio_weights(l, b, cfg)
    h2 = cfg.altitude_m ** 2
    w = np.zeros(n + 1)
    p = np.zeros((n + 1, 2))
    c = np.zeros(n + 1)
    for k, ue in enumerate(cfg.ues):
        pos = np.asarray(ue.pos, dtype=float)
        w += coeff_ue[k]
        p += coeff_ue[k][:, None] * pos
        c += coeff_ue[k] * (pos @ pos + h2)
    ap = np.asarray(cfg.ap_pos, dtype=float)
    fwd = coeff_ap.sum(axis=0)
    w += fwd
    p += fwd[:, None] * ap
    c += fwd * (ap @ ap + h2)
    return ApproxProblem(
        n_slots=n, tau=grid.tau, theta1=cfg.theta1, theta2=cfg.theta2,
        vmax=cfg.max_speed, floor=SPEED_FLOOR,
        start=np.asarray(cfg.uav_start, dtype=float),
        end=np.asarray(cfg.uav_end, dtype=float),
        lin_delta=np.diff(state.traj.points, axis=0),
        radio_w=w, radio_p=p, radio_c=c)


def _pack(problem, points, vtilde):
    n = problem.n_slots
    return np.concatenate([points[1:n].ravel(), vtilde])


def _unpack(problem, x):
    n = problem.n_slots
    pts = np.empty((n + 1, 2))
    pts[0] = problem.start
    pts[n] = problem.end
    pts[1:n] = x[:2 * (n - 1)].reshape(n - 1, 2)
    return pts, x[2 * (n - 1):]


def approx_value_grad(problem: ApproxProblem, x):
    """Objective of the inner convex problem and its analytic gradient."""
    n, tau = problem.n_slots, problem.tau
    pts, vt = _unpack(problem, x)
    d = np.diff(pts, axis=0)
    dn = np.linalg.norm(d, axis=1)
    a3 = problem.theta1 / tau ** 2
    val = float(a3 * (dn ** 3).sum() + tau * problem.theta2 * (1.0 / vt).sum())
    inner = pts[1:n]
    val += float((problem.radio_w[1:n] * (inner ** 2).sum(axis=1)).sum()
                 - 2.0 * (problem.radio_p[1:n] * inner).sum()
                 + problem.radio_c[1:n].sum())
    val += float(problem.radio_w[n] * (pts[n] @ pts[n])
                 - 2.0 * problem.radio_p[n] @ pts[n] + problem.radio_c[n])

    g_pts = np.zeros((n + 1, 2))
    grad_d = 3.0 * a3 * dn[:, None] * d
    g_pts[1:] += grad_d
    g_pts[:-1] -= grad_d
    g_pts[1:n] += 2.0 * problem.radio_w[1:n, None] * inner - 2.0 * problem.radio_p[1:n]
    g_vt = -tau * problem.theta2 / vt ** 2
    return val, np.concatenate([g_pts[1:n].ravel(), g_vt])


def _constraints(problem, x):
    """All inequality values g <= 0: speed cap, slack bound, slack floor."""
    n, tau = problem.n_slots, problem.tau
    pts, vt = _unpack(problem, x)
    d = np.diff(pts, axis=0)
    cap = np.sum(d ** 2, axis=1) - (problem.vmax * tau) ** 2
    lin = 2.0 * np.sum(problem.lin_delta * d, axis=1) \
        - np.sum(problem.lin_delta ** 2, axis=1)
    slack = vt ** 2 * tau ** 2 - lin
    floor = problem.floor - vt
    return cap, slack, floor


def _barrier_value_grad_hess(problem, x, t_scale):
    """Barrier-stage value, gradient, and dense Hessian, assembled from
    vectorized per-slot blocks.

    Each slot contributes a 2x2 displacement block (cubic speed term plus
    cap/slack barrier curvature), a displacement/slack-speed cross term,
    and a slack-speed diagonal; displacement blocks scatter onto the two
    adjacent waypoints with a +/- sign pattern.
    """
    n, tau = problem.n_slots, problem.tau
    dim = 3 * n - 2
    val_f, grad_f = approx_value_grad(problem, x)
    cap, slack, floor = _constraints(problem, x)
    if cap.max() >= 0 or slack.max() >= 0 or floor.max() >= 0:
        return None, None, None, val_f

    pts, vt = _unpack(problem, x)
    d = np.diff(pts, axis=0)
    dn = np.linalg.norm(d, axis=1)
    lin = problem.lin_delta
    a3 = problem.theta1 / tau ** 2
    val = float(t_scale * val_f - np.log(-cap).sum() - np.log(-slack).sum()
                - np.log(-floor).sum())

    eye = np.eye(2)
    outer_d = d[:, :, None] * d[:, None, :]
    outer_lin = lin[:, :, None] * lin[:, None, :]
    safe_dn = np.where(dn > 0, dn, 1.0)
    # Per-slot 2x2 displacement blocks: cubic-speed curvature plus the
    # cap and slack barrier curvature.
    blk = t_scale * 3.0 * a3 * (dn[:, None, None] * eye
                                + np.where(dn > 0, 1.0, 0.0)[:, None, None]
                                * outer_d / safe_dn[:, None, None])
    blk += 4.0 * outer_d / (cap ** 2)[:, None, None] \
        + (2.0 / -cap)[:, None, None] * eye
    blk += 4.0 * outer_lin / (slack ** 2)[:, None, None]

    # Barrier-only gradient pieces (the objective gradient is analytic).
    grad_d_bar = (2.0 / -cap)[:, None] * d + (2.0 / slack)[:, None] * lin
    dvt = 2.0 * vt * tau ** 2
    cross = (-2.0 * lin) * (dvt / slack ** 2)[:, None]
    vt_diag = (t_scale * 2.0 * tau * problem.theta2 / vt ** 3
               + dvt ** 2 / slack ** 2 + 2.0 * tau ** 2 / -slack
               + 1.0 / floor ** 2)
    grad_vt_bar = dvt / -slack + 1.0 / floor

    grad = t_scale * grad_f
    hess = np.zeros((dim, dim))
    vt_off = 2 * (n - 1)
    for slot in range(1, n + 1):
        left, right = slot - 1, slot    # adjacent waypoint indices
        vi = vt_off + slot - 1
        if left >= 1:
            sa = slice(2 * (left - 1), 2 * left)
            grad[sa] -= grad_d_bar[slot - 1]
            hess[sa, sa] += blk[slot - 1]
            hess[sa, vi] -= cross[slot - 1]
            hess[vi, sa] -= cross[slot - 1]
        if right <= n - 1:
            sb = slice(2 * (right - 1), 2 * right)
            grad[sb] += grad_d_bar[slot - 1]
            hess[sb, sb] += blk[slot - 1]
            hess[sb, vi] += cross[slot - 1]
            hess[vi, sb] += cross[slot - 1]
        if left >= 1 and right <= n - 1:
            hess[sa, sb] -= blk[slot - 1]
            hess[sb, sa] -= blk[slot - 1]
        grad[vi] += grad_vt_bar[slot - 1]
        hess[vi, vi] += vt_diag[slot - 1]

    idx = np.arange(1, n)
    for off in (0, 1):
        hess[2 * (idx - 1) + off, 2 * (idx - 1) + off] += \
            t_scale * 2.0 * problem.radio_w[idx]
    return val, grad, hess, val_f


def solve_inner(problem: ApproxProblem, start, tol, max_newton=300):
    """Barrier method from a strictly feasible start.

    ``start`` is ``(points, vtilde)``; returns ``(points, vtilde, info)``
    with a normalized KKT stationarity residual in ``info``.  The result
    never has a worse inner objective than the start.
    """
    n = problem.n_slots
    pts0, vt0 = start
    x = _pack(problem, pts0, vt0)
    cap, slack, floor = _constraints(problem, x)
    if np.any(cap >= 0) or np.any(slack >= 0) or np.any(floor >= 0):
        raise SolverError("inner trajectory solve started infeasible",
                          residuals={"cap": float(cap.max()),
                                     "slack": float(slack.max()),
                                     "floor": float(floor.max())})
    m = 3 * n
    val0, _ = approx_value_grad(problem, x)
    t_scale = m / max(0.05 * abs(val0), 1e-6)
    newton_total = 0
    for _ in range(64):
        for _ in range(max_newton):
            val, grad, hess, _ = _barrier_value_grad_hess(problem, x, t_scale)
            try:
                step = np.linalg.solve(hess, -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.solve(hess + 1e-9 * np.eye(len(grad)), -grad)
            decrement = float(-grad @ step)
            newton_total += 1
            if decrement <= 2e-11 * max(1.0, abs(val)):
                break
            alpha = 1.0
            moved = False
            for _ in range(60):
                x_try = x + alpha * step
                cap, slack, floor = _constraints(problem, x_try)
                if cap.max() < 0 and slack.max() < 0 and floor.max() < 0:
                    val_try, _, _, _ = _barrier_value_grad_hess(problem, x_try, t_scale)
                    if val_try <= val - 1e-4 * alpha * decrement:
                        moved = True
                        break
                alpha *= 0.5
            if not moved:
                # Progress below float resolution: the stage is done.
                break
            x = x_try
        if m / t_scale <= tol * max(abs(val0), 1.0):
            break
        t_scale *= 20.0

    val_final, grad_f = approx_value_grad(problem, x)
    if val_final > val0:
        x = _pack(problem, pts0, vt0)
        val_final, grad_f = val0, approx_value_grad(problem, x)[1]
    # Dual estimates from the barrier give the stationarity defect.
    cap, slack, floor = _constraints(problem, x)
    _, grad_b, _, _ = _barrier_value_grad_hess(problem, x, t_scale)
    kkt = float(np.linalg.norm(grad_b / t_scale, np.inf)
                / max(np.linalg.norm(grad_f, np.inf), 1e-300))
    pts, vt = _unpack(problem, x)
    return pts, vt, {"kkt_residual": kkt, "newton_iterations": newton_total,
                     "objective": val_final}


def initial_trajectory(cfg: ScenarioConfig) -> Trajectory:
    """Straight line at constant speed; a constant-speed arc detour when the
    endpoints are too close for every slot to clear the slack-speed floor."""
    n = cfg.n_slots
    start = np.asarray(cfg.uav_start, dtype=float)
    end = np.asarray(cfg.uav_end, dtype=float)
    frac = np.linspace(0.0, 1.0, n + 1)[:, None]
    straight = start * (1.0 - frac) + end * frac
    dist = float(np.linalg.norm(end - start))
    if dist / cfg.horizon_s >= 2.0 * SPEED_FLOOR:
        return Trajectory(straight)
    if cfg.max_speed < 4.0 * SPEED_FLOOR:
        raise SolverError("max_speed too low to keep the slack-speed floor")
    # Constant-speed circular arc through both endpoints, sized so the
    # path length keeps every slot above the floor.
    target_len = max(3.0 * SPEED_FLOOR * cfg.horizon_s, dist * 1.5)
    if dist < 1e-12:
        radius = target_len / (2.0 * math.pi)
        center = start + np.array([radius, 0.0])
        angles = math.pi + np.linspace(0.0, 2.0 * math.pi, n + 1)
        pts = center + radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        pts[0], pts[n] = start, end
        return Trajectory(pts)
    # Pick the arc angle 2*phi subtending the chord with arc length target_len.
    phi = _solve_arc_angle(dist, target_len)
    radius = dist / (2.0 * math.sin(phi))
    mid = 0.5 * (start + end)
    chord = (end - start) / dist
    normal = np.array([-chord[1], chord[0]])
    center = mid - radius * math.cos(phi) * normal
    a0 = math.atan2(start[1] - center[1], start[0] - center[0])
    a1 = math.atan2(end[1] - center[1], end[0] - center[0])
    sweep = (a1 - a0) % (2.0 * math.pi)
    if abs(sweep - 2.0 * phi) > abs((sweep - 2.0 * math.pi) + 2.0 * phi):
        sweep -= 2.0 * math.pi
    angles = a0 + np.linspace(0.0, sweep, n + 1)
    pts = center + radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    pts[0], pts[n] = start, end
    return Trajectory(pts)


def _solve_arc_angle(chord, arc_len):
    # arc/chord = phi/sin(phi); monotone in phi on (0, pi)
    ratio = arc_len / chord
    lo, hi = 1e-9, math.pi - 1e-9
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid / math.sin(mid) < ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sca_solve(l: TaskAllocation, b: BandwidthAllocation, u_init: Trajectory,
              cfg: ScenarioConfig, eps1=None, max_iter=50):
    """Iterate convex restrictions until the true objective stalls.

    Returns ``(Trajectory, ScaState)``; the true-objective trace is
    non-increasing and every iterate meets the endpoint and speed
    constraints exactly.
    """
    if eps1 is None:
        eps1 = cfg.tol_inner
    grid = cfg.grid()
    n = cfg.n_slots

    # Forced path: when the speed cap barely reaches the endpoint there is
    # no interior to optimize over.
    dist = float(np.linalg.norm(np.asarray(cfg.uav_end) - np.asarray(cfg.uav_start)))
    if cfg.max_speed * cfg.horizon_s <= dist * (1.0 + 1e-9):
        frac = np.linspace(0.0, 1.0, n + 1)[:, None]
        pts = np.asarray(cfg.uav_start) * (1 - frac) + np.asarray(cfg.uav_end) * frac
        traj = Trajectory(pts)
        state = ScaState(traj, traj.speeds(grid)[1:].copy())
        state.objective_trace.append(trajectory_objective(traj, l, b, cfg))
        return traj, state

    traj = u_init.copy()
    speeds = traj.speeds(grid)[1:]
    if np.any(speeds < SPEED_FLOOR):
        raise SolverError("initial trajectory violates the slack-speed floor",
                          residuals={"min_speed": float(speeds.min())})
    state = ScaState(traj, speeds * (1.0 - 1e-9))
    state.objective_trace.append(trajectory_objective(traj, l, b, cfg))
    inner_tol = 0.1 * eps1

    for it in range(1, max_iter + 1):
        problem = build_approx_problem(state, l, b, cfg)
        # Strictly feasible warm start: back the slack off the incumbent
        # speed far enough that the barrier gradient stays moderate.
        speeds = state.traj.speeds(grid)[1:]
        vt = np.maximum(np.minimum(state.vtilde, speeds * (1.0 - 1e-3)),
                        SPEED_FLOOR * (1.0 + 1e-12))
        if np.any(vt >= speeds):
            raise SolverError("incumbent path pinned at the slack-speed floor",
                              residuals={"min_speed": float(speeds.min())})
        pts, vt, info = solve_inner(problem, (state.traj.points, vt), inner_tol)
        cand = Trajectory(pts)
        obj = trajectory_objective(cand, l, b, cfg)
        prev = state.objective_trace[-1]
        state.iteration = it
        state.inner_kkt_residual = info["kkt_residual"]
        if obj <= prev:
            state.traj = cand
            state.vtilde = vt
            state.objective_trace.append(obj)
        else:
            state.objective_trace.append(prev)
            break
        if prev - obj <= eps1 * max(abs(prev), 1e-300):
            break
    return state.traj, state
