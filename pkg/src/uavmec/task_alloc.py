"""Optimal task routing for fixed bandwidth and trajectory.

The routing problem is convex and separable per UE.  Its minimizer has
closed forms in the Lagrange multipliers: a square-root law for the local
compute schedule driven by the task-total multiplier, log-law
(water-filling style) schedules for the two radio links driven by
causality-adjusted multiplier differences, and a square-root law for the
relay compute schedule.  The two per-UE equality multipliers are found by
monotone 1-D root searches (task total in ``beta`` nested over relay
balance in ``eta``); the nonnegative causality multipliers by a projected
subgradient loop followed by a damped active-set Newton polish, which is
what actually reaches the tight feasibility and complementary-slackness
tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (LN2, BandwidthAllocation, ScenarioConfig, SolverError,
                    TaskAllocation, Trajectory, channel_gain_ap,
                    channel_gain_ue, default_tol_bits)


@dataclass(frozen=True)
class TaskDuals:
    """Multipliers of the routing subproblem.

    ``lam`` has shape (K, N+1); causality multipliers live at slots
    2..N-1 (the final-slot causality constraint is implied by the relay
    balance equality and carries no multiplier).  ``eta``/``beta`` are the
    per-UE relay-balance and task-total multipliers, free in sign.
    """

    lam: np.ndarray
    eta: np.ndarray
    beta: np.ndarray

    @classmethod
    def zeros(cls, num_ues, n_slots):
        return cls(np.zeros((num_ues, n_slots + 1)), np.zeros(num_ues),
                   np.zeros(num_ues))


@dataclass(frozen=True)
class TaskSolveReport:
    outer_iterations: int
    max_causality_violation: float
    task_equality_residual: np.ndarray
    relay_equality_residual: np.ndarray
    duality_gap_estimate: float
    comp_slack_max: float
    stationarity_max: float
    task_energy: float


class _UeProblem:
    """Closed forms, residuals, and derivatives for one UE."""

    def __init__(self, cfg, grid, k, b_off, b_fwd, h_ue, h_ap, pin_local):
        ue = cfg.ues[k]
        n = cfg.n_slots
        self.n = n
        self.tau = grid.tau
        self.delta = grid.delta
        self.input_bits = ue.input_bits
        self.c = ue.cycles_per_bit
        self.kappa = ue.kappa
        self.kappa_uav = cfg.kappa_uav
        self.noise = cfg.noise_w
        self.pin_local = pin_local
        self.b_off = b_off
        self.b_fwd = b_fwd
        self.h_ue = h_ue
        self.h_ap = h_ap
        self.rho_off = np.zeros(n + 1)
        self.rho_off[1:n] = b_off[1:n] * h_ue[1:n] / (cfg.noise_w * LN2)
        self.rho_fwd = np.zeros(n + 1)
        self.rho_fwd[2:] = b_fwd[2:] * h_ap[2:] / (cfg.noise_w * LN2)
        self.loc_scale = grid.tau / self.c / math.sqrt(3.0 * self.c * self.kappa)
        self.uav_scale = grid.delta / self.c / math.sqrt(3.0 * self.c * self.kappa_uav)
        self.loc_coeff = self.kappa * self.c ** 3 / grid.tau ** 2
        self.uav_coeff = self.kappa_uav * self.c ** 3 / grid.delta ** 2
        self.rad_off = np.zeros(n + 1)
        self.rad_off[1:n] = grid.delta * cfg.noise_w / h_ue[1:n]
        self.rad_fwd = np.zeros(n + 1)
        self.rad_fwd[2:] = grid.delta * cfg.noise_w / h_ap[2:]
        self.can_offload = bool(np.any(b_off[1:n] > 0))

    def suffix(self, lam_row):
        """S[m] = sum of lam over slots m..N-1; length N+2 so S[N+1] exists."""
        n = self.n
        s = np.zeros(n + 2)
        s[1:n] = np.cumsum(lam_row[1:n][::-1])[::-1]
        return s

    def primal(self, s, beta, eta):
        """Closed-form minimizer of the per-UE partial Lagrangian.

        ``s`` is the lam suffix-sum array; clamps take the zero branch on
        exact boundary hits.  Returns a dict with schedules, totals,
        causality gaps, energy, and the dual-value correction term.
        """
        n = self.n
        hat = s[2:n + 1]                       # slots 1..N-1
        br_off = hat + (beta - eta)
        arg_off = self.rho_off[1:n] * np.maximum(br_off, 0.0)
        l_off = np.zeros(n + 1)
        act_off = arg_off > 1.0
        l_off[1:n][act_off] = (self.delta * self.b_off[1:n][act_off]
                               * np.log2(arg_off[act_off]))
        rel_pos = np.maximum(eta - s[2:n + 1], 0.0)   # slots 2..N use the same suffix
        l_uav = np.zeros(n + 1)
        l_uav[2:] = self.uav_scale * np.sqrt(rel_pos)
        arg_f = self.rho_fwd[2:] * rel_pos
        l_fwd = np.zeros(n + 1)
        act_f = arg_f > 1.0
        l_fwd[2:][act_f] = (self.delta * self.b_fwd[2:][act_f]
                            * np.log2(arg_f[act_f]))
        if self.pin_local or beta <= 0.0:
            l_loc_per = 0.0
        else:
            l_loc_per = self.loc_scale * math.sqrt(beta)

        off_total = float(l_off.sum())
        relay = l_uav + l_fwd
        relay_total = float(relay.sum())
        task_total = n * l_loc_per + off_total
        # causality gaps for slots 2..N: processed-prefix minus received-prefix
        caus = np.cumsum(relay)[2:] - np.cumsum(l_off)[1:n]
        energy = (n * self.loc_coeff * l_loc_per ** 3
                  + float((self.rad_off[1:n][act_off] * (arg_off[act_off] - 1.0)).sum())
                  + self.uav_coeff * float((l_uav[2:] ** 3).sum())
                  + float((self.rad_fwd[2:][act_f] * (arg_f[act_f] - 1.0)).sum()))
        return {
            "l_loc_per": l_loc_per, "l_off": l_off, "l_uav": l_uav,
            "l_fwd": l_fwd, "off_total": off_total, "relay_total": relay_total,
            "task_total": task_total, "caus": caus, "energy": energy,
            "arg_off": arg_off, "arg_f": arg_f, "br_off": br_off,
            "rel_pos": rel_pos, "act_off": act_off, "act_f": act_f,
        }

    def derivatives(self, p, beta):
        """Schedule sensitivities w.r.t. their own multiplier brackets."""
        n = self.n
        kap_off = np.zeros(n - 1)              # slots 1..N-1
        act = p["act_off"]
        kap_off[act] = self.delta * self.b_off[1:n][act] / (LN2 * p["br_off"][act])
        rel_pos = p["rel_pos"]
        s_uav = np.zeros(n - 1)                # slots 2..N
        pos = rel_pos > 0.0
        s_uav[pos] = 0.5 * self.uav_scale / np.sqrt(rel_pos[pos])
        kap_fwd = np.zeros(n - 1)
        actf = p["act_f"]
        kap_fwd[actf] = self.delta * self.b_fwd[2:][actf] / (LN2 * rel_pos[actf])
        if self.pin_local or beta <= 0.0:
            dloc = 0.0
        else:
            dloc = n * 0.5 * self.loc_scale / math.sqrt(beta)
        return kap_off, s_uav + kap_fwd, dloc


def _root_increasing(f, lo, hi, flo, fhi, ftol, max_iter=200):
    """Illinois search for a root of nondecreasing f with f(lo)<=0<=f(hi)."""
    if flo > 0.0 or fhi < 0.0:
        raise SolverError("root bracket lost monotonicity")
    if -flo <= ftol:
        return lo, flo
    if fhi <= ftol:
        return hi, fhi
    side = 0
    x, fx = hi, fhi
    for _ in range(max_iter):
        denom = fhi - flo
        if denom <= 0.0 or not math.isfinite(denom):
            x = 0.5 * (lo + hi)
        else:
            x = hi - fhi * (hi - lo) / denom
            if not (lo < x < hi):
                x = 0.5 * (lo + hi)
        fx = f(x)
        if abs(fx) <= ftol:
            return x, fx
        if fx > 0.0:
            hi, fhi = x, fx
            if side == +1:
                flo *= 0.5
            side = +1
        else:
            lo, flo = x, fx
            if side == -1:
                fhi *= 0.5
            side = -1
        if hi - lo <= 1e-16 * max(abs(lo), abs(hi), 1e-300):
            return x, fx
    return x, fx


def _solve_eta(prob, s, beta, seed, ftol):
    """Relay-balance root: total relay-side bits equal total uplink bits."""

    def gap(eta):
        p = prob.primal(s, beta, eta)
        return p["relay_total"] - p["off_total"]

    g0 = gap(0.0)
    if abs(g0) <= ftol:
        return 0.0
    lo, flo = 0.0, g0
    hi = max(seed, 1e-20)
    fhi = gap(hi)
    grow = 0
    while fhi < 0.0:
        lo, flo = hi, fhi
        hi *= 8.0
        fhi = gap(hi)
        grow += 1
        if grow > 400:
            raise SolverError("relay-balance bracket expansion diverged")
    eta, _ = _root_increasing(gap, lo, hi, flo, fhi, ftol)
    return eta


def _solve_beta_eta(prob, s, beta_seed, eta_seed, ftol):
    """Nested roots: task total in beta, relay balance in eta."""
    eta_cache = {"seed": max(eta_seed, 1e-20)}

    def task_gap(beta):
        eta = _solve_eta(prob, s, beta, eta_cache["seed"], 0.2 * ftol)
        eta_cache["seed"] = max(eta, 1e-20)
        eta_cache["eta"] = eta
        p = prob.primal(s, beta, eta)
        eta_cache["p"] = p
        return p["task_total"] - prob.input_bits

    if prob.input_bits == 0.0:
        task_gap(0.0)
        return 0.0, eta_cache["eta"], eta_cache["p"]

    g0 = task_gap(0.0)
    if g0 > ftol:
        hi, fhi = 0.0, g0
        lo = -max(beta_seed, 1e-20)
        flo = task_gap(lo)
        grow = 0
        while flo > 0.0:
            hi, fhi = lo, flo
            lo *= 8.0
            flo = task_gap(lo)
            grow += 1
            if grow > 400:
                raise SolverError("task-total bracket expansion diverged (low side)")
    elif g0 >= -ftol:
        return 0.0, eta_cache["eta"], eta_cache["p"]
    else:
        lo, flo = 0.0, g0
        hi = max(beta_seed, 1e-20)
        fhi = task_gap(hi)
        grow = 0
        while fhi < 0.0:
            lo, flo = hi, fhi
            hi *= 8.0
            fhi = task_gap(hi)
            grow += 1
            if grow > 400:
                raise SolverError("task-total bracket expansion diverged")
    beta, _ = _root_increasing(task_gap, lo, hi, flo, fhi, ftol)
    task_gap(beta)
    return beta, eta_cache["eta"], eta_cache["p"]


def _dual_value(prob, lam_row, p, beta, eta):
    """Lagrangian value at the closed-form minimizer: a lower bound."""
    lam_term = float(np.dot(lam_row[2:prob.n], p["caus"][:prob.n - 2]))
    eq_term = (beta * (prob.input_bits - p["task_total"])
               - eta * (p["relay_total"] - p["off_total"]))
    return p["energy"] + lam_term + eq_term


class _UeSolver:
    """Dual search for one UE: subgradient localization + Newton polish."""

    def __init__(self, prob: _UeProblem, tol_caus, tol_eq, eps_gap):
        self.prob = prob
        self.tol_caus = tol_caus
        self.tol_eq = tol_eq
        self.eps_gap = eps_gap
        self.iterations = 0

    def _evaluate(self, lam_row, beta_seed, eta_seed):
        s = self.prob.suffix(lam_row)
        beta, eta, p = _solve_beta_eta(self.prob, s, abs(beta_seed) + 1e-20,
                                       eta_seed, self.tol_eq)
        return s, beta, eta, p

    def solve(self, lam0, beta0, eta0, max_rounds=4, subgrad_iters=(60, 200, 600, 1500)):
        prob = self.prob
        n = prob.n
        lam = lam0.copy()
        if prob.input_bits == 0.0:
            p = prob.primal(prob.suffix(np.zeros(n + 1)), 0.0, 0.0)
            return np.zeros(n + 1), 0.0, 0.0, p, 0.0
        beta_seed, eta_seed = max(abs(beta0), 1e-20), max(abs(eta0), 1e-20)
        best_dual = -math.inf
        best = None  # (tec, lam, beta, eta, p)

        def consider(lam_row, beta, eta, p):
            nonlocal best
            viol = float(p["caus"].max(initial=0.0))
            if viol <= self.tol_caus and (best is None or p["energy"] < best[0]):
                best = (p["energy"], lam_row.copy(), beta, eta, p)
            return viol

        for round_idx in range(max_rounds):
            s, beta, eta, p = self._evaluate(lam, beta_seed, eta_seed)
            beta_seed, eta_seed = max(abs(beta), 1e-20), max(abs(eta), 1e-20)
            best_dual = max(best_dual, _dual_value(prob, lam, p, beta, eta))
            viol = consider(lam, beta, eta, p)
            if viol <= self.tol_caus and not lam[2:n].any():
                # Causality slack at zero multipliers: already optimal.
                return lam, beta, eta, p, max(p["energy"] - best_dual, 0.0)

            # The Newton polish does the precision work; it usually
            # converges straight from the incumbent multipliers.
            polished = self._newton_polish(lam, beta, eta)
            if polished is not None:
                lam_n, beta_n, eta_n, p_n = polished
                consider(lam_n, beta_n, eta_n, p_n)
                best_dual = max(best_dual, _dual_value(prob, lam_n, p_n, beta_n, eta_n))
                if float(p_n["caus"].max(initial=0.0)) <= self.tol_caus:
                    lam = lam_n
                    break

            # Fallback localization: projected subgradient with c/sqrt(t)
            # steps, the first step sized to move lam by 10% of its scale.
            scale = max(abs(beta), abs(eta), 1e-20)
            step0 = 0.1 * scale / max(viol, self.tol_caus)
            for t in range(1, subgrad_iters[min(round_idx, len(subgrad_iters) - 1)] + 1):
                self.iterations += 1
                caus = p["caus"][:n - 2]          # slots 2..N-1
                lam[2:n] = np.maximum(lam[2:n] + (step0 / math.sqrt(t)) * caus, 0.0)
                s, beta, eta, p = self._evaluate(lam, beta_seed, eta_seed)
                beta_seed, eta_seed = max(abs(beta), 1e-20), max(abs(eta), 1e-20)
                dual = _dual_value(prob, lam, p, beta, eta)
                best_dual = max(best_dual, dual)
                consider(lam, beta, eta, p)
                if best is not None:
                    gap = best[0] - best_dual
                    if gap <= self.eps_gap * max(abs(best[0]), 1e-300):
                        break

        if best is None:
            # Feasibility push: grow all causality multipliers until the
            # schedule turns feasible, then hand back the certified point.
            for _ in range(200):
                lam[2:n] = lam[2:n] * 2.0 + 1e-3 * max(beta_seed, 1e-20)
                s, beta, eta, p = self._evaluate(lam, beta_seed, eta_seed)
                if consider(lam, beta, eta, p) <= self.tol_caus:
                    break
            if best is None:
                raise SolverError("task routing failed to reach causal feasibility",
                                  residuals={"max_violation": float(p["caus"].max())})
        _, lam_b, beta_b, eta_b, p_b = best
        gap = p_b["energy"] - best_dual
        return lam_b, beta_b, eta_b, p_b, gap

    def _newton_polish(self, lam0, beta0, eta0, max_iter=60):
        """Damped active-set Newton on [causality; task total; relay balance].

        Unknowns are the active causality multipliers plus (beta, eta);
        the Jacobian is assembled from the closed-form schedule
        sensitivities under the current clamp pattern.
        """
        prob = self.prob
        n = prob.n
        lam = lam0.copy()
        beta, eta = beta0, eta0
        slack_trigger = max(100.0 * self.tol_caus, 1e-7 * prob.input_bits)

        s = prob.suffix(lam)
        p = prob.primal(s, beta, eta)

        def full_residual(p, beta, eta):
            caus = p["caus"][:n - 2]
            return caus, p["task_total"] - prob.input_bits, \
                p["relay_total"] - p["off_total"]

        caus, h_res, g_res = full_residual(p, beta, eta)
        active = (lam[2:n] > 0.0) | (caus > -slack_trigger)

        for _ in range(max_iter):
            self.iterations += 1
            idx = np.where(active)[0]            # 0-based over slots 2..N-1
            m = len(idx)
            f_vec = np.concatenate([caus[idx], [h_res, g_res]])
            err = float(np.max(np.abs(f_vec))) if f_vec.size else max(abs(h_res), abs(g_res))
            worst_inactive = float(caus[~active].max(initial=-math.inf))
            if err <= 0.25 * self.tol_caus and worst_inactive <= 0.25 * self.tol_caus:
                return lam, beta, eta, p

            kap_off, rel_sens, dloc = prob.derivatives(p, beta)
            po = np.concatenate([[0.0], np.cumsum(kap_off)])   # prefix, slots 1..N-1
            pr = np.concatenate([[0.0], np.cumsum(rel_sens)])  # prefix, slots 2..N
            slots = idx + 2                                    # slot numbers
            jac = np.zeros((m + 2, m + 2))
            for a, sa in enumerate(slots):
                # rows: causality at slot sa
                mins = np.minimum(sa, slots)
                jac[a, :m] = -(pr[mins - 1] + po[mins - 1])
                jac[a, m] = -po[sa - 1]
                jac[a, m + 1] = pr[sa - 1] + po[sa - 1]
            jac[m, :m] = po[slots - 1]
            jac[m, m] = dloc + po[n - 1]
            jac[m, m + 1] = -po[n - 1]
            # The relay balance is the final-slot causality gap, so its
            # multiplier sensitivities share the causality-row form.
            jac[m + 1, :m] = -(pr[slots - 1] + po[slots - 1])
            jac[m + 1, m] = -po[n - 1]
            jac[m + 1, m + 1] = pr[n - 1] + po[n - 1]
            try:
                step = np.linalg.solve(jac + 1e-14 * np.eye(m + 2), -f_vec)
            except np.linalg.LinAlgError:
                return None
            if not np.all(np.isfinite(step)):
                return None

            alpha, improved = 1.0, False
            for _ in range(25):
                lam_try = lam.copy()
                lam_try[slots] = np.maximum(lam[slots] + alpha * step[:m], 0.0)
                beta_try = beta + alpha * step[m]
                eta_try = eta + alpha * step[m + 1]
                p_try = prob.primal(prob.suffix(lam_try), beta_try, eta_try)
                caus_t, h_t, g_t = full_residual(p_try, beta_try, eta_try)
                err_t = max(float(np.max(np.abs(caus_t[idx]))) if m else 0.0,
                            abs(h_t), abs(g_t))
                if err_t < err * (1.0 - 1e-4 * alpha) or err_t <= 0.25 * self.tol_caus:
                    lam, beta, eta, p = lam_try, beta_try, eta_try, p_try
                    caus, h_res, g_res = caus_t, h_t, g_t
                    improved = True
                    break
                alpha *= 0.5
            if not improved:
                return None
            newly = (~active) & (caus > 0.25 * self.tol_caus)
            active |= newly
            dropped = active & (lam[2:n] <= 0.0) & (caus < -slack_trigger)
            active &= ~dropped
        return None


def primal_from_duals(duals: TaskDuals, b: BandwidthAllocation, traj: Trajectory,
                      cfg: ScenarioConfig, pin_local=False) -> TaskAllocation:
    """Closed-form routing schedules for given multipliers (all UEs)."""
    grid = cfg.grid()
    n = cfg.n_slots
    h_ap = np.zeros(n + 1)
    h_ap[1:] = channel_gain_ap(traj.points[1:], cfg)
    alloc = TaskAllocation.zeros(cfg.num_ues, n)
    for k in range(cfg.num_ues):
        h_ue = np.zeros(n + 1)
        h_ue[1:] = channel_gain_ue(k, traj.points[1:], cfg)
        prob = _UeProblem(cfg, grid, k, b.b_offload[k], b.b_forward[k],
                          h_ue, h_ap, pin_local)
        p = prob.primal(prob.suffix(duals.lam[k]), duals.beta[k], duals.eta[k])
        alloc.l_local[k, 1:] = p["l_loc_per"]
        alloc.l_offload[k] = p["l_off"]
        alloc.l_uav[k] = p["l_uav"]
        alloc.l_forward[k] = p["l_fwd"]
    return alloc


def solve_task_allocation(b: BandwidthAllocation, traj: Trajectory,
                          cfg: ScenarioConfig, tol=None, warm: TaskDuals = None,
                          pin_local=False):
    """Solve the routing subproblem to feasibility + duality-gap certificates.

    Returns ``(TaskAllocation, TaskDuals, TaskSolveReport)``.  ``tol`` is
    the absolute bit tolerance on the causality/equality constraints
    (default: a quarter of the feasibility checker's default).
    """
    cfg.validate()
    grid = cfg.grid()
    n = cfg.n_slots
    if tol is None:
        tol = 0.25 * default_tol_bits(cfg)
    eps_gap = cfg.tol_inner

    h_ap = np.zeros(n + 1)
    h_ap[1:] = channel_gain_ap(traj.points[1:], cfg)
    alloc = TaskAllocation.zeros(cfg.num_ues, n)
    lam_out = np.zeros((cfg.num_ues, n + 1))
    eta_out = np.zeros(cfg.num_ues)
    beta_out = np.zeros(cfg.num_ues)
    task_res = np.zeros(cfg.num_ues)
    relay_res = np.zeros(cfg.num_ues)
    total_iters = 0
    max_viol = 0.0
    gap_total = 0.0
    comp_max = 0.0
    energy_total = 0.0

    for k in range(cfg.num_ues):
        h_ue = np.zeros(n + 1)
        h_ue[1:] = channel_gain_ue(k, traj.points[1:], cfg)
        prob = _UeProblem(cfg, grid, k, b.b_offload[k], b.b_forward[k],
                          h_ue, h_ap, pin_local)
        if pin_local and prob.input_bits > 0 and not prob.can_offload:
            raise SolverError(f"ue {k}: offloading-only routing impossible "
                              "with zero uplink bandwidth everywhere")
        solver = _UeSolver(prob, tol, 0.25 * tol, eps_gap)
        lam0 = warm.lam[k] if warm is not None else np.zeros(n + 1)
        beta0 = warm.beta[k] if warm is not None else 1e-20
        eta0 = warm.eta[k] if warm is not None else 1e-20
        lam_k, beta_k, eta_k, p, gap = solver.solve(lam0, beta0, eta0)

        alloc.l_local[k, 1:] = p["l_loc_per"]
        alloc.l_offload[k] = p["l_off"]
        alloc.l_uav[k] = p["l_uav"]
        alloc.l_forward[k] = p["l_fwd"]
        lam_out[k] = lam_k
        eta_out[k] = eta_k
        beta_out[k] = beta_k
        task_res[k] = p["task_total"] - prob.input_bits
        relay_res[k] = p["relay_total"] - p["off_total"]
        total_iters += solver.iterations
        max_viol = max(max_viol, float(p["caus"].max(initial=0.0)))
        gap_total += max(gap, 0.0)
        slack = np.maximum(-p["caus"][:n - 2], 0.0)
        comp_max = max(comp_max, float((lam_k[2:n] * slack).max(initial=0.0)))
        energy_total += p["energy"]

    duals = TaskDuals(lam_out, eta_out, beta_out)
    scale = max(energy_total, 1e-300)
    report = TaskSolveReport(
        outer_iterations=total_iters,
        max_causality_violation=max_viol,
        task_equality_residual=task_res,
        relay_equality_residual=relay_res,
        duality_gap_estimate=gap_total,
        comp_slack_max=comp_max / scale,
        stationarity_max=_stationarity_residual(duals, alloc, b, traj, cfg, pin_local),
        task_energy=energy_total,
    )
    return alloc, duals, report


def _stationarity_residual(duals, alloc, b, traj, cfg, pin_local=False):
    """Normalized first-order-condition residual of the returned schedules."""
    grid = cfg.grid()
    n = cfg.n_slots
    h_ap = np.zeros(n + 1)
    h_ap[1:] = channel_gain_ap(traj.points[1:], cfg)
    worst = 0.0
    for k, ue in enumerate(cfg.ues):
        h_ue = np.zeros(n + 1)
        h_ue[1:] = channel_gain_ue(k, traj.points[1:], cfg)
        s = np.zeros(n + 2)
        s[1:n] = np.cumsum(duals.lam[k, 1:n][::-1])[::-1]
        beta, eta = duals.beta[k], duals.eta[k]
        scale = max(abs(beta), abs(eta), 1e-300)

        if not pin_local:
            bits_l = alloc.l_local[k, 1:]
            marg = 3.0 * ue.kappa * ue.cycles_per_bit ** 3 / grid.tau ** 2 * bits_l ** 2
            res = np.where(bits_l > 0, np.abs(marg - beta), np.maximum(beta, 0.0))
            worst = max(worst, float(res.max()) / scale)
        for slot in range(1, n):
            bw = b.b_offload[k, slot]
            bits = alloc.l_offload[k, slot]
            dual = s[slot + 1] + beta - eta
            if bw <= 0:
                continue
            marg0 = cfg.noise_w * LN2 / (h_ue[slot] * bw)
            if bits > 0:
                marg = marg0 * 2.0 ** (bits / (grid.delta * bw))
                worst = max(worst, abs(marg - dual) / scale)
            else:
                worst = max(worst, max(dual - marg0, 0.0) / scale)
        for slot in range(2, n + 1):
            dual = eta - s[slot]
            bits_u = alloc.l_uav[k, slot]
            marg_u = 3.0 * cfg.kappa_uav * ue.cycles_per_bit ** 3 / grid.delta ** 2 \
                * bits_u ** 2
            if bits_u > 0:
                worst = max(worst, abs(marg_u - dual) / scale)
            else:
                worst = max(worst, max(dual, 0.0) / scale)
            bw = b.b_forward[k, slot]
            bits_f = alloc.l_forward[k, slot]
            if bw <= 0:
                continue
            marg0 = cfg.noise_w * LN2 / (h_ap[slot] * bw)
            if bits_f > 0:
                marg = marg0 * 2.0 ** (bits_f / (grid.delta * bw))
                worst = max(worst, abs(marg - dual) / scale)
            else:
                worst = max(worst, max(dual - marg0, 0.0) / scale)
    return worst
