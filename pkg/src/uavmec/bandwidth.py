"""Optimal per-slot bandwidth split between the uplink and the relay link.

For fixed bit schedules and trajectory the split decouples per (UE, slot).
On slots where both links carry bits, the stationarity condition of each
link closes in terms of the principal Lambert W branch,

    b = (ln2/2) * bits / (delta * W0[(ln2/2) * sqrt(Gamma)]),
    Gamma = nu * gain * bits / (delta^2 * N0 * ln2),

and both closed forms are strictly decreasing in the slot multiplier
``nu``, so the full-band equality is a monotone 1-D root found by
bisection on log(nu).  Slots where exactly one link carries bits receive
the whole band; idle slots receive none.  The first slot's relay share and
the final slot's uplink share are structurally zero (the bit schedules
already vanish there), and that is the only boundary zeroing applied.

All multiplier arithmetic runs in log space: the multiplier that squeezes
a loaded link into a small share is astronomically large because of the
exponential rate law, and would overflow in linear scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (LN2, BandwidthAllocation, ScenarioConfig, TaskAllocation,
                    Trajectory, channel_gain_ap, channel_gain_ue)
from .lambertw import w0_log


@dataclass(frozen=True)
class BandwidthDuals:
    """Per-(UE, slot) multipliers of the full-band equalities; shape (K, N+1)."""

    nu: np.ndarray

    @classmethod
    def zeros(cls, num_ues, n_slots):
        return cls(np.zeros((num_ues, n_slots + 1)))


@dataclass(frozen=True)
class BandwidthSolveReport:
    iterations: int
    max_split_residual: float         # relative to the system bandwidth
    max_stationarity_residual: float  # relative KKT defect of the closed form


def _share_from_log_nu(log_nu, bits, gain, cfg, grid):
    """Closed-form link share at multiplier exp(log_nu); inf-safe."""
    bits = np.asarray(bits, dtype=float)
    log_gamma = log_nu + np.log(gain * bits / (grid.delta ** 2 * cfg.noise_w * LN2))
    w = w0_log(0.5 * log_gamma + math.log(LN2 / 2.0))
    w = np.maximum(np.asarray(w, dtype=float), 1e-300)
    out = (LN2 / 2.0) * bits / (grid.delta * w)
    return np.where(bits > 0.0, out, 0.0)


def _log_nu_for_share(bits, bw, gain, cfg, grid):
    """log of the multiplier implied by a link carrying ``bits`` on ``bw``."""
    return (np.log(bits * cfg.noise_w * LN2 / (bw ** 2 * gain))
            + bits / (bw * grid.delta) * LN2)


def band_from_dual(nu, l_off, l_fwd, h_ue, h_ap, cfg: ScenarioConfig, grid):
    """Closed-form shares for one (UE, slot) at multiplier ``nu``.

    A link with zero bits gets zero share; the caller is responsible for
    ``nu`` being the full-band root if a normalized split is wanted.
    """
    with np.errstate(divide="ignore"):
        log_nu = np.log(float(nu)) if np.ndim(nu) == 0 else np.log(nu)
    b1 = _share_from_log_nu(log_nu, l_off, h_ue, cfg, grid)
    b2 = _share_from_log_nu(log_nu, l_fwd, h_ap, cfg, grid)
    if np.ndim(b1) == 0 or (np.ndim(l_off) == 0 and np.ndim(l_fwd) == 0):
        return float(b1), float(b2)
    return b1, b2


def solve_bandwidth(l: TaskAllocation, traj: Trajectory, cfg: ScenarioConfig,
                    tol=1e-9, max_iter=200):
    """Optimal split for every (UE, slot); returns (allocation, duals, report).

    ``tol`` bounds the full-band equality residual relative to the system
    bandwidth on dual-active slots.
    """
    grid = cfg.grid()
    n = cfg.n_slots
    bw = cfg.bandwidth_hz
    b = BandwidthAllocation.zeros(cfg.num_ues, n)
    nu = np.zeros((cfg.num_ues, n + 1))
    h_ap = np.zeros(n + 1)
    h_ap[1:] = channel_gain_ap(traj.points[1:], cfg)

    # Gather the dual-active pairs for a lockstep bisection.
    rows_k, rows_n, g_ue_l, g_ap_l, bits_o, bits_f = [], [], [], [], [], []
    stat_res = 0.0
    for k in range(cfg.num_ues):
        h_ue = np.zeros(n + 1)
        h_ue[1:] = channel_gain_ue(k, traj.points[1:], cfg)
        for slot in range(1, n + 1):
            lo = l.l_offload[k, slot]
            lf = l.l_forward[k, slot]
            if lo > 0.0 and lf > 0.0:
                rows_k.append(k)
                rows_n.append(slot)
                g_ue_l.append(h_ue[slot])
                g_ap_l.append(h_ap[slot])
                bits_o.append(lo)
                bits_f.append(lf)
            elif lo > 0.0:
                b.b_offload[k, slot] = bw
                nu[k, slot] = math.exp(_log_nu_for_share(lo, bw, h_ue[slot], cfg, grid))
            elif lf > 0.0:
                b.b_forward[k, slot] = bw
                nu[k, slot] = math.exp(_log_nu_for_share(lf, bw, h_ap[slot], cfg, grid))

    iters = 0
    split_res = 0.0
    if rows_k:
        ks = np.array(rows_k)
        slots = np.array(rows_n)
        g_ue = np.array(g_ue_l)
        g_ap = np.array(g_ap_l)
        lo_bits = np.array(bits_o)
        lf_bits = np.array(bits_f)

        def split_excess(log_nu):
            b1 = _share_from_log_nu(log_nu, lo_bits, g_ue, cfg, grid)
            b2 = _share_from_log_nu(log_nu, lf_bits, g_ap, cfg, grid)
            return b1, b2, b1 + b2 - bw

        # Bracket: at the multiplier giving either link the whole band the
        # split overflows the band; at the one squeezing it to 1e-6 of the
        # band the split underuses it.  Expand additively in log as safety.
        log_lo = np.minimum(_log_nu_for_share(lo_bits, bw, g_ue, cfg, grid),
                            _log_nu_for_share(lf_bits, bw, g_ap, cfg, grid))
        log_hi = np.maximum(_log_nu_for_share(lo_bits, 1e-6 * bw, g_ue, cfg, grid),
                            _log_nu_for_share(lf_bits, 1e-6 * bw, g_ap, cfg, grid))
        for _ in range(200):
            _, _, ex = split_excess(log_lo)
            if np.all(ex >= 0.0):
                break
            log_lo = np.where(ex < 0.0, log_lo - 16.0, log_lo)
        for _ in range(200):
            _, _, ex = split_excess(log_hi)
            if np.all(ex <= 0.0):
                break
            log_hi = np.where(ex > 0.0, log_hi + 16.0, log_hi)

        for iters in range(1, max_iter + 1):
            mid = 0.5 * (log_lo + log_hi)
            b1, b2, ex = split_excess(mid)
            high = ex > 0.0
            log_lo = np.where(high, mid, log_lo)
            log_hi = np.where(high, log_hi, mid)
            if np.all(np.abs(ex) <= tol * bw):
                break
        mid = 0.5 * (log_lo + log_hi)
        b1, b2, ex = split_excess(mid)
        b.b_offload[ks, slots] = b1
        b.b_forward[ks, slots] = b2
        nu[ks, slots] = np.exp(mid)
        split_res = float(np.max(np.abs(ex)) / bw)

        imp1 = _log_nu_for_share(lo_bits, b1, g_ue, cfg, grid)
        imp2 = _log_nu_for_share(lf_bits, b2, g_ap, cfg, grid)
        stat_res = float(max(np.max(np.abs(np.expm1(imp1 - mid))),
                             np.max(np.abs(np.expm1(imp2 - mid)))))

    report = BandwidthSolveReport(iterations=iters,
                                  max_split_residual=split_res,
                                  max_stationarity_residual=stat_res)
    return b, BandwidthDuals(nu), report
