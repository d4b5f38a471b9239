"""Principal branch of the Lambert W function on the nonnegative reals.

W0(x) is the unique w >= 0 with w * exp(w) = x for x >= 0.  The bandwidth
split closed form only ever evaluates it at nonnegative arguments, so the
negative domain is rejected outright to catch upstream sign bugs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MAX_ITER = 50
_REL_TOL = 1e-14


@dataclass(frozen=True)
class LambertResult:
    """Value w and the relative defining-equation residual |w e^w - x| / max(x, tiny)."""

    w: float | np.ndarray
    residual: float | np.ndarray


def w0(x) -> LambertResult:
    """Evaluate W0 elementwise for x >= 0.

    Initial guess: series w ~ x (1 - x + 1.5 x^2) for small x, else
    log(x) - log(log(x)) style asymptote, polished by Halley iterations
    until the defining-equation residual is below 1e-14 relative.
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    z = np.atleast_1d(arr).copy()
    if np.any(z < 0) or np.any(~np.isfinite(z)):
        raise ValueError("w0 requires finite x >= 0")

    w = np.empty_like(z)
    small = z < 1e-3
    zs = z[small]
    w[small] = zs * (1.0 - zs + 1.5 * zs ** 2)
    big = ~small
    zb = z[big]
    lz = np.log(zb)
    # For moderate x the asymptote overshoots; the blend below keeps the
    # guess within Halley's basin everywhere on [1e-3, inf).
    guess = np.where(zb > np.e, lz - np.log(np.maximum(lz, 1e-300)), 0.5 * lz + 0.5)
    w[big] = np.maximum(guess, 1e-300)

    for _ in range(_MAX_ITER):
        ew = np.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        dw = f / denom
        w_new = np.maximum(w - dw, 0.0)
        # Step-based stop: near w ~ 700 the exp() ulp forbids a pure
        # residual target, while the iterate itself is fully converged.
        done = (np.abs(dw) <= 5e-16 * (2.0 + np.abs(w_new))) | (w_new == w)
        w = w_new
        if np.all(done):
            break
    else:
        raise ArithmeticError("W0 Halley iteration failed to converge")

    residual = np.abs(w * np.exp(w) - z) / np.maximum(z, 1e-300)
    if scalar:
        return LambertResult(float(w[0]), float(residual[0]))
    return LambertResult(w, residual)


def w0_log(log_x):
    """W0(exp(log_x)) without forming exp(log_x); safe for huge arguments.

    For log_x beyond the overflow range the defining equation becomes
    w + log(w) = log_x, solved by Newton from the asymptote
    w ~ log_x - log(log_x); elsewhere this defers to ``w0``.
    """
    arr = np.asarray(log_x, dtype=float)
    scalar = arr.ndim == 0
    lx = np.atleast_1d(arr).astype(float)
    out = np.empty_like(lx)
    small = lx <= 600.0
    if np.any(small):
        out[small] = np.atleast_1d(w0(np.exp(lx[small])).w)
    big = ~small
    if np.any(big):
        v = lx[big]
        w = v - np.log(v)
        for _ in range(_MAX_ITER):
            step = (v - w - np.log(w)) * w / (w + 1.0)
            w = w + step
            if np.all(np.abs(step) <= 1e-15 * w):
                break
        out[big] = w
    return float(out[0]) if scalar else out
