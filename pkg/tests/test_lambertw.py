"""Principal-branch Lambert W: residuals, shape properties, extreme arguments."""

import numpy as np
import pytest
import scipy.special

from uavmec.lambertw import w0, w0_log


def test_zero():
    r = w0(0.0)
    assert r.w == 0.0
    assert r.residual == 0.0


def test_identity_at_e():
    assert abs(w0(np.e).w - 1.0) <= 1e-14


def test_omega_constant():
    assert w0(1.0).w == pytest.approx(0.5671432904097838, abs=1e-15)


def test_residual_sweep():
    xs = np.logspace(-12, 12, 1000)
    r = w0(xs)
    assert float(np.max(r.residual)) <= 1e-12


def test_matches_scipy():
    xs = np.logspace(-12, 12, 400)
    mine = w0(xs).w
    ref = scipy.special.lambertw(xs).real
    assert np.max(np.abs(mine - ref) / np.maximum(ref, 1e-300)) < 1e-12


def test_monotone_and_concave():
    xs = np.logspace(-6, 8, 2000)
    w = w0(xs).w
    assert np.all(np.diff(w) > 0)
    # concavity on a uniform grid
    xs = np.linspace(0.01, 100.0, 5000)
    w = w0(xs).w
    assert np.all(np.diff(w, 2) < 1e-12)


def test_negative_rejected():
    with pytest.raises(ValueError):
        w0(-0.1)
    with pytest.raises(ValueError):
        w0(np.array([1.0, -1e-30]))


def test_huge_arguments_stable():
    xs = np.exp(np.linspace(0.0, 600.0, 4000))
    w = w0(xs).w
    assert np.all(np.isfinite(w))
    assert np.all(np.diff(w) > 0)


def test_log_domain_agrees_with_linear():
    lx = np.linspace(-200.0, 500.0, 300)
    a = w0_log(lx)
    b = w0(np.exp(lx)).w
    assert np.max(np.abs(a - b) / np.maximum(b, 1e-300)) < 1e-12


def test_log_domain_huge_defining_equation():
    for lx in (700.0, 5e3, 1e6, 1e8):
        w = w0_log(lx)
        # w + log(w) = lx to full precision
        assert w + np.log(w) == pytest.approx(lx, rel=1e-14)
