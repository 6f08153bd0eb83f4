import io

import numpy as np
import pytest

from anisoag import c1d, make_jump_theta, profile_energy, solve_profile
from anisoag.profiles import _chord_fn, _solve_from, profile_to_csv


def test_euclidean_tanh_profile(bp_euclid):
    # z+- = e^{+- i Delta}: the heteroclinic is zeta = t tanh(t x), t = sin Delta
    d = 0.4
    jp = make_jump_theta(bp_euclid, -d, d)
    p = solve_profile(bp_euclid, jp, tol=1e-8)
    t = np.sin(d)
    assert np.max(np.abs(p.zeta - t * np.tanh(t * p.x))) < 1e-6
    assert not p.partial
    assert p.endpoint_errors[0] < 1e-8 and p.endpoint_errors[1] < 1e-8


def test_profile_monotone_and_limits(bp_lp3):
    jp = make_jump_theta(bp_lp3, 0.3, 1.2)
    p = solve_profile(bp_lp3, jp, tol=1e-8)
    assert np.all(np.diff(p.zeta) >= -1e-12)
    inu = np.array([-jp.nu[1], jp.nu[0]])
    limits = sorted([float(jp.z_plus @ inu), float(jp.z_minus @ inu)])
    assert p.zeta_lo == pytest.approx(limits[0], abs=1e-12)
    assert p.zeta_hi == pytest.approx(limits[1], abs=1e-12)
    assert abs(p.zeta[0] - limits[0]) < 1e-8
    assert abs(p.zeta[-1] - limits[1]) < 1e-8


def test_profile_energy_equals_c1d(bp_euclid, bp_lp3):
    for bp, pair in ((bp_euclid, (-0.4, 0.4)), (bp_lp3, (0.3, 1.2))):
        jp = make_jump_theta(bp, *pair)
        p = solve_profile(bp, jp, tol=1e-9)
        assert profile_energy(bp, p) == pytest.approx(c1d(bp, jp), rel=5e-3)


def test_profile_energy_lp4_flat_direction(bp_lp4):
    # jump across the flat axis direction: slower tails, larger window
    w = 0.5
    jp = make_jump_theta(bp_lp4, -w / 2, w / 2)
    p = solve_profile(bp_lp4, jp, tol=1e-9)
    assert profile_energy(bp_lp4, p) == pytest.approx(c1d(bp_lp4, jp), rel=5e-3)
    assert not p.partial


def test_equipartition_along_profile(bp_euclid):
    # (zeta')^2 = F(zeta)^2: the euclidean closed form pins the solution to
    # 1e-6, and the spline derivative of the samples matches F(zeta)
    d = 0.5
    jp = make_jump_theta(bp_euclid, -d, d)
    p = solve_profile(bp_euclid, jp, tol=1e-9)
    F, _, _ = _chord_fn(bp_euclid, jp)
    from scipy.interpolate import CubicSpline
    sp = CubicSpline(p.x, p.zeta)
    xs = np.linspace(p.x[0] * 0.8, p.x[-1] * 0.8, 500)
    resid = np.abs(sp(xs, 1) - np.array([F(z) for z in sp(xs)]))
    assert np.max(resid) < 1e-5


def test_energy_independent_of_initialization(bp_lp3):
    jp = make_jump_theta(bp_lp3, 0.4, 1.0)
    F, z_lo, z_hi = _chord_fn(bp_lp3, jp)
    p_mid = _solve_from(bp_lp3, jp, F, z_lo, z_hi, 0.5 * (z_lo + z_hi), 1e-9)
    p_off = _solve_from(bp_lp3, jp, F, z_lo, z_hi, 0.7 * z_lo + 0.3 * z_hi, 1e-9)
    e1 = profile_energy(bp_lp3, p_mid)
    e2 = profile_energy(bp_lp3, p_off)
    assert abs(e1 - e2) <= 1e-8 * max(e1, e2) + 1e-12


def test_profile_tol_validation(bp_euclid):
    jp = make_jump_theta(bp_euclid, -0.3, 0.3)
    with pytest.raises(ValueError):
        solve_profile(bp_euclid, jp, tol=1e-2)


def test_degenerate_jump_rejected(bp_euclid):
    with pytest.raises(ValueError):
        make_jump_theta(bp_euclid, 0.5, 0.5)


def test_tail_diagnostics_reported(bp_lp4):
    jp = make_jump_theta(bp_lp4, -0.25, 0.25)
    p = solve_profile(bp_lp4, jp, tol=1e-8)
    assert np.isfinite(p.tail_exp_rate)
    assert p.tail_energy >= 0.0


def test_profile_csv(bp_euclid):
    jp = make_jump_theta(bp_euclid, -0.3, 0.3)
    p = solve_profile(bp_euclid, jp, tol=1e-6)
    buf = io.StringIO()
    profile_to_csv(bp_euclid, p, buf)
    lines = buf.getvalue().splitlines()
    assert lines[1] == "x,zeta,integrand"
    assert len(lines) == 2 + len(p.x)
