import numpy as np
import pytest
from scipy.integrate import quad

from anisoag import NormSpec, trace_boundary
from anisoag import costs
from anisoag.costs import (c1d, cent, cent_explicit, cent_lp, check_eqbes21,
                           cost_report, delta_phi, make_jump, make_jump_theta,
                           omega_modulus, pi_cost, pi_cost_report, pi_many,
                           pi_tensor, verify_bounds)


def _wrap_dist(a, b):
    return abs((a - b + np.pi) % (2.0 * np.pi) - np.pi)


# -- make_jump -------------------------------------------------------------------


def test_make_jump_euclidean_symmetric_pair(bp_euclid):
    d = 0.35
    jp = make_jump_theta(bp_euclid, -d, d)
    assert np.allclose(jp.nu, [-1.0, 0.0], atol=1e-9)
    assert abs(jp.a - (-np.cos(d))) < 1e-9
    assert _wrap_dist(jp.theta_tilde, 0.0) < 1e-8
    assert abs(jp.width - 2 * d) < 1e-12


def test_make_jump_antipodal(bp_lp3):
    z = bp_lp3.gamma_at(0.9)
    jp = make_jump(bp_lp3, z, -z)
    assert jp.antipodal
    assert jp.theta_tilde is None
    assert abs(jp.a) < 1e-9
    # nu is the normalized rotation of the chord
    expect = np.array([-2 * z[1], 2 * z[0]]) / (2 * np.hypot(*z))
    assert np.allclose(jp.nu, expect, atol=1e-12)


def test_make_jump_invariants(bp_lp3):
    jp = make_jump_theta(bp_lp3, 0.1, 0.9)
    d = jp.z_plus - jp.z_minus
    assert abs(float(d @ jp.nu)) < 1e-10
    assert abs(float(jp.z_plus @ jp.nu) - float(jp.z_minus @ jp.nu)) < 1e-10
    # theta_tilde root and one-signedness of (theta - theta_tilde) gamma'.nu
    assert 0.1 < jp.theta_tilde < 0.9
    g = np.asarray(bp_lp3.gamma_prime_at(np.linspace(0.1, 0.9, 101))) @ jp.nu
    sgn = (np.linspace(0.1, 0.9, 101) - jp.theta_tilde) * g
    assert np.min(sgn) > -1e-8
    assert abs(float(bp_lp3.gamma_prime_at(jp.theta_tilde) @ jp.nu)) < 1e-8


def test_make_jump_rejects_coincident(bp_euclid):
    z = bp_euclid.gamma_at(1.0)
    with pytest.raises(ValueError):
        make_jump(bp_euclid, z, z)


def test_geodesic_representatives(bp_euclid):
    # crossing the wrap: pair (0.1, 6.1) has geodesic width 2 pi - 6 < pi
    jp = make_jump_theta(bp_euclid, 0.1, 6.1)
    assert jp.width == pytest.approx(2 * np.pi - 6.0, abs=1e-12)
    assert jp.theta_minus < jp.theta_plus


# -- c1d -------------------------------------------------------------------------


def test_c1d_euclidean_closed_form(bp_euclid):
    for d in (0.1, 0.3, 0.7):
        jp = make_jump_theta(bp_euclid, -d, d)
        delta = jp.chord
        assert c1d(bp_euclid, jp) == pytest.approx(delta ** 3 / 3.0, rel=1e-8)


def test_c1d_antipodal_euclidean(bp_euclid):
    jp = make_jump_theta(bp_euclid, 0.0, np.pi)
    assert c1d(bp_euclid, jp) == pytest.approx(8.0 / 3.0, rel=1e-8)


def test_c1d_vanishes_with_width(bp_lp4):
    jp = make_jump_theta(bp_lp4, 1.0, 1.0 + 1e-4)
    assert c1d(bp_lp4, jp) < 1e-11


def test_c1d_swap_symmetric(bp_lp3):
    a = c1d(bp_lp3, make_jump_theta(bp_lp3, 0.2, 1.1))
    b = c1d(bp_lp3, make_jump_theta(bp_lp3, 1.1, 0.2))
    assert a == pytest.approx(b, rel=1e-10)


# -- cent ------------------------------------------------------------------------


def test_cent_explicit_euclidean_closed_form(bp_euclid):
    for d in (0.15, 0.3):
        jp = make_jump_theta(bp_euclid, -d, d)
        expect = 2.0 * (np.sin(d) - d * np.cos(d))
        assert cent_explicit(bp_euclid, jp) == pytest.approx(expect, rel=1e-8)
    # frozen value at half-width 0.3 from the integral oracle int u sin u du
    jp = make_jump_theta(bp_euclid, -0.3, 0.3)
    assert cent_explicit(bp_euclid, jp) == pytest.approx(0.017838519847315548,
                                                         rel=1e-9)


def test_cent_explicit_rejects_wide(bp_euclid):
    jp = make_jump_theta(bp_euclid, 0.0, 2.0)
    with pytest.raises(ValueError, match="cent_lp"):
        cent_explicit(bp_euclid, jp)
    # the dispatcher falls back to the LP instead
    assert cent(bp_euclid, jp, N=256) > 0


def test_cent_lp_matches_explicit(bp_euclid, bp_lp3):
    for bp, pair in ((bp_euclid, (-0.3, 0.3)), (bp_lp3, (0.4, 1.1))):
        jp = make_jump_theta(bp, *pair)
        ref = cent_explicit(bp, jp)
        lp = cent_lp(bp, jp, N=512)
        assert abs(lp - ref) / ref < 1e-3


def test_cent_lp_solution_is_feasible(bp_euclid):
    jp = make_jump_theta(bp_euclid, -0.3, 0.3)
    val, lam = cent_lp(bp_euclid, jp, N=256, return_lambda=True)
    dth = 2 * np.pi / 256
    assert np.max(np.abs(np.diff(np.append(lam, lam[0])))) <= dth * (1 + 1e-7)
    th = np.arange(256) * dth
    gp = np.asarray(bp_euclid.gamma_prime_at(th))
    assert np.max(np.abs(dth * lam @ gp)) < 1e-7
    assert val >= 0.0


def test_cent_lp_antipodal_positive_and_stable(bp_euclid):
    jp = make_jump_theta(bp_euclid, 0.0, np.pi)
    v1 = cent_lp(bp_euclid, jp, N=256)
    v2 = cent_lp(bp_euclid, jp, N=512)
    assert v1 > 0.1
    assert abs(v2 - v1) / v1 < 0.01


def test_cent_lp_grid_floor(bp_euclid):
    jp = make_jump_theta(bp_euclid, -0.3, 0.3)
    with pytest.raises(ValueError):
        cent_lp(bp_euclid, jp, N=64)


def test_cent_swap_symmetric(bp_lp4):
    a = cent(bp_lp4, make_jump_theta(bp_lp4, 0.2, 0.8))
    b = cent(bp_lp4, make_jump_theta(bp_lp4, 0.8, 0.2))
    assert a == pytest.approx(b, rel=1e-8)


# -- Pi ---------------------------------------------------------------------------


def test_pi_euclidean_closed_form(bp_euclid):
    for w in (0.2, 0.7, 1.5):
        assert pi_cost(bp_euclid, 0.3, 0.3 + w) == pytest.approx(w ** 3 / 3.0,
                                                                 rel=1e-8)


def test_pi_zero_width(bp_lp3):
    assert pi_cost(bp_lp3, 1.0, 1.0) == 0.0


def test_pi_geodesic_reduction_and_symmetry(bp_lp3):
    a = pi_cost(bp_lp3, 0.2, 1.0)
    assert pi_cost(bp_lp3, 1.0, 0.2) == pytest.approx(a, rel=1e-12)
    assert pi_cost(bp_lp3, 0.2 + 2 * np.pi, 1.0) == pytest.approx(a, rel=1e-10)


def test_pi_tensor_route_agrees(bp_lp4):
    for t1, t2 in ((0.2, 0.9), (2.0, 3.1)):
        red = pi_cost(bp_lp4, t1, t2)
        ten = pi_tensor(bp_lp4, t1, t2, n=512)
        assert abs(red - ten) / red < 1e-3


def test_pi_remlam_route_agrees(bp_lp4):
    val, remlam, flag = pi_cost_report(bp_lp4, 0.3, 1.2)
    assert not flag
    assert abs(val - remlam) / val < 0.01


def test_pi_flat_direction_smaller_than_circle(bp_lp4):
    # the l4 circle is flat at the axes: a pair straddling theta = 0 has much
    # less curvature mass than the euclidean w^3 / 3
    w = 0.5
    flat = pi_cost(bp_lp4, -w / 2, w / 2)
    assert flat < 0.5 * w ** 3 / 3.0
    # and the sharp diagonal pair exceeds the euclidean value
    t_diag = bp_lp4.theta_of_point(bp_lp4.kappa * np.array([2 ** -0.25, 2 ** -0.25]))
    sharp = pi_cost(bp_lp4, t_diag - w / 2, t_diag + w / 2)
    assert sharp > w ** 3 / 3.0


def test_pi_many_vectorized(bp_lp3, rng):
    t1 = rng.uniform(0, 2 * np.pi, 40)
    t2 = t1 + rng.uniform(0, np.pi, 40)
    vals = pi_many(bp_lp3, t1, t2)
    for i in (0, 7, 23):
        assert vals[i] == pytest.approx(pi_cost(bp_lp3, t1[i], t2[i]), rel=1e-12)


# -- delta_phi -----------------------------------------------------------------------


def test_delta_phi_identical_states(bp_lp3):
    m = np.array([np.cos(0.4), np.sin(0.4)])
    assert delta_phi(bp_lp3, m, m, 0.3) == 0.0


def test_delta_phi_euclidean_closed_form(bp_euclid):
    # closed form of the paper's two-arc formula (twice the single-arc
    # integral int int_{|t-s|<delta} |sin(t-s)| dt ds over [0, w]^2)
    def single_arc(w, dl):
        if w <= dl:
            return 2.0 * (w - np.sin(w))
        return 2.0 * ((dl - np.sin(dl)) + (w - dl) * (1.0 - np.cos(dl)))

    for w, dl in ((0.3, 0.4), (0.9, 0.4), (1.4, 0.7)):
        m1 = np.array([1.0, 0.0])
        m2 = np.array([np.cos(w), np.sin(w)])
        got = delta_phi(bp_euclid, m1, m2, dl, n=1024)
        assert got == pytest.approx(2.0 * single_arc(w, dl), rel=2e-3)


def test_delta_phi_dominates_lambda(bp_lp4):
    # Delta_phi >= c Lambda with a fitted c > 0 over a pair grid
    dl = 0.35
    ratios = []
    for t1 in np.linspace(0, 2 * np.pi, 12, endpoint=False):
        for w in np.linspace(0.15, np.pi - 0.05, 12):
            m1 = np.array([np.cos(t1), np.sin(t1)])
            m2 = np.array([np.cos(t1 + w), np.sin(t1 + w)])
            dp = delta_phi(bp_lp4, m1, m2, dl, n=192)
            lam = pi_cost(bp_lp4, t1, t1 + w)
            ratios.append(dp / lam)
    assert min(ratios) > 0


def test_delta_phi_range_check(bp_euclid):
    with pytest.raises(ValueError):
        delta_phi(bp_euclid, [1, 0], [0, 1], 2.0)


# -- omega ----------------------------------------------------------------------------


def test_omega_euclidean_is_identity(bp_euclid):
    for d in (0.1, 0.3, 1.0):
        assert omega_modulus(bp_euclid, d) == pytest.approx(d, abs=1e-9)


def test_omega_lp4_exceeds_identity(bp_lp4):
    # flat directions make alpha^{-1} spread faster than the circle
    assert omega_modulus(bp_lp4, 0.05) > 0.05 * 1.5


def test_check_eqbes21(bp_lp4, rng):
    pairs = [(t, t + w) for t, w in zip(rng.uniform(0, 2 * np.pi, 100),
                                        rng.uniform(0.05, np.pi, 100))]
    ok, c = check_eqbes21(bp_lp4, pairs)
    assert ok and c > 0


# -- degeneracy orders ------------------------------------------------------------------


@pytest.mark.parametrize("name", ["euclidean", "ellipse2to1"])
def test_costs_vanish_cubically(boundaries, name):
    bp = boundaries[name]
    widths = np.array([0.2, 0.1, 0.05, 0.025])
    vals = {"c1d": [], "cent": [], "pi": []}
    for w in widths:
        jp = make_jump_theta(bp, 1.0 - w / 2, 1.0 + w / 2)
        vals["c1d"].append(c1d(bp, jp))
        vals["cent"].append(cent_explicit(bp, jp))
        vals["pi"].append(pi_cost(bp, 1.0 - w / 2, 1.0 + w / 2))
    for key, v in vals.items():
        slope = np.polyfit(np.log(widths), np.log(v), 1)[0]
        assert abs(slope - 3.0) < 0.1, key


# -- scaling ledger ----------------------------------------------------------------------


def test_scaling_ledger_euclidean_family():
    """Under the rescale kappa, costs map as c1d -> kappa c1d_orig,
    cent -> kappa^2 cent_orig, pi -> kappa^2 pi_orig. Asserted on scaled
    euclidean norms against raw quadrature of the original definitions."""
    for c in (0.5, 2.0):
        norm = NormSpec.custom(lambda z, c=c: c * np.hypot(
            np.asarray(z, dtype=float)[..., 0], np.asarray(z, dtype=float)[..., 1]),
            name=f"euclid_scaled_{c}")
        bp = trace_boundary(norm, 512)
        assert bp.kappa == pytest.approx(c, rel=1e-10)
        d = 0.3
        jp = make_jump_theta(bp, -d, d)

        # rescaled-frame costs equal the standard euclidean ones
        assert c1d(bp, jp) == pytest.approx((2 * np.sin(d)) ** 3 / 3.0, rel=1e-7)
        assert cent_explicit(bp, jp) == pytest.approx(
            2.0 * (np.sin(d) - d * np.cos(d)), rel=1e-7)

        # original-frame oracles by raw quadrature: original boundary points
        # are gamma / kappa, original arc length is theta / kappa
        zp_o = jp.z_plus / bp.kappa
        zm_o = jp.z_minus / bp.kappa
        nu = jp.nu
        a_o = float(zp_o @ nu)
        inu = np.array([-nu[1], nu[0]])
        c1d_orig = 2.0 * abs(quad(
            lambda s: 1.0 - c ** 2 * np.hypot(*(a_o * nu + s * inu)) ** 2,
            float(zp_o @ inu), float(zm_o @ inu))[0])
        assert c1d(bp, jp) == pytest.approx(bp.kappa * c1d_orig, rel=1e-7)

        # cent: original parametrization gamma_o(t) = (1/c) e^{i c t}
        def integrand(t):
            gp_o = np.array([-np.sin(c * t), np.cos(c * t)])
            return (t - 0.0) * float(gp_o @ nu)
        lim = d / c
        cent_orig = abs(quad(integrand, -lim, lim)[0])
        assert cent_explicit(bp, jp) == pytest.approx(bp.kappa ** 2 * cent_orig,
                                                      rel=1e-7)

        # pi: alpha_o(t) = c t + pi/2 on the original arc length
        w_o = 2 * d / c
        pi_orig = quad(lambda t: 2.0 * (c * t) * (2 * t - 0.0 - w_o), 0.0, w_o)[0]
        pi_orig = abs(pi_orig)
        assert pi_cost(bp, -d, d) == pytest.approx(bp.kappa ** 2 * pi_orig, rel=1e-7)


# -- reports -------------------------------------------------------------------------------


def test_cost_report_fields(bp_lp3):
    jp = make_jump_theta(bp_lp3, 0.2, 0.9)
    rep = cost_report(bp_lp3, jp, lp_n=256)
    d = rep.as_dict()
    assert d["cent_explicit"] is not None
    assert d["cent"] <= d["pi"] + 1e-6
    assert d["c1d"] > 0 and d["ratio_c1d_cent"] > 0


def test_verify_bounds_euclidean_small():
    bp = trace_boundary(NormSpec.euclidean(), 512)
    rep = verify_bounds(bp, n_base=6, n_widths=8, lp_n=192, refine=False,
                        n_small_jump=4)
    assert rep["cent_leq_pi_violations"] == 0
    assert rep["small_jump"]["matches_4_over_det"]
    assert not rep["small_jump"]["matches_2_over_det"]
    for s in rep["small_jump"]["points"]:
        assert s["ratio"] == pytest.approx(4.0, rel=0.01)
    assert 0 < rep["inf_ratio"] <= rep["sup_ratio"] < np.inf


def test_scan_pairs_parallel_merge_deterministic(bp_euclid):
    pairs = [(0.1, 0.4), (1.0, 1.5), (2.0, 2.2), (3.0, 3.9)]
    seq = costs.scan_pairs(bp_euclid, pairs, lp_n=192, jobs=1)
    par = costs.scan_pairs(bp_euclid, pairs, lp_n=192, jobs=2)
    assert seq == par
