import io

import numpy as np
import pytest

from anisoag import (ExtendedEntropy, NotAdmissibleError, entropy_to_csv,
                     eta_cutoff, eta_cutoff_prime, heaviside_entropy,
                     lambda_of_psi, make_entropy, phi_psi, project_to_admissible,
                     trace_boundary, NormSpec)
from anisoag.entropy import heaviside_limit_difference


# -- projection ----------------------------------------------------------------


def test_constant_lambda_unchanged_euclidean(bp_euclid):
    e = project_to_admissible(bp_euclid, np.ones(1024))
    assert e.mu_l1 < 1e-12
    assert np.max(np.abs(e.lambda_samples - 1.0)) < 1e-12


def test_projection_annihilates_own_basis(bp_lp3):
    lam = bp_lp3.gamma_prime_samples[:, 0].copy()
    e = project_to_admissible(bp_lp3, lam)
    assert np.max(np.abs(e.lambda_samples)) < 1e-10


def test_sin3theta_unchanged_euclidean(bp_euclid):
    # Fourier orthogonality: sin(3 theta) has no e^{i theta} component, and
    # the periodic rectangle rule resolves that exactly
    lam = np.sin(3.0 * bp_euclid.theta_grid)
    e = project_to_admissible(bp_euclid, lam)
    assert np.max(np.abs(e.lambda_samples - lam)) < 1e-10


def test_projected_entropy_is_admissible(bp_lp4, rng):
    lam = rng.normal(size=1024)
    e = project_to_admissible(bp_lp4, lam)
    assert e.admissible
    # phi closes up
    assert np.max(np.abs(e.phi_samples[-1])) < 1e-8


# -- phi accumulation -------------------------------------------------------------


def test_phi_closed_form_constant_lambda(bp_euclid):
    # lambda == 1 on the circle: Phi(gamma(theta)) = e^{i theta} - 1
    e = project_to_admissible(bp_euclid, np.ones(1024))
    got = e.phi_at(np.pi)
    assert np.max(np.abs(got - np.array([-2.0, 0.0]))) < 1e-4
    th = np.linspace(0, 2 * np.pi, 33)
    expect = np.stack([np.cos(th) - 1.0, np.sin(th)], -1)
    assert np.max(np.abs(e.phi_at(th) - expect)) < 1e-4


def test_phi_zero_lambda(bp_euclid):
    e = project_to_admissible(bp_euclid, np.zeros(1024))
    assert np.max(np.abs(e.phi_at(np.linspace(0, 7, 23)))) < 1e-14


def test_phi_periodic(bp_lp3, rng):
    e = project_to_admissible(bp_lp3, rng.normal(size=1024))
    th = rng.uniform(0, 2 * np.pi, 17)
    assert np.max(np.abs(e.phi_at(th + 2 * np.pi) - e.phi_at(th))) < 1e-12


def test_phi_requires_admissible(bp_euclid):
    # gamma'_1 has a nonzero moment against gamma', so the raw entropy is
    # not periodic and phi_at must refuse
    e = make_entropy(bp_euclid, bp_euclid.gamma_prime_samples[:, 0].copy())
    assert not e.admissible
    with pytest.raises(NotAdmissibleError):
        e.phi_at(0.5)


def test_phi_tangency(bp_lp4):
    # d/dtheta Phi(gamma(theta)) is parallel to gamma'(theta): the sample
    # increments are exactly aligned with the midpoint tangents
    e = project_to_admissible(bp_lp4, np.cos(2.0 * bp_lp4.theta_grid))
    dphi = np.diff(e.phi_samples, axis=0)
    gp_mid = bp_lp4.gamma_prime_at(bp_lp4.theta_grid + bp_lp4.delta_theta / 2)
    cross = dphi[:, 0] * gp_mid[:, 1] - dphi[:, 1] * gp_mid[:, 0]
    assert np.max(np.abs(cross)) < 1e-8


def test_constant_lambda_translation_identity(bp_lp3):
    # for lambda == a: Phi(gamma(theta)) - Phi(gamma(0)) = a (gamma(theta) - gamma(0))
    a = 0.7
    e = project_to_admissible(bp_lp3, np.full(1024, a))
    th = np.linspace(0, 2 * np.pi, 65)
    expect = a * (bp_lp3.gamma_at(th) - bp_lp3.gamma_at(0.0))
    assert np.max(np.abs(e.phi_at(th) - expect)) < 1e-4


def test_lip_bound_stable_under_doubling():
    bp1 = trace_boundary(NormSpec.lp(3), 512)
    bp2 = trace_boundary(NormSpec.lp(3), 1024)
    e1 = project_to_admissible(bp1, np.sin(2 * bp1.theta_grid) + 0.3 * np.cos(5 * bp1.theta_grid))
    e2 = project_to_admissible(bp2, np.sin(2 * bp2.theta_grid) + 0.3 * np.cos(5 * bp2.theta_grid))
    assert abs(e1.lip_bound - e2.lip_bound) / e2.lip_bound < 0.05


# -- heaviside family ---------------------------------------------------------------


def test_heaviside_delta_range(bp_euclid):
    with pytest.raises(ValueError):
        heaviside_entropy(bp_euclid, bp_euclid.gamma_at(1.0), 1.0)


def test_heaviside_limit_pointwise_euclidean(bp_euclid):
    # xi = (1, 0), theta0 = 0: relative to an off-branch reference, the value
    # at z = (0, 1) converges to gamma'(0) = (0, 1) as delta -> 0
    theta0 = 0.0
    ref = theta0 - 0.8  # off-branch reference point
    expect = heaviside_limit_difference(bp_euclid, theta0, np.pi / 2, ref)
    assert np.allclose(expect, [0.0, 1.0], atol=1e-12)
    errs = []
    for delta in (0.2, 0.1, 0.05):
        e = heaviside_entropy(bp_euclid, np.array([1.0, 0.0]), delta)
        got = e.phi_at(np.pi / 2) - e.phi_at(ref)
        errs.append(np.max(np.abs(got - expect)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 0.02


def test_heaviside_off_branch_zero(bp_lp3):
    # z with z . i xi < 0, away from the discontinuity: difference to another
    # off-branch point tends to 0 linearly in delta
    theta0 = 1.0
    off_a = theta0 + np.pi + 0.7
    off_b = theta0 + np.pi + 1.9
    prev = None
    for delta in (0.2, 0.1, 0.05):
        e = heaviside_entropy(bp_lp3, theta0, delta)
        d = float(np.max(np.abs(e.phi_at(off_a) - e.phi_at(off_b))))
        if prev is not None:
            assert d < prev
        prev = d
    assert prev < 0.02
    # and the indicator signs are as advertised
    z_a = bp_lp3.gamma_at(off_a)
    ixi = np.array([-bp_lp3.gamma_at(theta0)[1], bp_lp3.gamma_at(theta0)[0]])
    assert float(z_a @ ixi) < 0


def test_heaviside_correction_decreases(bp_lp4):
    xi = bp_lp4.gamma_at(0.8)
    mus = [heaviside_entropy(bp_lp4, xi, d).mu_l1 for d in (0.2, 0.1, 0.05)]
    assert mus[0] > mus[1] > mus[2]


def test_heaviside_uniformly_bounded(bp_euclid):
    # |Psi_delta| <= 2 since |gamma'| = 1; our anchor differs by a constant,
    # so the diameter bound carries the correction term
    for delta in (0.2, 0.05):
        e = heaviside_entropy(bp_euclid, 2.0, delta)
        th = np.linspace(0, 2 * np.pi, 512, endpoint=False)
        vals = e.phi_at(th) - e.phi_at(2.0 + 1e-9)
        assert np.max(np.hypot(vals[:, 0], vals[:, 1])) <= 2.0 + e.mu_l1 + 1e-6


# -- Phi_psi family -------------------------------------------------------------------


def test_phi_psi_constant_gives_constant_lambda(bp_lp3):
    # psi == c: lambda == 2c
    th = np.linspace(0, 2 * np.pi, 9)
    lam = lambda_of_psi(lambda s: 0.7, th)
    assert np.allclose(lam, 1.4)


def test_phi_psi_cosine_closed_form(bp_euclid):
    # psi = cos: on the euclidean circle Phi_psi is the constant (pi/2, 0)
    for th in (0.0, 0.3, 1.7, 4.0):
        v = phi_psi(bp_euclid, np.cos, th)
        assert np.max(np.abs(v - np.array([np.pi / 2, 0.0]))) < 1e-6


def test_phi_psi_derivative_identity(bp_lp4, rng):
    # d/dtheta Phi_psi = (psi(t + pi/2) + psi(t - pi/2)) gamma'(t)
    psi = lambda s: np.cos(s) + 0.4 * np.sin(2.0 * s)
    h = 1e-4
    for th in rng.uniform(0, 2 * np.pi, 6):
        d = (phi_psi(bp_lp4, psi, th + h) - phi_psi(bp_lp4, psi, th - h)) / (2 * h)
        gp = bp_lp4.gamma_prime_at(th)
        lam = lambda_of_psi(psi, th)
        assert np.max(np.abs(d - lam * gp)) < 1e-4
        cross = d[0] * gp[1] - d[1] * gp[0]
        assert abs(cross) < 1e-4


# -- extension -------------------------------------------------------------------------


def test_eta_cutoff_shape():
    r = np.linspace(0, 2.5, 1001)
    v = eta_cutoff(r)
    assert np.all(v >= 0) and np.all(v <= 1)
    assert eta_cutoff(1.0) == 1.0
    assert np.all(v[r <= 0.5] == 0) and np.all(v[r >= 2.0] == 0)
    # C1: derivative matches finite differences
    h = 1e-6
    rr = np.linspace(0.4, 2.1, 57)
    fd = (eta_cutoff(rr + h) - eta_cutoff(rr - h)) / (2 * h)
    assert np.max(np.abs(fd - eta_cutoff_prime(rr))) < 1e-5
    # monotone on each side of 1
    assert np.all(np.diff(v[(r > 0.5) & (r < 1.0)]) >= 0)
    assert np.all(np.diff(v[(r > 1.0) & (r < 2.0)]) <= 0)


def test_extended_eval_on_circle_and_core(bp_lp3, rng):
    e = project_to_admissible(bp_lp3, np.sin(bp_lp3.theta_grid))
    ext = ExtendedEntropy(e)
    # on the circle, eta(1) = 1: Phi_hat = Phi
    th = rng.uniform(0, 2 * np.pi, 8)
    z = bp_lp3.gamma_at(th)
    phi_hat, _ = ext.eval(z)
    assert np.max(np.abs(phi_hat - e.phi_at(th))) < 1e-9
    # both vanish inside the core and outside radius 2
    for scale in (0.3, 2.5):
        ph, ps = ext.eval(scale * z)
        assert np.max(np.abs(ph)) == 0.0
        assert np.max(np.abs(ps)) == 0.0


def test_extended_eval_formula(bp_euclid):
    # euclidean circle: closed-form check of Psi at r = 1.3
    e = project_to_admissible(bp_euclid, np.ones(1024))
    ext = ExtendedEntropy(e)
    r, th = 1.3, 0.9
    z = r * np.array([np.cos(th), np.sin(th)])
    phi_hat, psi = ext.eval(z)
    phi = e.phi_at(th)
    gam = bp_euclid.gamma_at(th)
    assert np.max(np.abs(phi_hat - eta_cutoff(r) * phi)) < 1e-9
    expect = (eta_cutoff(r) * e.lambda_at(th) / r ** 2) * gam \
        - (eta_cutoff_prime(r) / r) * phi
    assert np.max(np.abs(psi - expect)) < 1e-9


def test_extension_requires_admissible(bp_euclid):
    e = make_entropy(bp_euclid, bp_euclid.gamma_prime_samples[:, 1].copy())
    with pytest.raises(NotAdmissibleError):
        ExtendedEntropy(e)


# -- export ------------------------------------------------------------------------------


def test_entropy_csv(bp_euclid):
    e = project_to_admissible(bp_euclid, np.ones(1024))
    buf = io.StringIO()
    entropy_to_csv(e, buf)
    lines = buf.getvalue().splitlines()
    assert lines[1] == "theta,lambda,phix,phiy"
    assert len(lines) == 2 + 1024
