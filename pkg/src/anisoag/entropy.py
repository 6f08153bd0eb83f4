"""Entropies for the generalized Eikonal equation ||m|| = 1, div m = 0.

An entropy is a map Phi on the (rescaled) unit circle whose tangential
derivative is d/dtheta Phi(gamma(theta)) = lambda(theta) gamma'(theta).
It is represented by the coefficient lambda sampled on the uniform theta
grid, plus the accumulated boundary values

    Phi(gamma(theta)) = Phi(gamma(0)) + int_0^theta lambda gamma' dt,

anchored at Phi(gamma(0)) = 0. Admissibility (periodicity of Phi) is the
moment condition int lambda gamma' dtheta = 0; `project_to_admissible`
enforces it by removing the unique component c1 gamma'_1 + c2 gamma'_2,
solving the 2x2 Gram system of gamma'_1, gamma'_2 (invertible because the
tangent direction of a convex curve spans the plane).

Generalized entropies: `heaviside_entropy` builds the mollified indicator
family whose delta -> 0 limit is Phi^xi(z) = 1_{z . i xi > 0} gamma'(theta0)
up to the anchoring constant; the projection correction mu_delta has
L1 norm -> 0.

The radial extension Phi_hat(r gamma(theta)) = eta(r) Phi(gamma(theta)),
with a fixed C1 bump eta supported in (1/2, 2), eta(1) = 1, turns boundary
entropies into plane fields. Its divergence along any divergence-free m is

    div Phi_hat(m) = 1/2 Psi(m) . grad(1 - ||m||^2),
    Psi(r gamma(theta)) = eta(r) lambda(theta) / r^2 gamma(theta)
                          - eta'(r) / r Phi(gamma(theta)).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.integrate import quad

from .boundary import BoundaryParam

__all__ = [
    "EntropyFn", "ExtendedEntropy", "NotAdmissibleError",
    "project_to_admissible", "make_entropy", "heaviside_entropy",
    "heaviside_limit_difference", "phi_psi", "lambda_of_psi",
    "eta_cutoff", "eta_cutoff_prime", "entropy_to_csv",
]


class NotAdmissibleError(ValueError):
    """Operation requires an admissible (periodic) entropy."""


# -- fixed radial cutoff -----------------------------------------------------

def eta_cutoff(r):
    """C1 piecewise-cubic bump: 0 outside (1/2, 2), eta(1) = 1, eta'(1) = 0,
    monotone on each side (smoothstep up on (1/2,1), down on (1,2))."""
    r = np.asarray(r, dtype=float)
    up = np.clip((r - 0.5) / 0.5, 0.0, 1.0)
    down = np.clip(r - 1.0, 0.0, 1.0)
    rise = up * up * (3.0 - 2.0 * up)
    fall = 1.0 - down * down * (3.0 - 2.0 * down)
    return np.where(r <= 1.0, rise, fall) * (r < 2.0) * (r > 0.5)


def eta_cutoff_prime(r):
    r = np.asarray(r, dtype=float)
    up = (r - 0.5) / 0.5
    dup = np.where((up > 0) & (up < 1), 6.0 * up * (1.0 - up) / 0.5, 0.0)
    down = r - 1.0
    ddown = np.where((down > 0) & (down < 1), -6.0 * down * (1.0 - down), 0.0)
    return np.where(r <= 1.0, dup, ddown)


# -- the smooth compactly supported kernel for heaviside_entropy -------------

_RHO_NORM: Optional[float] = None


def _rho_raw(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tt = np.where(inside, t, 0.5)
    return np.where(inside, np.exp(-1.0 / (tt * (1.0 - tt))), 0.0)


def _rho_bump(t):
    """Standard exponential bump on (0, 1), unit integral."""
    global _RHO_NORM
    if _RHO_NORM is None:
        _RHO_NORM = quad(_rho_raw, 0.0, 1.0, epsabs=1e-14, epsrel=1e-14)[0]
    return _rho_raw(t) / _RHO_NORM


@dataclass
class EntropyFn:
    """An element of the entropy class, sampled on the boundary grid."""

    bp: BoundaryParam
    lambda_samples: np.ndarray       # (N,)
    phi_samples: np.ndarray          # (N+1, 2), cumulative, phi[0] = 0
    admissible: bool
    lip_bound: float                 # finite-difference ||lambda'||_inf
    mu_l1: float = 0.0               # L1 norm of the projection correction
    correction: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.lambda_samples.setflags(write=False)
        self.phi_samples.setflags(write=False)
        N = self.bp.resolution
        self._theta_nodes = np.append(self.bp.theta_grid, 2.0 * np.pi)
        self._lambda_table = np.append(self.lambda_samples, self.lambda_samples[0])

    def lambda_at(self, theta) -> np.ndarray:
        frac = np.mod(theta, 2.0 * np.pi)
        return np.interp(frac, self._theta_nodes, self._lambda_table)

    def phi_at(self, theta) -> np.ndarray:
        """Accumulated boundary values Phi(gamma(theta)), 2pi-periodic."""
        if not self.admissible:
            raise NotAdmissibleError(
                "Phi is not periodic: project_to_admissible first")
        frac = np.mod(theta, 2.0 * np.pi)
        px = np.interp(frac, self._theta_nodes, self.phi_samples[:, 0])
        py = np.interp(frac, self._theta_nodes, self.phi_samples[:, 1])
        return np.stack([px, py], axis=-1)


def _mid_tangents(bp: BoundaryParam) -> np.ndarray:
    cached = getattr(bp, "_mid_tangents", None)
    if cached is None:
        cached = np.asarray(
            bp.gamma_prime_at(bp.theta_grid + bp.delta_theta / 2.0), dtype=float)
        bp._mid_tangents = cached
    return cached


def _lambda_mid(lam: np.ndarray) -> np.ndarray:
    return 0.5 * (lam + np.roll(lam, -1))


def _moment(bp: BoundaryParam, lam: np.ndarray) -> np.ndarray:
    """Midpoint-rule moment int lambda gamma' dtheta (consistent with the
    accumulation rule, so projected entropies close up exactly)."""
    return bp.delta_theta * (_lambda_mid(lam) @ _mid_tangents(bp))


def _accumulate_phi(bp: BoundaryParam, lam: np.ndarray) -> np.ndarray:
    """Cumulative midpoint rule for int lambda gamma': each increment is
    exactly parallel to the midpoint tangent (the defining tangency of the
    entropy class holds identically at the sample midpoints)."""
    incr = bp.delta_theta * _lambda_mid(lam)[:, None] * _mid_tangents(bp)
    return np.vstack([np.zeros((1, 2)), np.cumsum(incr, axis=0)])


def _lip_bound(bp: BoundaryParam, lam: np.ndarray) -> float:
    d = np.diff(np.append(lam, lam[0]))
    return float(np.max(np.abs(d)) / bp.delta_theta)


def make_entropy(bp: BoundaryParam, lambda_samples, tol: float = 1e-10) -> EntropyFn:
    """Wrap sampled lambda as an EntropyFn, checking admissibility."""
    lam = np.asarray(lambda_samples, dtype=float).copy()
    if lam.shape != (bp.resolution,):
        raise ValueError("lambda_samples must live on the boundary grid")
    moment = _moment(bp, lam)
    admissible = bool(np.hypot(*moment) < tol)
    return EntropyFn(bp=bp, lambda_samples=lam, phi_samples=_accumulate_phi(bp, lam),
                     admissible=admissible, lip_bound=_lip_bound(bp, lam))


def project_to_admissible(bp: BoundaryParam, lambda_samples) -> EntropyFn:
    """Remove the unique c1 gamma'_1 + c2 gamma'_2 component so that the
    moment int lambda gamma' dtheta vanishes, and accumulate Phi."""
    lam = np.asarray(lambda_samples, dtype=float).copy()
    if lam.shape != (bp.resolution,):
        raise ValueError("lambda_samples must live on the boundary grid")
    gp = bp.gamma_prime_samples
    dth = bp.delta_theta
    v = _moment(bp, lam)
    G = np.column_stack([_moment(bp, gp[:, 0]), _moment(bp, gp[:, 1])])
    if abs(np.linalg.det(G)) < 1e-12:
        raise RuntimeError("singular Gram system: invalid boundary data")
    c = np.linalg.solve(G, v)
    mu = gp @ c
    lam_adm = lam - mu
    return EntropyFn(
        bp=bp, lambda_samples=lam_adm, phi_samples=_accumulate_phi(bp, lam_adm),
        admissible=True, lip_bound=_lip_bound(bp, lam_adm),
        mu_l1=float(dth * np.sum(np.abs(mu))), correction=mu,
    )


def heaviside_entropy(bp: BoundaryParam, xi, delta: float) -> EntropyFn:
    """Mollified indicator entropy concentrated at theta0 and theta0 + pi.

    lambda_hat(theta) = rho_delta(theta - theta0) + rho_delta(pi + theta0 - theta)
    with the unit-mass exponential bump rho supported in (0, 1), followed by
    the admissibility projection (whose correction mu_delta vanishes in L1
    as delta -> 0). As delta -> 0 the accumulated Phi converges pointwise to
    the indicator entropy 1_{z . i xi > 0} gamma'(theta0), up to the anchor.
    """
    if not (0.0 < delta < np.pi / 4):
        raise ValueError(f"delta must lie in (0, pi/4), got {delta}")
    if np.isscalar(xi) or np.asarray(xi).ndim == 0:
        theta0 = float(xi) % (2.0 * np.pi)
    else:
        theta0 = bp.theta_of_point(np.asarray(xi, dtype=float))
    u = np.mod(bp.theta_grid - theta0, 2.0 * np.pi)
    lam_hat = (_rho_bump(u / delta) + _rho_bump((np.pi - u) / delta)) / delta
    ent = project_to_admissible(bp, lam_hat)
    ent.theta0 = theta0
    ent.delta = delta
    return ent


def heaviside_limit_difference(bp: BoundaryParam, theta0: float,
                               theta_a, theta_b) -> np.ndarray:
    """Phi^xi(gamma(theta_a)) - Phi^xi(gamma(theta_b)) for the limiting
    indicator entropy (anchor-free comparison quantity)."""
    gp0 = bp.gamma_prime_at(theta0)

    def ind(t):
        return (np.mod(np.asarray(t) - theta0, 2.0 * np.pi) < np.pi).astype(float)

    d = ind(theta_a) - ind(theta_b)
    return np.asarray(d)[..., None] * gp0


def lambda_of_psi(psi: Callable, theta) -> np.ndarray:
    """The colinearity coefficient of Phi_psi: psi(t + pi/2) + psi(t - pi/2)."""
    theta = np.asarray(theta, dtype=float)
    return np.asarray(psi(theta + np.pi / 2)) + np.asarray(psi(theta - np.pi / 2))


def phi_psi(bp: BoundaryParam, psi: Callable, theta: float) -> np.ndarray:
    """Half-circle entropy for the circle form of the equation:

        Phi_psi(e^{i theta}) = int 1_{e^{i theta} . e^{i s} > 0}
                               psi(s) gamma'(s - pi/2) ds,

    i.e. the integral over s in (theta - pi/2, theta + pi/2).
    """
    lo = theta - np.pi / 2
    hi = theta + np.pi / 2

    def comp(k):
        return quad(lambda s: float(psi(s)) * float(bp.gamma_prime_at(s - np.pi / 2)[k]),
                    lo, hi, epsabs=1e-11, epsrel=1e-11, limit=200)[0]

    return np.array([comp(0), comp(1)])


@dataclass
class ExtendedEntropy:
    """Plane extension Phi_hat = eta(r) Phi with its production coefficient Psi."""

    entropy: EntropyFn

    def __post_init__(self):
        if not self.entropy.admissible:
            raise NotAdmissibleError("extension requires an admissible entropy")
        self.bp = self.entropy.bp

    def eval(self, z) -> Tuple[np.ndarray, np.ndarray]:
        """(Phi_hat(z), Psi(z)), vectorized over (..., 2); both vanish for
        ||z|| <= 1/2 and ||z|| >= 2."""
        z = np.asarray(z, dtype=float)
        r = self.bp.resc_value(z)
        active = (r > 0.5) & (r < 2.0)
        rs = np.where(active, r, 1.0)
        zs = np.where(active[..., None], z, 0.0) / rs[..., None]
        # off-support directions are irrelevant; give them a valid placeholder
        zs = np.where(active[..., None], zs, self.bp.gamma_samples[0])
        theta = self.bp.theta_of_points(zs)
        phi = self.entropy.phi_at(theta)
        lam = self.entropy.lambda_at(theta)
        gam = self.bp.gamma_at(theta)
        e = eta_cutoff(rs)
        ep = eta_cutoff_prime(rs)
        phi_hat = e[..., None] * phi
        psi = (e * lam / rs ** 2)[..., None] * gam - (ep / rs)[..., None] * phi
        phi_hat = np.where(active[..., None], phi_hat, 0.0)
        psi = np.where(active[..., None], psi, 0.0)
        return phi_hat, psi


def entropy_to_csv(e: EntropyFn, path_or_buf, header_extra: str = "") -> None:
    """CSV table: theta, lambda, phix, phiy."""
    bp = e.bp
    buf = io.StringIO()
    buf.write(f"# norm={bp.norm.name} kappa={bp.kappa:.17g} admissible={e.admissible}\n")
    if header_extra:
        buf.write(f"# {header_extra}\n")
    buf.write("theta,lambda,phix,phiy\n")
    for j in range(bp.resolution):
        buf.write(f"{bp.theta_grid[j]:.17g},{e.lambda_samples[j]:.17g},"
                  f"{e.phi_samples[j, 0]:.17g},{e.phi_samples[j, 1]:.17g}\n")
    data = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(data)
    else:
        with open(path_or_buf, "w") as f:
            f.write(data)
