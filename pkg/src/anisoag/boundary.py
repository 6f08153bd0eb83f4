"""Arc-length geometry of the unit circle of a strictly convex planar norm.

The input norm is rescaled so its unit circle has perimeter exactly 2*pi;
`kappa = 2*pi / L` is the geometric scale factor (the rescaled circle is
kappa times the original one, and the rescaled norm is value(.)/kappa).

The circle is traced in polar form rho(phi) = 1/||e^{i phi}||, the
cumulative arc length is inverted by integrating d(phi)/d(s) = 1/speed(phi)
with an adaptive RK45 scheme, and the samples are laid down uniformly in
arc length theta. Stored per sample:

  gamma(theta)        boundary point (counterclockwise, gamma(0) on the +x axis)
  gamma'(theta)       exact unit tangent (analytic, not differenced)
  alpha(theta)        unwrapped tangent angle, gamma' = e^{i alpha}
  alpha'(theta)       curvature density of D(alpha), by centered differences

Interpolation is periodic cubic in gamma and gamma', monotone piecewise
linear in alpha. alpha is anchored with alpha(0) in (0, pi), which is
automatic since gamma'(0) has positive second component.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .norms import NormSpec

__all__ = ["BoundaryParam", "BoundaryTracingError", "trace_boundary", "PowerTypeFit"]

_QUAD_SPLITS = 8  # integrate speed on [0, 2pi] split at multiples of pi/4 (lp kinks)


class BoundaryTracingError(RuntimeError):
    """Boundary tracing failed (degenerate or non-convex input)."""


def _rho_and_speed(norm: NormSpec):
    """Polar radius rho(phi), its derivative, and the arc-length speed."""

    def rho(phi):
        phi = np.asarray(phi, dtype=float)
        e = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return 1.0 / norm.value(e)

    def rho_prime(phi):
        phi = np.asarray(phi, dtype=float)
        e = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        ie = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
        v = norm.value(e)
        dv = np.sum(norm.gradient(e) * ie, axis=-1)
        return -dv / v ** 2

    def speed(phi):
        return np.hypot(rho(phi), rho_prime(phi))

    return rho, rho_prime, speed


@dataclass
class BoundaryParam:
    """Sampled arc-length parametrization of the rescaled unit circle."""

    norm: NormSpec
    resolution: int
    kappa: float
    perimeter: float                 # perimeter of the original (unrescaled) circle
    theta_grid: np.ndarray           # (N,) uniform in [0, 2pi)
    gamma_samples: np.ndarray        # (N, 2)
    gamma_prime_samples: np.ndarray  # (N, 2), exact unit tangents
    alpha_samples: np.ndarray        # (N,), unwrapped, alpha[0] in (0, pi)
    alpha_prime_samples: np.ndarray  # (N,), nonnegative
    phi_samples: np.ndarray          # (N,) polar angles of the samples
    alpha0: float                    # inradius of the rescaled circle
    flatness: float                  # min finite-difference alpha' (diagnostic)
    convexity_warning: bool          # flat alpha interval detected

    _gamma_spline: CubicSpline = field(repr=False, default=None)
    _tangent_spline: CubicSpline = field(repr=False, default=None)

    # -- basic tables ----------------------------------------------------

    def __post_init__(self):
        for a in (self.theta_grid, self.gamma_samples, self.gamma_prime_samples,
                  self.alpha_samples, self.alpha_prime_samples, self.phi_samples):
            a.setflags(write=False)
        th = np.append(self.theta_grid, 2.0 * np.pi)
        g = np.vstack([self.gamma_samples, self.gamma_samples[:1]])
        t = np.vstack([self.gamma_prime_samples, self.gamma_prime_samples[:1]])
        self._gamma_spline = CubicSpline(th, g, bc_type="periodic")
        self._tangent_spline = CubicSpline(th, t, bc_type="periodic")
        self._alpha_table = np.append(self.alpha_samples, self.alpha_samples[0] + 2 * np.pi)
        self._alpha_prime_table = np.append(self.alpha_prime_samples, self.alpha_prime_samples[0])
        self._theta_table = np.append(self.theta_grid, 2.0 * np.pi)
        self._phi_table = np.append(self.phi_samples, 2.0 * np.pi)
        self._pi_tables = None

    @property
    def delta_theta(self) -> float:
        return 2.0 * np.pi / self.resolution

    def resc_value(self, z) -> np.ndarray:
        """Rescaled norm (unit circle has perimeter 2*pi)."""
        return self.norm.value(z) / self.kappa

    def resc_gradient(self, z) -> np.ndarray:
        return self.norm.gradient(z) / self.kappa

    # -- interpolated queries ---------------------------------------------

    def gamma_at(self, theta) -> np.ndarray:
        return self._gamma_spline(np.mod(theta, 2.0 * np.pi))

    def gamma_prime_at(self, theta) -> np.ndarray:
        return self._tangent_spline(np.mod(theta, 2.0 * np.pi))

    def alpha_at(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        k = np.floor(theta / (2.0 * np.pi))
        frac = theta - 2.0 * np.pi * k
        return np.interp(frac, self._theta_table, self._alpha_table) + 2.0 * np.pi * k

    def alpha_prime_at(self, theta) -> np.ndarray:
        frac = np.mod(theta, 2.0 * np.pi)
        return np.interp(frac, self._theta_table, self._alpha_prime_table)

    def query(self, theta: float) -> Tuple[np.ndarray, np.ndarray, float, float]:
        """(gamma, gamma', alpha, alpha') at an arbitrary real theta."""
        return (self.gamma_at(theta), self.gamma_prime_at(theta),
                float(self.alpha_at(theta)), float(self.alpha_prime_at(theta)))

    # -- exact boundary points (no spline error) --------------------------

    def point_at_theta(self, theta) -> np.ndarray:
        """Boundary point at parameter theta, evaluated through the exact
        polar map (machine accurate on the circle; the theta label itself
        carries the interpolation error of the phi(theta) table)."""
        theta = np.asarray(theta, dtype=float)
        frac = np.mod(theta, 2.0 * np.pi)
        phi = np.interp(frac, self._theta_table, self._phi_table)
        rho, _, _ = _rho_and_speed(self.norm)
        r = self.kappa * rho(phi)
        return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)

    # -- inverse parametrization ------------------------------------------

    def theta_of_point(self, z, tol: float = 1e-6) -> float:
        """Parameter theta in [0, 2pi) with gamma(theta) = z, for z on the circle."""
        z = np.asarray(z, dtype=float)
        r = float(self.resc_value(z))
        if abs(r - 1.0) > tol:
            raise ValueError(f"point is not on the rescaled unit circle: ||z||={r:.8f}")
        phi = np.arctan2(z[1], z[0]) % (2.0 * np.pi)
        theta = float(np.interp(phi, self._phi_table, self._theta_table))
        # Newton polish on the tangential projection (gamma(t) - z) . gamma'(t)
        for _ in range(8):
            g = self._gamma_spline(theta % (2.0 * np.pi))
            gp = self._tangent_spline(theta % (2.0 * np.pi))
            f = float((g - z) @ gp)
            theta -= f
            if abs(f) < 1e-13:
                break
        return theta % (2.0 * np.pi)

    def theta_of_points(self, Z) -> np.ndarray:
        """Vectorized inverse parametrization for points (assumed) on the circle.

        Two Newton polish passes on the tangential projection; no tolerance
        gate, callers are responsible for near-unit input.
        """
        Z = np.asarray(Z, dtype=float)
        phi = np.arctan2(Z[..., 1], Z[..., 0]) % (2.0 * np.pi)
        theta = np.interp(phi, self._phi_table, self._theta_table)
        for _ in range(2):
            tm = theta % (2.0 * np.pi)
            g = self._gamma_spline(tm)
            gp = self._tangent_spline(tm)
            theta = theta - np.sum((g - Z) * gp, axis=-1)
        return theta % (2.0 * np.pi)

    # -- support function / dual norm / vortex ----------------------------

    def _argmax_support(self, w: np.ndarray) -> float:
        vals = self.gamma_samples @ w
        j = int(np.argmax(vals))
        th = self.theta_grid
        lo = th[j] - self.delta_theta
        hi = th[j] + self.delta_theta

        def dsup(t):
            return float(w @ self._tangent_spline(t % (2.0 * np.pi)))

        flo, fhi = dsup(lo), dsup(hi)
        if flo > 0 > fhi:
            return brentq(dsup, lo, hi, xtol=1e-14)
        return th[j]  # flat bracket, sample already optimal to grid accuracy

    def dual_norm(self, w) -> float:
        """Dual norm of the rescaled norm: max_theta w . gamma(theta)."""
        w = np.asarray(w, dtype=float)
        if np.hypot(w[0], w[1]) == 0.0:
            return 0.0
        ts = self._argmax_support(w)
        return float(w @ self.gamma_at(ts))

    def dual_norm_many(self, W, block: int = 16384) -> np.ndarray:
        """Vectorized dual norm with parabolic refinement of the sample max.
        Processed in blocks to bound the (points x samples) workspace."""
        W = np.asarray(W, dtype=float)
        flat = W.reshape(-1, 2)
        out = np.empty(flat.shape[0])
        for s in range(0, flat.shape[0], block):
            Wb = flat[s:s + block]
            vals = Wb @ self.gamma_samples.T     # (b, N)
            j = np.argmax(vals, axis=-1)
            rows = np.arange(len(j))
            f0 = vals[rows, j]
            fm = vals[rows, (j - 1) % self.resolution]
            fp = vals[rows, (j + 1) % self.resolution]
            den = 2.0 * f0 - fm - fp
            corr = np.where(den > 0.0,
                            (fp - fm) ** 2 / (8.0 * np.maximum(den, 1e-300)), 0.0)
            out[s:s + block] = f0 + corr
        out = np.where(np.hypot(flat[:, 0], flat[:, 1]) == 0.0, 0.0, out)
        return out.reshape(W.shape[:-1])

    def vortex(self, x) -> np.ndarray:
        """V_B(x): the boundary point maximizing x . gamma (support gradient)."""
        x = np.asarray(x, dtype=float)
        if np.hypot(x[0], x[1]) == 0.0:
            raise ValueError("vortex is undefined at x = 0")
        ts = self._argmax_support(x)
        return np.asarray(self.gamma_at(ts), dtype=float)

    def vortex_many(self, X) -> np.ndarray:
        """Vectorized vortex map (parabolic theta refinement on the sample max)."""
        X = np.asarray(X, dtype=float)
        vals = X @ self.gamma_samples.T
        j = np.argmax(vals, axis=-1)
        f0 = np.take_along_axis(vals, j[..., None], axis=-1)[..., 0]
        fm = np.take_along_axis(vals, ((j - 1) % self.resolution)[..., None], axis=-1)[..., 0]
        fp = np.take_along_axis(vals, ((j + 1) % self.resolution)[..., None], axis=-1)[..., 0]
        den = fm - 2.0 * f0 + fp
        shift = np.where(den < 0.0, 0.5 * (fm - fp) / np.where(den < 0, den, -1e300), 0.0)
        ts = self.theta_grid[j] + shift * self.delta_theta
        return self.gamma_at(ts)

    # -- polar map ---------------------------------------------------------

    def polar(self, z) -> np.ndarray:
        """X(r e^{i theta}) = r gamma(theta); X(0) = 0."""
        z = np.asarray(z, dtype=float)
        r = np.hypot(z[..., 0], z[..., 1])
        theta = np.arctan2(z[..., 1], z[..., 0]) % (2.0 * np.pi)
        out = r[..., None] * self.gamma_at(theta)
        return np.where(r[..., None] == 0.0, 0.0, out)

    def polar_inverse(self, w) -> np.ndarray:
        """Inverse of the polar map: r gamma(theta) -> r e^{i theta}."""
        w = np.asarray(w, dtype=float)
        if w.ndim == 1:
            r = float(self.resc_value(w))
            if r == 0.0:
                return np.zeros(2)
            t = self.theta_of_point(w / r, tol=1e-3)
            return r * np.array([np.cos(t), np.sin(t)])
        return np.stack([self.polar_inverse(wi) for wi in w])

    # -- power-type convexity estimate --------------------------------------

    def power_type_estimate(self, sample_count: int = 256,
                            dyadic_range: Tuple[int, int] = (3, 9)) -> "PowerTypeFit":
        """Least-squares exponent of 1 - ||(x+y)/2|| against ||x-y||.

        Boundary pairs at dyadic theta separations; the per-separation minimum
        of 1 - ||mid|| traces the lower convexity envelope, whose log-log slope
        is the power type p with 1 - ||(x+y)/2|| >= K ||x-y||^p.
        """
        if sample_count < 100:
            raise ValueError("sample_count must be >= 100")
        centers = np.linspace(0.0, 2.0 * np.pi, sample_count, endpoint=False)
        us, vs = [], []
        for k in range(dyadic_range[0], dyadic_range[1] + 1):
            sep = 2.0 ** (-k)
            x = self.point_at_theta(centers - sep / 2.0)
            y = self.point_at_theta(centers + sep / 2.0)
            v = 1.0 - self.resc_value((x + y) / 2.0)
            u = self.resc_value(x - y)
            good = v > 0
            if not np.any(good):
                continue
            i = np.argmin(np.where(good, v, np.inf))
            us.append(u[i])
            vs.append(v[i])
        lu, lv = np.log(np.asarray(us)), np.log(np.asarray(vs))
        p_hat, logK = np.polyfit(lu, lv, 1)
        return PowerTypeFit(p_hat=float(p_hat), K=float(np.exp(logK)),
                            separations=np.exp(lu), envelope=np.exp(lv))

    # -- export --------------------------------------------------------------

    def to_csv(self, path_or_buf, header_extra: str = "") -> None:
        """CSV table: theta, gx, gy, gpx, gpy, alpha, alpha_prime."""
        buf = io.StringIO()
        buf.write(f"# norm={self.norm.name} kappa={self.kappa:.17g} "
                  f"resolution={self.resolution}\n")
        if header_extra:
            buf.write(f"# {header_extra}\n")
        buf.write("theta,gx,gy,gpx,gpy,alpha,alpha_prime\n")
        for j in range(self.resolution):
            g = self.gamma_samples[j]
            t = self.gamma_prime_samples[j]
            buf.write(f"{self.theta_grid[j]:.17g},{g[0]:.17g},{g[1]:.17g},"
                      f"{t[0]:.17g},{t[1]:.17g},{self.alpha_samples[j]:.17g},"
                      f"{self.alpha_prime_samples[j]:.17g}\n")
        data = buf.getvalue()
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(data)
        else:
            with open(path_or_buf, "w") as f:
                f.write(data)


@dataclass
class PowerTypeFit:
    p_hat: float
    K: float
    separations: np.ndarray
    envelope: np.ndarray


def trace_boundary(norm: NormSpec, resolution: int = 1024,
                   flat_tol: float = 1e-8) -> BoundaryParam:
    """Trace the unit circle of `norm`, rescale to perimeter 2*pi, and sample
    uniformly in arc length.

    Raises BoundaryTracingError for degenerate or non-convex inputs; a
    detected flat alpha interval only sets `convexity_warning` on the result.
    """
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    if resolution % 2:
        raise ValueError("resolution must be even")
    rho, rho_prime, speed = _rho_and_speed(norm)

    probe = rho(np.linspace(0, 2 * np.pi, 64, endpoint=False))
    if not np.all(np.isfinite(probe)) or np.any(probe <= 0):
        raise BoundaryTracingError("norm is degenerate along some direction")

    # perimeter of the original circle by adaptive quadrature, split at the
    # axes and diagonals where lp-type speeds lose smoothness
    splits = np.linspace(0.0, 2.0 * np.pi, _QUAD_SPLITS + 1)
    L = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for a, b in zip(splits[:-1], splits[1:]):
            val, err = quad(lambda t: float(speed(t)), a, b,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
            if not np.isfinite(val) or err > 1e-8:
                raise BoundaryTracingError("arc-length quadrature did not converge")
            L += val
    kappa = 2.0 * np.pi / L

    # invert the cumulative arc length on half the circle only,
    # d(phi)/d(s) = 1/speed(phi); the second half is the central mirror
    # gamma(theta + pi) = -gamma(theta), which makes the symmetry invariants
    # structurally exact at the samples
    N = resolution
    s_half = np.arange(N // 2) * (L / N)
    sol = solve_ivp(lambda s, phi: 1.0 / speed(phi[0]), (0.0, L / 2.0), [0.0],
                    t_eval=s_half, rtol=1e-11, atol=1e-12, method="RK45",
                    max_step=L / 64.0, dense_output=False)
    if not sol.success:
        raise BoundaryTracingError(f"arc-length inversion failed: {sol.message}")
    phi_half = sol.y[0]
    phi = np.concatenate([phi_half, phi_half + np.pi])
    if np.any(np.diff(phi) <= 0):
        raise BoundaryTracingError("polar angle not monotone along the trace")

    r = rho(phi_half)
    rp = rho_prime(phi_half)
    e = np.stack([np.cos(phi_half), np.sin(phi_half)], axis=-1)
    ie = np.stack([-np.sin(phi_half), np.cos(phi_half)], axis=-1)
    gamma_half = kappa * r[:, None] * e
    tangent_half = rp[:, None] * e + r[:, None] * ie
    tangent_half /= np.hypot(tangent_half[:, 0], tangent_half[:, 1])[:, None]
    gamma = np.vstack([gamma_half, -gamma_half])
    tangent = np.vstack([tangent_half, -tangent_half])

    alpha_half = np.unwrap(np.arctan2(tangent_half[:, 1], tangent_half[:, 0]))
    alpha = np.concatenate([alpha_half, alpha_half + np.pi])
    d_alpha = np.diff(np.append(alpha, alpha[0] + 2.0 * np.pi))
    if np.any(d_alpha < -1e-9):
        raise BoundaryTracingError("tangent angle decreases: input is not convex")

    dtheta = 2.0 * np.pi / N
    alpha_ext = np.concatenate([[alpha[-1] - 2.0 * np.pi], alpha, [alpha[0] + 2.0 * np.pi]])
    alpha_prime = (alpha_ext[2:] - alpha_ext[:-2]) / (2.0 * dtheta)
    alpha_prime = np.maximum(alpha_prime, 0.0)

    flatness = float(np.min(alpha_prime))
    warning = bool(np.min(d_alpha) < flat_tol * dtheta)

    # inradius of the rescaled circle = kappa * min rho (centered symmetric body)
    fine = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    alpha0 = float(kappa * np.min(rho(fine)))

    return BoundaryParam(
        norm=norm, resolution=N, kappa=float(kappa), perimeter=float(L),
        theta_grid=np.arange(N) * dtheta, gamma_samples=gamma,
        gamma_prime_samples=tangent, alpha_samples=alpha,
        alpha_prime_samples=alpha_prime, phi_samples=phi,
        alpha0=alpha0, flatness=flatness, convexity_warning=warning,
    )
