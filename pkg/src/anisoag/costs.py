"""Jump costs and regularity functionals on the rescaled unit circle.

For a jump between boundary states z+ and z- with normal
nu = i (z+ - z-) / |z+ - z-| and offset a = z+ . nu = z- . nu:

  c1d   one-dimensional transition cost
        2 | int_{z- . i nu}^{z+ . i nu} (1 - ||a nu + s i nu||^2) ds |

  cent  supremal entropy-production cost over the unit-Lipschitz admissible
        class: sup { int_{theta-}^{theta+} lambda gamma' . nu dt :
        lambda C1, ||lambda'||_inf <= 1, int lambda gamma' = 0 }.
        For geodesic gaps < pi/2 it has the explicit form
        | int (theta - theta_tilde) (gamma'(theta) . nu) dtheta |
        with theta_tilde the unique interior root of gamma' . nu;
        in general it is computed by a discretized linear program.

  pi    the anisotropy metric int int_{[t1,t2]^2} |alpha(t) - alpha(s)| dt ds
        (|t2 - t1| <= pi), computed through the exact monotone reduction
        2 int alpha(u) (2u - t1 - t2) du and cross-checked against the
        Dalpha form 2 int (tau - t1)(t2 - tau) alpha'(tau) dtau.

Scaling: if the traced circle is rescaled by kappa (perimeter 2 pi), the
costs of the original norm transform as c1d -> kappa c1d_orig,
cent -> kappa^2 cent_orig, pi -> kappa^2 pi_orig.

Also here: the step-kernel double integral Delta_phi of the circle
formulation, the modulus-of-continuity functional omega of alpha^{-1},
and the bound-verification report (ratio envelopes of c1d/cent, the
pointwise check cent <= pi, and the small-jump ratio limit compared
against both 4/|i gamma' . gamma| and the literature constant
2/|i gamma' . gamma|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, simpson
from scipy.optimize import brentq, linprog
from scipy.sparse import csr_matrix

from .boundary import BoundaryParam

__all__ = [
    "JumpPair", "CostReport", "NumericalError", "make_jump", "make_jump_theta",
    "c1d", "cent_explicit", "cent_lp", "cent", "pi_cost", "pi_cost_report",
    "pi_many", "pi_tensor", "delta_phi", "omega_modulus", "omega_inverse_fn",
    "check_eqbes21", "cost_report", "verify_bounds", "scan_pairs",
]

_ANTIPODAL_TOL = 1e-9


class NumericalError(RuntimeError):
    """A numerical routine failed to converge."""


def _rot90(v: np.ndarray) -> np.ndarray:
    """Counterclockwise rotation by pi/2 (multiplication by i)."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


@dataclass(frozen=True)
class JumpPair:
    """A jump between two boundary states, with derived geometry.

    theta_minus < theta_plus are the ordered interval endpoints with
    theta_plus - theta_minus the geodesic distance on the circle; they need
    not track the z+/z- labels (all costs are swap-symmetric).
    """

    z_plus: np.ndarray
    z_minus: np.ndarray
    theta_minus: float
    theta_plus: float
    nu: np.ndarray
    a: float
    theta_tilde: Optional[float]
    antipodal: bool

    @property
    def width(self) -> float:
        return self.theta_plus - self.theta_minus

    @property
    def chord(self) -> float:
        d = self.z_plus - self.z_minus
        return float(np.hypot(d[0], d[1]))


def _find_theta_tilde(bp: BoundaryParam, lo: float, hi: float,
                      nu: np.ndarray) -> float:
    def g(t):
        return float(bp.gamma_prime_at(t) @ nu)

    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi < 0.0:
        return brentq(g, lo, hi, xtol=1e-13)
    # endpoints share a sign: locate the sign change on a scan grid
    ts = np.linspace(lo, hi, 257)
    gs = np.array([g(t) for t in ts])
    idx = np.nonzero(gs[:-1] * gs[1:] < 0.0)[0]
    if len(idx) == 0:
        raise NumericalError("gamma' . nu has no sign change on the jump interval")
    return brentq(g, ts[idx[0]], ts[idx[0] + 1], xtol=1e-13)


def _build_jump(bp: BoundaryParam, z_p: np.ndarray, z_m: np.ndarray,
                t_p: float, t_m: float) -> JumpPair:
    d = z_p - z_m
    dn = float(np.hypot(d[0], d[1]))
    if dn < 1e-12:
        raise ValueError("jump endpoints coincide")
    gap = (t_p - t_m) % (2.0 * np.pi)
    if gap <= np.pi:
        lo = t_m % (2.0 * np.pi)
    else:
        gap = 2.0 * np.pi - gap
        lo = t_p % (2.0 * np.pi)
    hi = lo + gap
    nu = _rot90(d) / dn
    a = float(z_p @ nu)
    antipodal = abs(gap - np.pi) < _ANTIPODAL_TOL
    theta_tilde = None if antipodal else _find_theta_tilde(bp, lo, hi, nu)
    return JumpPair(z_plus=z_p, z_minus=z_m, theta_minus=lo, theta_plus=hi,
                    nu=nu, a=a, theta_tilde=theta_tilde, antipodal=antipodal)


def make_jump_theta(bp: BoundaryParam, theta_1: float, theta_2: float) -> JumpPair:
    """JumpPair from two boundary parameters (z+ = gamma(theta_2))."""
    z_p = np.asarray(bp.gamma_at(theta_2), dtype=float)
    z_m = np.asarray(bp.gamma_at(theta_1), dtype=float)
    return _build_jump(bp, z_p, z_m, theta_2, theta_1)


def make_jump(bp: BoundaryParam, z_plus, z_minus) -> JumpPair:
    """JumpPair from two points on the rescaled unit circle."""
    z_p = np.asarray(z_plus, dtype=float)
    z_m = np.asarray(z_minus, dtype=float)
    if np.hypot(*(z_p - z_m)) < 1e-12:
        raise ValueError("jump endpoints coincide")
    return _build_jump(bp, z_p, z_m, bp.theta_of_point(z_p), bp.theta_of_point(z_m))


# -- c1d ----------------------------------------------------------------------


def c1d(bp: BoundaryParam, jp: JumpPair) -> float:
    """Adaptive quadrature of eq. cost: 2 |int (1 - ||a nu + s i nu||^2) ds|."""
    inu = _rot90(jp.nu)
    s0 = float(jp.z_plus @ inu)
    s1 = float(jp.z_minus @ inu)
    if s0 == s1:
        return 0.0

    def f(s):
        return 1.0 - float(bp.resc_value(jp.a * jp.nu + s * inu)) ** 2

    val, _ = quad(f, min(s0, s1), max(s0, s1), epsabs=1e-12, epsrel=1e-12, limit=200)
    return 2.0 * abs(val)


# -- cent ---------------------------------------------------------------------


def cent_explicit(bp: BoundaryParam, jp: JumpPair) -> float:
    """Explicit small-jump form |int (theta - theta_tilde)(gamma' . nu) dtheta|,
    valid for geodesic gaps < pi/2."""
    if jp.width >= np.pi / 2:
        raise ValueError("jump too wide for the explicit form: use cent_lp")
    if jp.theta_tilde is None:
        raise ValueError("jump pair has no theta_tilde")
    tt = jp.theta_tilde
    nu = jp.nu

    def f(t):
        return (t - tt) * float(bp.gamma_prime_at(t) @ nu)

    val, _ = quad(f, jp.theta_minus, jp.theta_plus,
                  epsabs=1e-12, epsrel=1e-12, limit=200)
    return abs(val)


def _window_weights(bp: BoundaryParam, lo: float, hi: float, N: int,
                    nu: np.ndarray) -> np.ndarray:
    """Trapezoid weights w (length N, periodic index) approximating
    int_lo^hi lambda(t) gamma'(t) . nu dt by sum_k w_k lambda_k, with
    linearly interpolated fractional end cells."""
    dth = 2.0 * np.pi / N
    w = np.zeros(N)

    def g(t):
        return np.asarray(bp.gamma_prime_at(t), dtype=float) @ nu

    ks = int(math.ceil(lo / dth - 1e-12))
    ke = int(math.floor(hi / dth + 1e-12))
    if ks > ke:
        # interval interior to one cell
        mid = 0.5 * (lo + hi)
        tau = mid / dth - (ks - 1)
        w[(ks - 1) % N] += (hi - lo) * g(mid) * (1.0 - tau)
        w[ks % N] += (hi - lo) * g(mid) * tau
        return w

    ts = (np.arange(ks, ke + 1) * dth)
    gs = g(ts)
    idx = np.arange(ks, ke + 1) % N
    if ke > ks:
        np.add.at(w, idx, dth * gs)
        np.add.at(w, idx[[0, -1]], -0.5 * dth * gs[[0, -1]])
    # left fragment [lo, ks * dth]
    ell = ks * dth - lo
    if ell > 1e-15:
        tau = lo / dth - (ks - 1)
        glo = float(g(lo))
        w[(ks - 1) % N] += 0.5 * ell * glo * (1.0 - tau)
        w[ks % N] += 0.5 * ell * (glo * tau + gs[0])
    # right fragment [ke * dth, hi]
    ell = hi - ke * dth
    if ell > 1e-15:
        tau = hi / dth - ke
        ghi = float(g(hi))
        w[ke % N] += 0.5 * ell * (gs[-1] + ghi * (1.0 - tau))
        w[(ke + 1) % N] += 0.5 * ell * ghi * tau
    return w


def cent_lp(bp: BoundaryParam, jp: JumpPair, N: int = 512,
            return_lambda: bool = False):
    """Discretized linear program for the entropy jump cost.

    Variables lambda_k on the uniform circle grid; constraints
    |lambda_{k+1} - lambda_k| <= 2 pi / N (the unit-Lipschitz class),
    sum lambda_k gamma'(theta_k) dtheta = 0 (admissibility) plus the
    zero-average gauge; objective: the windowed quadrature of
    lambda gamma' . nu over (theta-, theta+). Converges O(1/N).
    """
    if N < 128:
        raise ValueError("LP grid must have N >= 128")
    dth = 2.0 * np.pi / N
    th = np.arange(N) * dth
    gp = np.asarray(bp.gamma_prime_at(th), dtype=float)

    w = _window_weights(bp, jp.theta_minus, jp.theta_plus, N, jp.nu)

    A_eq = np.vstack([gp[:, 0] * dth, gp[:, 1] * dth, np.ones(N) * dth])
    b_eq = np.zeros(3)

    # first-difference constraints +-(lambda_{k+1} - lambda_k) <= dtheta, cyclic
    k = np.arange(N)
    rows = np.concatenate([2 * k, 2 * k, 2 * k + 1, 2 * k + 1])
    cols = np.concatenate([(k + 1) % N, k, (k + 1) % N, k])
    vals = np.concatenate([np.ones(N), -np.ones(N), -np.ones(N), np.ones(N)])
    A_ub = csr_matrix((vals, (rows, cols)), shape=(2 * N, N))
    b_ub = np.full(2 * N, dth)

    res = linprog(c=-w, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(-4.0 * np.pi, 4.0 * np.pi)] * N, method="highs")
    if res.status != 0:
        raise NumericalError(f"entropy-cost LP failed: status={res.status} "
                             f"({res.message}), nit={getattr(res, 'nit', '?')}")
    val = max(float(-res.fun), 0.0)
    if return_lambda:
        return val, np.asarray(res.x, dtype=float)
    return val


def cent(bp: BoundaryParam, jp: JumpPair, N: int = 512) -> float:
    """Entropy jump cost: explicit form below pi/2, LP otherwise."""
    if jp.width < np.pi / 2 - 1e-12 and jp.theta_tilde is not None:
        return cent_explicit(bp, jp)
    return cent_lp(bp, jp, N=N)


# -- Pi -------------------------------------------------------------------------


class _PiTables:
    """Cumulative tables A0 = int alpha and A1 = int u alpha(u) du on [0, 4 pi],
    exact for the piecewise-linear alpha interpolant."""

    def __init__(self, bp: BoundaryParam):
        N = bp.resolution
        t = np.concatenate([bp.theta_grid, bp.theta_grid + 2.0 * np.pi,
                            [4.0 * np.pi]])
        al = np.concatenate([bp.alpha_samples, bp.alpha_samples + 2.0 * np.pi,
                             [bp.alpha_samples[0] + 4.0 * np.pi]])
        self.t = t
        self.al = al
        dt = np.diff(t)
        self.slope = np.diff(al) / dt
        A0 = np.concatenate([[0.0], np.cumsum(0.5 * dt * (al[:-1] + al[1:]))])
        seg_a1 = (al[:-1] * (t[1:] ** 2 - t[:-1] ** 2) / 2.0
                  + self.slope * ((t[1:] ** 3 - t[:-1] ** 3) / 3.0
                                  - t[:-1] * (t[1:] ** 2 - t[:-1] ** 2) / 2.0))
        A1 = np.concatenate([[0.0], np.cumsum(seg_a1)])
        self.A0_nodes = A0
        self.A1_nodes = A1

    def _locate(self, x):
        j = np.clip(np.searchsorted(self.t, x, side="right") - 1, 0, len(self.t) - 2)
        return j

    def A0(self, x):
        x = np.asarray(x, dtype=float)
        j = self._locate(x)
        tj, aj, m = self.t[j], self.al[j], self.slope[j]
        ax = aj + m * (x - tj)
        return self.A0_nodes[j] + 0.5 * (x - tj) * (aj + ax)

    def A1(self, x):
        x = np.asarray(x, dtype=float)
        j = self._locate(x)
        tj, aj, m = self.t[j], self.al[j], self.slope[j]
        return (self.A1_nodes[j] + aj * (x ** 2 - tj ** 2) / 2.0
                + m * ((x ** 3 - tj ** 3) / 3.0 - tj * (x ** 2 - tj ** 2) / 2.0))


def _pi_tables(bp: BoundaryParam) -> _PiTables:
    if getattr(bp, "_pi_tables", None) is None:
        bp._pi_tables = _PiTables(bp)
    return bp._pi_tables


def _reduce_pair(t1, t2):
    """Geodesic representatives: a in [0, 2 pi), b = a + gap, gap <= pi."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    gap = np.mod(t2 - t1, 2.0 * np.pi)
    flip = gap > np.pi
    gap = np.where(flip, 2.0 * np.pi - gap, gap)
    a = np.where(flip, np.mod(t2, 2.0 * np.pi), np.mod(t1, 2.0 * np.pi))
    return a, a + gap


def pi_many(bp: BoundaryParam, t1, t2) -> np.ndarray:
    """Vectorized Pi(gamma(t1), gamma(t2)) through the monotone reduction
    Pi = 2 int_a^b alpha(u) (2u - a - b) du (alpha increasing)."""
    tab = _pi_tables(bp)
    a, b = _reduce_pair(t1, t2)
    val = 2.0 * (2.0 * (tab.A1(b) - tab.A1(a)) - (a + b) * (tab.A0(b) - tab.A0(a)))
    return np.maximum(val, 0.0)


def pi_cost(bp: BoundaryParam, theta_1: float, theta_2: float) -> float:
    """The double-integral metric for one pair (geodesic reduction applied)."""
    return float(pi_many(bp, theta_1, theta_2))


def pi_cost_report(bp: BoundaryParam, theta_1: float, theta_2: float,
                   rel_tol: float = 0.01) -> Tuple[float, float, bool]:
    """(double-integral value, Dalpha single-integral value, disagreement flag).

    The second route is 2 int (tau - a)(b - tau) alpha'(tau) dtau against the
    finite-difference curvature density; a flag is raised beyond rel_tol.
    """
    val = pi_cost(bp, theta_1, theta_2)
    a, b = _reduce_pair(theta_1, theta_2)
    a, b = float(a), float(b)
    n = 4097
    u = np.linspace(a, b, n)
    integrand = (u - a) * (b - u) * bp.alpha_prime_at(u)
    remlam = 2.0 * simpson(integrand, x=u)
    scale = max(abs(val), abs(remlam), 1e-300)
    flag = bool(abs(val - remlam) / scale > rel_tol) if scale > 1e-14 else False
    return val, float(remlam), flag


def pi_tensor(bp: BoundaryParam, theta_1: float, theta_2: float,
              n: int = 512, richardson: bool = True) -> float:
    """Direct tensor-product midpoint quadrature of
    int int |alpha(t) - alpha(s)| dt ds (cross-check route)."""
    a, b = _reduce_pair(theta_1, theta_2)
    a, b = float(a), float(b)

    def mid(nn):
        u = a + (np.arange(nn) + 0.5) * (b - a) / nn
        al = bp.alpha_at(u)
        K = np.abs(al[:, None] - al[None, :])
        return float(np.sum(K)) * ((b - a) / nn) ** 2

    v1 = mid(n)
    if not richardson:
        return v1
    v2 = mid(2 * n)
    return v2 + (v2 - v1) / 3.0


# -- Delta_phi -------------------------------------------------------------------


def delta_phi(bp: BoundaryParam, m1, m2, delta: float, n: int = 256) -> float:
    """Step-kernel double integral of the circle formulation:

        int int_{dist(e^{is}, e^{it}) < delta}
            |sin(alpha(t - pi/2) - alpha(s - pi/2))| Xi(t) Xi(s) dt ds,

    Xi(t) = 1_{e^{it} . m2 > 0} - 1_{e^{it} . m1 > 0}, for m1, m2 on the
    euclidean unit circle and 0 < delta < pi/2. Uses the two-arc support of
    Xi: equal-arc terms add, opposite-arc terms subtract (active only when
    the jump is within delta of antipodal).
    """
    if not (0.0 < delta < np.pi / 2):
        raise ValueError("delta must lie in (0, pi/2)")
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    t1 = math.atan2(m1[1], m1[0])
    t2 = math.atan2(m2[1], m2[0])
    a, b = _reduce_pair(t1, t2)
    a, b = float(a), float(b)
    gap = b - a
    if gap < 1e-14:
        return 0.0
    lo, hi = a + np.pi / 2, b + np.pi / 2

    tg = lo + (np.arange(n) + 0.5) * gap / n
    w2 = (gap / n) ** 2
    alg = bp.alpha_at(tg - np.pi / 2)

    diff = np.abs(tg[:, None] - tg[None, :])
    K = np.abs(np.sin(alg[:, None] - alg[None, :]))
    i_same = float(np.sum(np.where(diff < delta, K, 0.0))) * w2

    # cross term: s on the opposite arc (shift by pi)
    sg = tg + np.pi
    als = bp.alpha_at(sg - np.pi / 2)
    d = np.abs(np.mod(tg[:, None] - sg[None, :] + np.pi, 2.0 * np.pi) - np.pi)
    Kc = np.abs(np.sin(alg[:, None] - als[None, :]))
    i_cross = float(np.sum(np.where(d < delta, Kc, 0.0))) * w2

    return 2.0 * (i_same - i_cross)


# -- omega / Besov-type bound ----------------------------------------------------


def omega_modulus(bp: BoundaryParam, delta: float) -> float:
    """Minimal modulus of continuity of alpha^{-1}:
    sup { |alpha^{-1}(t) - alpha^{-1}(s)| : |t - s| < delta }."""
    tab = _pi_tables(bp)
    al, t = tab.al, tab.t
    N = bp.resolution
    a0 = al[:N]
    th0 = t[:N]
    target = a0 + delta
    th1 = np.interp(target, al, t)
    return float(np.max(th1 - th0))


def omega_inverse_fn(bp: BoundaryParam, n: int = 256):
    """Returns a callable for omega^{-1} (inverse of delta -> omega(delta))."""
    ds = np.geomspace(1e-4, np.pi / 2, n)
    om = np.array([omega_modulus(bp, d) for d in ds])
    om = np.maximum.accumulate(om)

    def inv(y):
        y = np.asarray(y, dtype=float)
        return np.interp(y, om, ds, left=0.0, right=ds[-1])

    return inv


def check_eqbes21(bp: BoundaryParam, pairs: Sequence[Tuple[float, float]]):
    """Verify Lambda(m1, m2) >= c delta^2 omega^{-1}(delta/2) on the given
    theta pairs (delta = euclidean |m1 - m2| on the circle); returns
    (all_pass, fitted c = min ratio)."""
    inv = omega_inverse_fn(bp)
    ratios = []
    for t1, t2 in pairs:
        lam = pi_cost(bp, t1, t2)
        d = 2.0 * abs(math.sin((t2 - t1) / 2.0))
        if d < 1e-12:
            continue
        bound = d ** 2 * float(inv(d / 2.0))
        if bound <= 0.0:
            continue
        ratios.append(lam / bound)
    c = float(min(ratios)) if ratios else 0.0
    return c > 0.0, c


# -- reports ---------------------------------------------------------------------


@dataclass
class CostReport:
    c1d: float
    cent_explicit: Optional[float]
    cent_lp: float
    pi: float

    @property
    def cent(self) -> float:
        return self.cent_explicit if self.cent_explicit is not None else self.cent_lp

    @property
    def ratio_c1d_cent(self) -> float:
        return self.c1d / self.cent if self.cent > 0 else float("inf")

    @property
    def ratio_cent_pi(self) -> float:
        return self.cent / self.pi if self.pi > 0 else float("inf")

    def as_dict(self) -> dict:
        return {
            "c1d": self.c1d, "cent_explicit": self.cent_explicit,
            "cent_lp": self.cent_lp, "cent": self.cent, "pi": self.pi,
            "ratio_c1d_cent": self.ratio_c1d_cent,
            "ratio_cent_pi": self.ratio_cent_pi,
        }


def cost_report(bp: BoundaryParam, jp: JumpPair, lp_n: int = 512) -> CostReport:
    """All three costs for one jump (cent_explicit only for narrow jumps)."""
    explicit = None
    if jp.width < np.pi / 2 - 1e-12 and jp.theta_tilde is not None:
        explicit = cent_explicit(bp, jp)
    lp_val = cent_lp(bp, jp, N=lp_n)
    pv = pi_cost(bp, jp.theta_minus, jp.theta_plus)
    return CostReport(c1d=c1d(bp, jp), cent_explicit=explicit, cent_lp=lp_val, pi=pv)


def _pair_grid(n_base: int, n_widths: int,
               width_range: Tuple[float, float]) -> np.ndarray:
    bases = np.linspace(0.0, 2.0 * np.pi, n_base, endpoint=False)
    widths = np.geomspace(width_range[0], width_range[1], n_widths)
    out = []
    for b in bases:
        for w in widths:
            out.append((b - w / 2.0, b + w / 2.0))
    return np.array(out)


def scan_pairs(bp: BoundaryParam, pairs, lp_n: int = 256, jobs: int = 1):
    """Rows (theta_minus, theta_plus, c1d, cent, pi, ratio) for given pairs.

    Pure per-pair evaluations; for jobs > 1 the pairs are fanned out to a
    process pool and merged back in input order.
    """
    pairs = list(pairs)
    if jobs > 1:
        import concurrent.futures as cf
        import functools
        fn = functools.partial(_scan_one, bp, lp_n)
        with cf.ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(fn, pairs, chunksize=max(1, len(pairs) // (4 * jobs))))
    else:
        rows = [_scan_one(bp, lp_n, p) for p in pairs]
    return rows


def _scan_one(bp: BoundaryParam, lp_n: int, pair):
    t1, t2 = pair
    jp = make_jump_theta(bp, t1, t2)
    a = c1d(bp, jp)
    b = cent(bp, jp, N=lp_n)
    p = pi_cost(bp, t1, t2)
    return (jp.theta_minus, jp.theta_plus, a, b, p, (a / b if b > 0 else float("inf")))


def verify_bounds(bp: BoundaryParam, n_base: int = 16, n_widths: int = 16,
                  width_range: Tuple[float, float] = (1e-3, np.pi * 0.999),
                  lp_n: int = 256, refine: bool = True,
                  n_small_jump: int = 8, jobs: int = 1) -> dict:
    """Desk-scale verification of the cost comparison theorems.

    Reports sup/inf of c1d/cent over a (base, width) grid, the pointwise
    check cent <= pi, a refinement stability estimate, and the small-jump
    ratio limit at sampled boundary points compared against both
    4/|i gamma' . gamma| and 2/|i gamma' . gamma| (the latter is the
    stated literature constant; the numerics match the former).
    """

    def grid_stats(nb, nw):
        rows = scan_pairs(bp, _pair_grid(nb, nw, width_range), lp_n=lp_n, jobs=jobs)
        ratios = np.array([r[5] for r in rows])
        cents = np.array([r[3] for r in rows])
        pis = np.array([r[4] for r in rows])
        violations = int(np.sum(cents > pis + 1e-6))
        return float(np.max(ratios)), float(np.min(ratios)), violations, rows

    sup1, inf1, viol, rows = grid_stats(n_base, n_widths)
    report = {
        "norm": bp.norm.name, "kappa": bp.kappa,
        "grid": {"n_base": n_base, "n_widths": n_widths,
                 "width_range": list(width_range)},
        "sup_ratio": sup1, "inf_ratio": inf1,
        "cent_leq_pi_violations": viol,
    }
    if refine:
        sup2, inf2, viol2, _ = grid_stats(n_base * 2, n_widths * 2)
        report["refined"] = {
            "sup_ratio": sup2, "inf_ratio": inf2,
            "sup_rel_change": abs(sup2 - sup1) / max(sup1, 1e-300),
            "inf_rel_change": abs(inf2 - inf1) / max(inf1, 1e-300),
            "cent_leq_pi_violations": viol2,
        }

    small = []
    for t0 in np.linspace(0.0, 2.0 * np.pi, n_small_jump, endpoint=False):
        g = bp.gamma_at(t0)
        gp = bp.gamma_prime_at(t0)
        det = abs(float(_rot90(g) @ gp))
        ratios = []
        for w in (0.01, 0.005):
            jp = make_jump_theta(bp, t0 - w / 2.0, t0 + w / 2.0)
            ratios.append(c1d(bp, jp) / cent_explicit(bp, jp))
        r = ratios[-1]
        small.append({
            "theta": float(t0), "ratio": r,
            "four_over_det": 4.0 / det, "two_over_det": 2.0 / det,
            "rel_err_vs_4": abs(r - 4.0 / det) / (4.0 / det),
            "rel_err_vs_2": abs(r - 2.0 / det) / (2.0 / det),
        })
    matches4 = all(s["rel_err_vs_4"] < 0.02 for s in small)
    matches2 = all(s["rel_err_vs_2"] < 0.02 for s in small)
    report["small_jump"] = {
        "points": small,
        "matches_4_over_det": matches4,
        "matches_2_over_det": matches2,
    }
    return report
