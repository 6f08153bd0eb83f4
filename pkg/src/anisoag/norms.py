"""Strictly convex C1 planar norms.

A norm here is a positively 1-homogeneous, symmetric, strictly convex
function on R^2 that is C1 away from the origin. Built-in families:

  euclidean        |z|
  lp(p), p > 1     (|z1|^p + |z2|^p)^(1/p)
  linear_image(A)  |A z| for an invertible 2x2 matrix A
  custom           user value function, optional gradient

All evaluations are vectorized over trailing shape (..., 2). Gradients of
custom norms without an analytic gradient fall back to central finite
differences with step 1e-6 * |z|, which is safe away from 0 for a C1 norm.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "NormSpec",
    "NormValidationError",
    "NormDiagnostics",
    "validate_norm",
    "norm_from_config",
    "norm_from_string",
]


class NormValidationError(ValueError):
    """Raised when a candidate norm violates the required invariants."""


def _as_points(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != 2:
        raise ValueError(f"expected trailing dimension 2, got shape {z.shape}")
    return z


@dataclass(frozen=True)
class NormSpec:
    """A strictly convex C1 norm on the plane.

    Use the constructors ``euclidean``, ``lp``, ``linear_image``, ``custom``
    or ``norm_from_config`` rather than instantiating directly.
    """

    kind: str
    p: Optional[float] = None
    A: Optional[np.ndarray] = None
    value_fn: Optional[Callable] = field(default=None, repr=False)
    gradient_fn: Optional[Callable] = field(default=None, repr=False)
    name: str = ""

    # -- constructors ---------------------------------------------------

    @staticmethod
    def euclidean() -> "NormSpec":
        return NormSpec(kind="euclidean", name="euclidean")

    @staticmethod
    def lp(p: float) -> "NormSpec":
        if not p > 1:
            raise ValueError(f"lp norm requires p > 1, got p={p}")
        return NormSpec(kind="lp", p=float(p), name=f"lp:{p:g}")

    @staticmethod
    def linear_image(A) -> "NormSpec":
        A = np.asarray(A, dtype=float)
        if A.shape != (2, 2):
            raise ValueError("linear_image requires a 2x2 matrix")
        if abs(np.linalg.det(A)) < 1e-12:
            raise ValueError("linear_image matrix must be invertible")
        A = A.copy()
        A.setflags(write=False)
        return NormSpec(kind="linear_image", A=A, name="linear_image")

    @staticmethod
    def ellipse(a: float, b: float) -> "NormSpec":
        """Norm whose unit ball is the axis-aligned ellipse with semi-axes (a, b)."""
        if a <= 0 or b <= 0:
            raise ValueError("ellipse semi-axes must be positive")
        spec = NormSpec.linear_image(np.diag([1.0 / a, 1.0 / b]))
        object.__setattr__(spec, "name", f"ellipse:{a:g},{b:g}")
        return spec

    @staticmethod
    def custom(value_fn: Callable, gradient_fn: Optional[Callable] = None,
               name: str = "custom") -> "NormSpec":
        return NormSpec(kind="custom", value_fn=value_fn, gradient_fn=gradient_fn,
                        name=name)

    # -- evaluation -----------------------------------------------------

    def value(self, z) -> np.ndarray:
        """Norm value, vectorized over (..., 2)."""
        z = _as_points(z)
        if self.kind == "euclidean":
            return np.hypot(z[..., 0], z[..., 1])
        if self.kind == "lp":
            p = self.p
            return (np.abs(z[..., 0]) ** p + np.abs(z[..., 1]) ** p) ** (1.0 / p)
        if self.kind == "linear_image":
            w = z @ self.A.T
            return np.hypot(w[..., 0], w[..., 1])
        out = np.asarray(self.value_fn(z), dtype=float)
        return out

    def gradient(self, z) -> np.ndarray:
        """Gradient of the norm, vectorized over (..., 2). Undefined at 0."""
        z = _as_points(z)
        if self.kind == "euclidean":
            r = np.hypot(z[..., 0], z[..., 1])
            return z / r[..., None]
        if self.kind == "lp":
            p = self.p
            v = self.value(z)
            g = np.abs(z) ** (p - 1) * np.sign(z)
            return g * (v ** (1.0 - p))[..., None]
        if self.kind == "linear_image":
            w = z @ self.A.T
            r = np.hypot(w[..., 0], w[..., 1])
            return (w / r[..., None]) @ self.A
        if self.gradient_fn is not None:
            return np.asarray(self.gradient_fn(z), dtype=float)
        return self._fd_gradient(z)

    def _fd_gradient(self, z: np.ndarray) -> np.ndarray:
        r = np.hypot(z[..., 0], z[..., 1])
        h = (1e-6 * r)[..., None]
        e1 = np.zeros_like(z); e1[..., 0] = 1.0
        e2 = np.zeros_like(z); e2[..., 1] = 1.0
        gx = (self.value(z + h * e1) - self.value(z - h * e1)) / (2.0 * h[..., 0])
        gy = (self.value(z + h * e2) - self.value(z - h * e2)) / (2.0 * h[..., 0])
        return np.stack([gx, gy], axis=-1)

    # -- serialization --------------------------------------------------

    def to_config(self) -> dict:
        if self.kind == "euclidean":
            return {"kind": "euclidean"}
        if self.kind == "lp":
            return {"kind": "lp", "p": self.p}
        if self.kind == "linear_image":
            return {"kind": "linear_image", "A": self.A.tolist()}
        raise ValueError("custom norms are not JSON-serializable")


def norm_from_config(cfg) -> NormSpec:
    """Build a NormSpec from a JSON config dict or string.

    Accepted forms: {"kind": "euclidean"}, {"kind": "lp", "p": 4.0},
    {"kind": "linear_image", "A": [[a,b],[c,d]]}.
    """
    if isinstance(cfg, str):
        cfg = json.loads(cfg)
    kind = cfg.get("kind")
    if kind == "euclidean":
        return NormSpec.euclidean()
    if kind == "lp":
        return NormSpec.lp(float(cfg["p"]))
    if kind == "linear_image":
        return NormSpec.linear_image(cfg["A"])
    raise NormValidationError(f"unknown norm kind: {kind!r}")


def norm_from_string(s: str) -> NormSpec:
    """Parse compact CLI syntax: 'euclidean', 'lp:3', 'ellipse:2,1'."""
    s = s.strip()
    if s == "euclidean":
        return NormSpec.euclidean()
    if s.startswith("lp:"):
        return NormSpec.lp(float(s[3:]))
    if s.startswith("ellipse:"):
        a, b = (float(t) for t in s[8:].split(","))
        return NormSpec.ellipse(a, b)
    raise NormValidationError(f"cannot parse norm spec {s!r}")


@dataclass
class NormDiagnostics:
    homogeneity_err: float
    symmetry_err: float
    convexity_margin: float
    gradient_err: float

    def ok(self) -> bool:
        return (self.homogeneity_err < 1e-10 and self.symmetry_err < 1e-10
                and self.convexity_margin > 0 and self.gradient_err < 1e-5)


def validate_norm(norm: NormSpec, n_samples: int = 256,
                  rng: Optional[np.random.Generator] = None,
                  strict: bool = True) -> NormDiagnostics:
    """Check the NormSpec invariants on sampled points.

    homogeneity: value(t z) = t value(z) to 1e-10 relative, t > 0
    symmetry:    value(-z) = value(z)
    strict convexity witness: value((x+y)/2) < 1 for boundary x != +-y
    gradient:    matches central differences of value to O(h^2)
    """
    rng = rng or np.random.default_rng(0)
    phi = rng.uniform(0.0, 2.0 * np.pi, n_samples)
    z = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    t = rng.uniform(0.1, 10.0, n_samples)

    v = norm.value(z)
    hom = np.max(np.abs(norm.value(t[:, None] * z) - t * v) / (t * v))
    sym = np.max(np.abs(norm.value(-z) - v) / v)

    # boundary points at two separated angle offsets; midpoint must be interior
    b = z / v[:, None]
    b2 = np.roll(b, n_samples // 3, axis=0)
    mid = norm.value((b + b2) / 2.0)
    margin = float(np.min(1.0 - mid))

    g = norm.gradient(z)
    h = 1e-5
    fd = np.stack([
        (norm.value(z + [h, 0]) - norm.value(z - [h, 0])) / (2 * h),
        (norm.value(z + [0, h]) - norm.value(z - [0, h])) / (2 * h),
    ], axis=-1)
    gerr = float(np.max(np.abs(g - fd)))

    diag = NormDiagnostics(float(hom), float(sym), margin, gerr)
    if strict and not diag.ok():
        raise NormValidationError(
            f"norm failed validation: homogeneity={diag.homogeneity_err:.2e} "
            f"symmetry={diag.symmetry_err:.2e} convexity_margin={diag.convexity_margin:.2e} "
            f"gradient={diag.gradient_err:.2e}")
    return diag
