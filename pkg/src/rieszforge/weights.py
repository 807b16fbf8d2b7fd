"""Kernel ingredients: target densities, pair weights, cutoffs, radius schedules.

The interaction between two points x, y at distance u is

    phi(u / r) * w(x, y) * u**(-s)

where phi is a cutoff profile vanishing beyond its argument 1, r is the
cutoff radius produced by a schedule in the point count N, and w is either
identically 1 or derived from a target density sigma via

    w(x, y) = (sigma(x) * sigma(y)) ** (-s / (2 d)).

With that choice the diagonal satisfies w(x, x)**(-d/s) = sigma(x), so
low-energy configurations equidistribute with local density proportional
to sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Manifold, Sphere2

__all__ = [
    "Density",
    "UniformDensity",
    "ZPolyDensity",
    "Cutoff",
    "HardCutoff",
    "PolyCutoff",
    "RadiusSchedule",
    "ConstRadius",
    "LogRadius",
    "PairRadius",
    "RieszParams",
]


# ---------------------------------------------------------------------------
# densities


class Density:
    """Probability density on a manifold, with ambient derivatives.

    ``sigma`` integrates to 1 over the manifold. Gradients and Hessians are
    those of the ambient formula (what finite differences of the implemented
    kernel see), not intrinsic derivatives.
    """

    sigma_min: float
    sigma_max: float

    def sigma(self, x: np.ndarray):
        raise NotImplementedError

    def grad_sigma(self, x: np.ndarray):
        raise NotImplementedError

    def hess_sigma(self, x: np.ndarray):
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class UniformDensity(Density):
    """sigma = 1 / measure(A), the uniform probability density."""

    manifold: Manifold

    @property
    def _value(self) -> float:
        return 1.0 / self.manifold.hausdorff_measure

    @property
    def sigma_min(self) -> float:
        return self._value

    @property
    def sigma_max(self) -> float:
        return self._value

    def sigma(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.full(x.shape[:-1], self._value)

    def grad_sigma(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.zeros_like(x)

    def hess_sigma(self, x):
        x = np.asarray(x, dtype=np.float64)
        p = x.shape[-1]
        return np.zeros(x.shape[:-1] + (p, p))

    def describe(self):
        return {"kind": "uniform", "value": self._value}


@dataclass(frozen=True)
class ZPolyDensity(Density):
    """Normalized sigma(x) = a + b (z/R)^2 on a radius-R sphere.

    The normalization constant is fixed at construction so the density
    integrates to 1 over the sphere; a > 0 and a + b > 0 keep it positive.
    """

    manifold: Sphere2
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not isinstance(self.manifold, Sphere2):
            raise ValueError("ZPoly density is only defined on the sphere")
        if not (self.a > 0 and self.a + self.b > 0):
            raise ValueError("ZPoly density requires a > 0 and a + b > 0")

    @property
    def _norm(self) -> float:
        # integral of (a + b z^2 / R^2) over the sphere is 4 pi R^2 (a + b/3)
        r = self.manifold.radius
        return 1.0 / (4.0 * math.pi * r * r * (self.a + self.b / 3.0))

    @property
    def sigma_min(self) -> float:
        c = self._norm
        return c * min(self.a, self.a + self.b)

    @property
    def sigma_max(self) -> float:
        c = self._norm
        return c * max(self.a, self.a + self.b)

    def sigma(self, x):
        x = np.asarray(x, dtype=np.float64)
        zh = x[..., 2] / self.manifold.radius
        return self._norm * (self.a + self.b * zh * zh)

    def grad_sigma(self, x):
        x = np.asarray(x, dtype=np.float64)
        g = np.zeros_like(x)
        r = self.manifold.radius
        g[..., 2] = self._norm * 2.0 * self.b * x[..., 2] / (r * r)
        return g

    def hess_sigma(self, x):
        x = np.asarray(x, dtype=np.float64)
        p = x.shape[-1]
        h = np.zeros(x.shape[:-1] + (p, p))
        r = self.manifold.radius
        h[..., 2, 2] = self._norm * 2.0 * self.b / (r * r)
        return h

    def describe(self):
        return {"kind": "zpoly", "a": self.a, "b": self.b}


# ---------------------------------------------------------------------------
# cutoffs


class Cutoff:
    """Profile phi(t) with phi -> 1 as t -> 0+ and phi(t) = 0 for t >= 1."""

    has_smooth_hessian: bool = False

    def evaluate(self, t):
        """Return (phi, phi', phi'') at t > 0, vectorized."""
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def _check_argument(t):
        t = np.asarray(t, dtype=np.float64)
        if np.any(t <= 0.0):
            raise ValueError("cutoff argument must be positive")
        return t


@dataclass(frozen=True)
class HardCutoff(Cutoff):
    """Indicator of [0, 1]: sharp truncation, no usable derivatives."""

    def evaluate(self, t):
        t = self._check_argument(t)
        phi = (t <= 1.0).astype(np.float64)
        zero = np.zeros_like(phi)
        return phi, zero, zero

    def describe(self):
        return {"kind": "hard"}


@dataclass(frozen=True)
class PolyCutoff(Cutoff):
    """phi(t) = (1 - t^2)^k on (0, 1), zero beyond; C^(k-1) at t = 1."""

    k: int = 3

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("polynomial cutoff order must be >= 1")

    @property
    def has_smooth_hessian(self) -> bool:
        return self.k >= 3

    def evaluate(self, t):
        t = self._check_argument(t)
        inside = t < 1.0
        q = np.where(inside, 1.0 - t * t, 0.0)
        k = self.k
        qk1 = q ** (k - 1) if k >= 2 else np.ones_like(q)
        phi = qk1 * q
        d1 = -2.0 * k * t * qk1
        if k >= 3:
            qk2 = q ** (k - 2)
        elif k == 2:
            qk2 = np.ones_like(q)
        else:
            qk2 = np.zeros_like(q)  # coefficient 4k(k-1) vanishes for k = 1
        d2 = -2.0 * k * qk1 + 4.0 * k * (k - 1) * t * t * qk2
        zero = np.zeros_like(q)
        return (
            np.where(inside, phi, zero),
            np.where(inside, d1, zero),
            np.where(inside, d2, zero),
        )

    def describe(self):
        return {"kind": "poly", "k": self.k}


# ---------------------------------------------------------------------------
# radius schedules


class RadiusSchedule:
    """Cutoff radius as a function of the point count N (and point pair)."""

    dim: int
    diagnostic_only: bool = False

    def value(self, n: int) -> float:
        """Scalar radius for schedules constant over pairs."""
        raise NotImplementedError

    def sup_value(self, n: int) -> float:
        """Upper bound on the radius over all pairs, used to size grids."""
        return self.value(n)

    def pair_values(self, xi, xj, n: int):
        xi = np.asarray(xi, dtype=np.float64)
        return np.full(xi.shape[:-1], self.value(n))

    def describe(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def _check_n(n):
        n = int(n)
        if n < 2:
            raise ValueError("radius schedule needs at least two points")
        return n

    def _check_dim(self, dim):
        if not 1 <= int(dim) <= 3:
            raise ValueError("radius schedule dimension must be 1, 2 or 3")
        return int(dim)


@dataclass(frozen=True)
class ConstRadius(RadiusSchedule):
    """r(N) = scale * N**(-1/d).

    The covered neighbor count stays bounded as N grows, so runs using this
    schedule are flagged diagnostic-only in reports.
    """

    scale: float
    dim: int
    diagnostic_only: bool = True

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("radius scale must be positive")
        self._check_dim(self.dim)

    def value(self, n):
        n = self._check_n(n)
        return self.scale * n ** (-1.0 / self.dim)

    def describe(self):
        return {"kind": "const", "scale": self.scale, "diagnostic_only": True}


@dataclass(frozen=True)
class LogRadius(RadiusSchedule):
    """r(N) = scale * ln(N) * N**(-1/d), the slowly widening default."""

    scale: float
    dim: int

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("radius scale must be positive")
        self._check_dim(self.dim)

    def value(self, n):
        n = self._check_n(n)
        return self.scale * math.log(n) * n ** (-1.0 / self.dim)

    def describe(self):
        return {"kind": "log", "scale": self.scale, "diagnostic_only": False}


@dataclass(frozen=True)
class PairRadius(RadiusSchedule):
    """Radius from a symmetric callable r(x, y, N), bounded by sup_fn(N).

    The callable must be symmetric in (x, y) and positive; ``sup_fn`` must
    dominate it so neighbor grids can be sized. Kernel derivatives treat the
    per-pair value as locally constant in the positions.
    """

    fn: object
    sup_fn: object
    dim: int

    def __post_init__(self):
        self._check_dim(self.dim)

    def value(self, n):
        raise ValueError("pair-function schedule has no scalar radius; use sup_value")

    def sup_value(self, n):
        n = self._check_n(n)
        sup = float(self.sup_fn(n))
        if not sup > 0:
            raise ValueError("radius bound must be positive")
        return sup

    def pair_values(self, xi, xj, n):
        n = self._check_n(n)
        xi = np.asarray(xi, dtype=np.float64)
        xj = np.asarray(xj, dtype=np.float64)
        r = np.asarray(self.fn(xi, xj, n), dtype=np.float64)
        if r.shape != xi.shape[:-1]:
            r = np.broadcast_to(r, xi.shape[:-1]).copy()
        if np.any(r <= 0):
            raise ValueError("pair-function radius produced a non-positive value")
        return r

    def describe(self):
        return {"kind": "pair_function", "diagnostic_only": False}


# ---------------------------------------------------------------------------
# parameter bundle


@dataclass(frozen=True)
class RieszParams:
    """Everything the energy kernels need besides the points themselves."""

    s: float
    dim: int
    radius: RadiusSchedule
    cutoff: Cutoff = field(default_factory=PolyCutoff)
    density: Density | None = None
    weight_mode: str = "unit"

    def __post_init__(self):
        if not self.s > self.dim:
            raise ValueError(
                f"hypersingular regime required: s > d (got s={self.s}, d={self.dim})"
            )
        if self.weight_mode not in ("unit", "density"):
            raise ValueError("weight_mode must be 'unit' or 'density'")
        if self.weight_mode == "density" and self.density is None:
            raise ValueError("density weight mode requires a density")
        if self.radius.dim != self.dim:
            raise ValueError("radius schedule dimension disagrees with params")

    @property
    def weight_exponent(self) -> float:
        """q in w = (sigma(x) sigma(y))**(-q)."""
        return self.s / (2.0 * self.dim)

    def pair_weight(self, xi, xj):
        """w(x, y) for batches of point pairs."""
        xi = np.asarray(xi, dtype=np.float64)
        if self.weight_mode == "unit":
            return np.ones(xi.shape[:-1])
        si = self.density.sigma(xi)
        sj = self.density.sigma(xj)
        return (si * sj) ** (-self.weight_exponent)

    def log_weight_gradient(self, points):
        """Per-point v with grad_x w(x, y) = w(x, y) * v(x); None when w = 1."""
        if self.weight_mode == "unit":
            return None
        pts = np.asarray(points, dtype=np.float64)
        s = self.density.sigma(pts)
        g = self.density.grad_sigma(pts)
        return -self.weight_exponent * g / s[..., None]

    def radius_value(self, n):
        return self.radius.value(n)

    def radius_sup(self, n):
        return self.radius.sup_value(n)

    def pair_radius(self, xi, xj, n):
        return self.radius.pair_values(xi, xj, n)

    def describe(self) -> dict:
        out = {
            "s": self.s,
            "dim": self.dim,
            "cutoff": self.cutoff.describe(),
            "radius": self.radius.describe(),
            "weight_mode": self.weight_mode,
        }
        if self.density is not None:
            out["density"] = self.density.describe()
        return out
