"""Compact supports for point configurations.

The shipped menu is closed: circle, sphere, spherical shell, axis-aligned
unit cube, and flat torus. Every variant exposes the same small surface:
ambient and intrinsic dimensions, total measure, a retraction onto the set
(``project``), a boundary-aware filter for descent directions
(``tangent_project``), seeded uniform sampling, and the pairwise distance
convention. Distances are ambient Euclidean everywhere except the torus,
which uses minimum-image distances so it can serve as a boundary-free test
domain.

Operations are pure and vectorized: arrays of shape ``(..., p)`` are
accepted wherever a single point is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Configuration",
    "Manifold",
    "Circle",
    "Sphere2",
    "SphericalShell",
    "UnitCube",
    "FlatTorus",
    "equally_spaced_circle",
    "triangular_lattice_torus",
]

_BOUNDARY_TOL = 1e-12


@dataclass(eq=False)
class Configuration:
    """An ordered list of N points in p-dimensional ambient space.

    ``points`` is an (N, p) float64 array; ``intrinsic_dim`` records the
    dimension d of the set the points are meant to live on (d <= p).
    """

    points: np.ndarray
    intrinsic_dim: int

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array of shape (N, p)")
        if pts.size and not np.all(np.isfinite(pts)):
            raise ValueError("configuration contains non-finite coordinates")
        d = int(self.intrinsic_dim)
        if not 1 <= d <= pts.shape[1]:
            raise ValueError(
                f"intrinsic dimension {d} must satisfy 1 <= d <= ambient {pts.shape[1]}"
            )
        self.points = pts
        self.intrinsic_dim = d

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]


def _norms(x):
    return np.linalg.norm(x, axis=-1)


def _unit_gaussian_directions(rng, count, dim):
    v = rng.standard_normal((count, dim))
    n = _norms(v)
    # resample the (measure-zero) failures instead of dividing by ~0
    bad = n < 1e-12
    while np.any(bad):
        v[bad] = rng.standard_normal((int(bad.sum()), dim))
        n = _norms(v)
        bad = n < 1e-12
    return v / n[..., None]


class Manifold:
    """Common surface for the shipped compact sets."""

    ambient_dim: int
    intrinsic_dim: int

    @property
    def hausdorff_measure(self) -> float:
        """Total d-dimensional measure of the set (length/area/volume)."""
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        """Largest pairwise distance under this manifold's metric."""
        raise NotImplementedError

    @property
    def periodic_box(self):
        """Side lengths for minimum-image arithmetic, or None."""
        return None

    def project(self, x: np.ndarray) -> np.ndarray:
        """Retract ambient points onto the set."""
        raise NotImplementedError

    def tangent_project(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Drop the component of g that points out of the set at x."""
        raise NotImplementedError

    def contains(self, x: np.ndarray, tol: float = _BOUNDARY_TOL):
        """Membership predicate, absolute tolerance on the defining constraint."""
        raise NotImplementedError

    def membership_violation(self, x: np.ndarray):
        """Distance-like measure of constraint violation (0 when on the set)."""
        raise NotImplementedError

    def sample_uniform(self, count: int, seed=None) -> Configuration:
        """Draw ``count`` i.i.d. points from the uniform measure on the set."""
        raise NotImplementedError

    def pair_distance(self, x: np.ndarray, y: np.ndarray):
        """Distance convention used by all kernels on this manifold."""
        return _norms(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64))

    def _configuration(self, pts) -> Configuration:
        return Configuration(pts, self.intrinsic_dim)


@dataclass(frozen=True)
class Circle(Manifold):
    """Circle of given radius centered at the origin of the plane."""

    radius: float = 1.0
    ambient_dim: int = 2
    intrinsic_dim: int = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")

    @property
    def hausdorff_measure(self) -> float:
        return 2.0 * math.pi * self.radius

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def project(self, x):
        x = np.asarray(x, dtype=np.float64)
        n = _norms(x)
        if np.any(n == 0.0):
            raise ValueError("projection undefined for the origin")
        return x * (self.radius / n)[..., None]

    def tangent_project(self, x, g):
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        nrm = _norms(x)[..., None]
        unit = x / nrm
        radial = np.sum(g * unit, axis=-1, keepdims=True)
        return g - radial * unit

    def contains(self, x, tol=_BOUNDARY_TOL):
        return self.membership_violation(x) <= tol

    def membership_violation(self, x):
        return np.abs(_norms(np.asarray(x, dtype=np.float64)) - self.radius)

    def sample_uniform(self, count, seed=None):
        rng = np.random.default_rng(seed)
        theta = rng.uniform(0.0, 2.0 * math.pi, size=count)
        pts = self.radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return self._configuration(pts.reshape(count, 2))


@dataclass(frozen=True)
class Sphere2(Manifold):
    """Round 2-sphere of given radius in R^3."""

    radius: float = 1.0
    ambient_dim: int = 3
    intrinsic_dim: int = 2

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")

    @property
    def hausdorff_measure(self) -> float:
        return 4.0 * math.pi * self.radius**2

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def project(self, x):
        x = np.asarray(x, dtype=np.float64)
        n = _norms(x)
        if np.any(n == 0.0):
            raise ValueError("projection undefined for the origin")
        return x * (self.radius / n)[..., None]

    def tangent_project(self, x, g):
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        nrm = _norms(x)[..., None]
        unit = x / nrm
        radial = np.sum(g * unit, axis=-1, keepdims=True)
        return g - radial * unit

    def contains(self, x, tol=_BOUNDARY_TOL):
        return self.membership_violation(x) <= tol

    def membership_violation(self, x):
        return np.abs(_norms(np.asarray(x, dtype=np.float64)) - self.radius)

    def sample_uniform(self, count, seed=None):
        rng = np.random.default_rng(seed)
        pts = self.radius * _unit_gaussian_directions(rng, count, 3)
        return self._configuration(pts)


@dataclass(frozen=True)
class SphericalShell(Manifold):
    """Solid shell between two concentric spheres in R^3 (full-dimensional)."""

    r_inner: float = 0.55
    r_outer: float = 1.0
    ambient_dim: int = 3
    intrinsic_dim: int = 3

    def __post_init__(self):
        if not 0 < self.r_inner < self.r_outer:
            raise ValueError("shell radii must satisfy 0 < r_inner < r_outer")

    @property
    def hausdorff_measure(self) -> float:
        return 4.0 / 3.0 * math.pi * (self.r_outer**3 - self.r_inner**3)

    @property
    def diameter(self) -> float:
        return 2.0 * self.r_outer

    def project(self, x):
        x = np.asarray(x, dtype=np.float64)
        n = _norms(x)
        if np.any(n == 0.0):
            raise ValueError("projection undefined for the origin")
        r = np.clip(n, self.r_inner, self.r_outer)
        return x * (r / n)[..., None]

    def tangent_project(self, x, g):
        # Interior points pass through; at a boundary sphere the radial
        # component pointing out of the shell is removed.
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64)
        n = _norms(x)[..., None]
        unit = np.divide(x, n, out=np.zeros_like(x), where=n > 0)
        radial = np.sum(g * unit, axis=-1, keepdims=True)
        tol = _BOUNDARY_TOL * self.r_outer
        outward = np.where(n >= self.r_outer - tol, np.maximum(radial, 0.0), 0.0)
        inward = np.where(n <= self.r_inner + tol, np.minimum(radial, 0.0), 0.0)
        return g - (outward + inward) * unit

    def contains(self, x, tol=_BOUNDARY_TOL):
        return self.membership_violation(x) <= tol

    def membership_violation(self, x):
        n = _norms(np.asarray(x, dtype=np.float64))
        return np.maximum(self.r_inner - n, 0.0) + np.maximum(n - self.r_outer, 0.0)

    def sample_uniform(self, count, seed=None):
        # independent child streams for directions and radii keep the first
        # m points of a size-M draw equal to a size-m draw (nested sampling)
        d_rng, r_rng = np.random.default_rng(seed).spawn(2)
        dirs = _unit_gaussian_directions(d_rng, count, 3)
        u = r_rng.uniform(0.0, 1.0, size=count)
        # radius from the volume CDF: uniform in r^3 between the two shells
        r = np.cbrt(self.r_inner**3 + u * (self.r_outer**3 - self.r_inner**3))
        return self._configuration(dirs * r[:, None])


@dataclass(frozen=True)
class UnitCube(Manifold):
    """Axis-aligned unit cube [0, 1]^d (full-dimensional)."""

    dim: int = 2

    def __post_init__(self):
        if not 1 <= self.dim <= 3:
            raise ValueError("unit cube ships for dimensions 1 through 3")

    @property
    def ambient_dim(self) -> int:
        return self.dim

    @property
    def intrinsic_dim(self) -> int:
        return self.dim

    @property
    def hausdorff_measure(self) -> float:
        return 1.0

    @property
    def diameter(self) -> float:
        return math.sqrt(self.dim)

    def project(self, x):
        return np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)

    def tangent_project(self, x, g):
        x = np.asarray(x, dtype=np.float64)
        g = np.asarray(g, dtype=np.float64).copy()
        lo = x <= _BOUNDARY_TOL
        hi = x >= 1.0 - _BOUNDARY_TOL
        g[lo] = np.maximum(g[lo], 0.0)
        g[hi] = np.minimum(g[hi], 0.0)
        return g

    def contains(self, x, tol=_BOUNDARY_TOL):
        return self.membership_violation(x) <= tol

    def membership_violation(self, x):
        x = np.asarray(x, dtype=np.float64)
        over = np.maximum(x - 1.0, 0.0) + np.maximum(-x, 0.0)
        return np.max(over, axis=-1)

    def sample_uniform(self, count, seed=None):
        rng = np.random.default_rng(seed)
        return self._configuration(rng.uniform(0.0, 1.0, size=(count, self.dim)))


@dataclass(frozen=True)
class FlatTorus(Manifold):
    """Flat torus: a box with per-axis wraparound and minimum-image metric."""

    sides: tuple

    def __post_init__(self):
        sides = tuple(float(s) for s in np.atleast_1d(np.asarray(self.sides, dtype=np.float64)))
        if not 1 <= len(sides) <= 3:
            raise ValueError("flat torus ships for dimensions 1 through 3")
        if any(s <= 0 for s in sides):
            raise ValueError("torus side lengths must be positive")
        object.__setattr__(self, "sides", sides)

    @property
    def ambient_dim(self) -> int:
        return len(self.sides)

    @property
    def intrinsic_dim(self) -> int:
        return len(self.sides)

    @property
    def hausdorff_measure(self) -> float:
        return float(np.prod(self.sides))

    @property
    def diameter(self) -> float:
        return 0.5 * float(np.linalg.norm(self.sides))

    @property
    def periodic_box(self):
        return np.asarray(self.sides, dtype=np.float64)

    def project(self, x):
        return np.mod(np.asarray(x, dtype=np.float64), self.periodic_box)

    def tangent_project(self, x, g):
        return np.asarray(g, dtype=np.float64)

    def contains(self, x, tol=_BOUNDARY_TOL):
        return self.membership_violation(x) <= tol

    def membership_violation(self, x):
        # every finite point wraps onto the torus
        x = np.asarray(x, dtype=np.float64)
        return np.where(np.all(np.isfinite(x), axis=-1), 0.0, np.inf)

    def sample_uniform(self, count, seed=None):
        rng = np.random.default_rng(seed)
        u = rng.uniform(0.0, 1.0, size=(count, len(self.sides)))
        return self._configuration(u * self.periodic_box)

    def pair_distance(self, x, y):
        d = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
        box = self.periodic_box
        d = d - box * np.round(d / box)
        return _norms(d)


def equally_spaced_circle(n: int, radius: float = 1.0) -> Configuration:
    """n equally spaced points on the circle, starting at angle 0."""
    theta = 2.0 * math.pi * np.arange(n) / n
    pts = radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    return Configuration(pts, 1)


def triangular_lattice_torus(m: int):
    """Exact triangular lattice with N = 2 m^2 points on an area-1 flat torus.

    Rows are spaced sqrt(3)/2 times the lattice constant with alternating
    half-cell offsets, so the box aspect that closes the lattice periodically
    is 1 : sqrt(3). Returns (manifold, configuration); the nearest-neighbor
    distance equals 3**(-1/4) / m.
    """
    if m < 1:
        raise ValueError("lattice parameter m must be >= 1")
    a = 3.0 ** (-0.25) / m
    lx = m * a
    ly = math.sqrt(3.0) * lx
    torus = FlatTorus((lx, ly))
    rows = 2 * m
    i = np.arange(m, dtype=np.float64)
    pts = np.empty((rows * m, 2))
    h = math.sqrt(3.0) / 2.0 * a
    for j in range(rows):
        x = (i + 0.5 * (j % 2)) * a
        pts[j * m : (j + 1) * m, 0] = x % lx
        pts[j * m : (j + 1) * m, 1] = (j * h) % ly
    return torus, Configuration(pts, 2)
