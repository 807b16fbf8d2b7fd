"""Quality metrics for point configurations.

Separation is computed exactly by a doubling grid search; the covering
radius is a Monte Carlo lower estimate (max over uniform samples of the
distance to the nearest configuration point). Energy ratios compare the
configuration against the known or conjectured asymptotic constants, and
the short-pair audit checks the counting bound that caps how many pairs
can sit below a distance threshold.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .energy import energy_full, energy_full_unweighted, energy_truncated
from .geometry import (
    Circle,
    Configuration,
    FlatTorus,
    Sphere2,
    SphericalShell,
    UnitCube,
)
from .neighbors import CellGrid, count_Z
from .weights import RieszParams, UniformDensity, ZPolyDensity

__all__ = [
    "separation",
    "covering_radius_estimate",
    "mesh_ratio",
    "riemann_zeta",
    "epstein_zeta_hex",
    "LimitInfo",
    "theoretical_limit",
    "EnergyRatios",
    "energy_ratio",
    "energy_ratios",
    "DistributionReport",
    "distribution_test",
    "ZAuditRow",
    "audit_Z_bounds",
]


def _points_of(config):
    if isinstance(config, Configuration):
        return config.points
    return np.ascontiguousarray(np.asarray(config, dtype=np.float64))


def separation(config, box=None) -> float:
    """Exact minimum pairwise distance (min-image when ``box`` is given)."""
    pts = _points_of(config)
    n, p = pts.shape
    if n < 2:
        raise ValueError("separation is undefined for fewer than two points")
    if box is not None:
        box = np.asarray(box, dtype=np.float64)
        extent = 0.5 * float(np.linalg.norm(box))
        cap = float(box.min()) / 3.0
    else:
        spread = pts.max(axis=0) - pts.min(axis=0)
        extent = float(np.linalg.norm(spread))
        cap = None
        if extent == 0.0:
            return 0.0

    delta = max(extent / n ** (1.0 / p), 1e-300)
    if cap is not None:
        delta = min(delta, cap)
    while True:
        try:
            grid = CellGrid(pts, delta, box=box)
        except ValueError:
            grid = None
        if grid is not None:
            _, _, dist, _ = grid.pairs()
            if dist.size:
                # every pair at distance <= delta was enumerated, so the
                # smallest of them is the global minimum
                return float(dist.min())
        if cap is not None and delta >= cap:
            return _brute_separation(pts, box)
        if grid is None and box is None and delta > 4.0 * extent:
            return _brute_separation(pts, box)
        delta = 2.0 * delta if cap is None else min(2.0 * delta, cap)


def _brute_separation(pts, box):
    n = pts.shape[0]
    best = math.inf
    chunk = max(1, int(2**21 // max(n, 1)))
    for lo in range(0, n, chunk):
        d = pts[lo : lo + chunk, None, :] - pts[None, :, :]
        if box is not None:
            d = d - box * np.round(d / box)
        dist2 = (d * d).sum(axis=-1)
        m = dist2.shape[0]
        dist2[np.arange(m), lo + np.arange(m)] = np.inf
        best = min(best, float(dist2.min()))
    return math.sqrt(best)


def covering_radius_estimate(manifold, config, samples=None, seed=0) -> float:
    """Monte Carlo lower estimate of the covering radius.

    Draws uniform samples on the manifold and returns the largest distance
    from a sample to its nearest configuration point (straight-line
    distance, min-image on the torus).
    """
    from scipy.spatial import cKDTree

    pts = _points_of(config)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("covering radius of an empty configuration")
    m = 50 * n if samples is None else int(samples)
    if m < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    probes = manifold.sample_uniform(m, rng).points
    box = manifold.periodic_box
    if box is not None:
        tree = cKDTree(_wrap_into(pts, box), boxsize=box)
        probes = _wrap_into(probes, box)
    else:
        tree = cKDTree(pts)
    dist, _ = tree.query(probes, k=1)
    return float(np.max(dist))


def _wrap_into(pts, box):
    # np.mod of a tiny negative can round up to the box length itself,
    # which the periodic tree rejects
    wrapped = np.mod(pts, box)
    return np.where(wrapped >= box, 0.0, wrapped)


def mesh_ratio(manifold, config, samples=None, seed=0) -> float:
    """Covering estimate divided by exact separation; bounded for quasi-uniform families."""
    sep = separation(config, box=manifold.periodic_box)
    if sep == 0.0:
        return math.inf
    return covering_radius_estimate(manifold, config, samples, seed) / sep


# Bernoulli numbers B_2 .. B_16 for the Euler-Maclaurin tail
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)


def riemann_zeta(s: float) -> float:
    """Series value sum n**(-s) for s > 1, by Euler-Maclaurin summation."""
    s = float(s)
    if s <= 1.0:
        raise ValueError("zeta series diverges for s <= 1")
    cut = 64
    head = math.fsum(n ** (-s) for n in range(1, cut + 1))
    total = head + cut ** (1.0 - s) / (s - 1.0) - 0.5 * cut ** (-s)
    rising = s
    fact = 1.0
    for j, b in enumerate(_BERNOULLI, start=1):
        fact *= (2 * j - 1) * (2 * j)
        total += b / fact * rising * cut ** (-s - 2 * j + 1)
        rising *= (s + 2 * j - 1) * (s + 2 * j)
    return total


@functools.lru_cache(maxsize=None)
def epstein_zeta_hex(s: float) -> float:
    """Lattice sum over the unit hexagonal lattice: sum (m^2+mn+n^2)^(-s/2).

    Direct summation over all lattice vectors of length at most R, plus the
    continuum tail integral (one point per cell of area sqrt(3)/2 beyond R);
    R doubles until two consecutive values agree below the absolute target
    of 1e-8. The Eisenstein norm-form factorization is kept separately as a
    cross-check.
    """
    s = float(s)
    if s <= 2.0:
        raise ValueError("divergent lattice sum for s <= 2")
    val = _hex_direct(s, 256.0)
    for radius in (512.0, 1024.0, 2048.0, 4096.0):
        nxt = _hex_direct(s, radius)
        if abs(nxt - val) < 5e-9:
            return nxt
        val = nxt
    return val


def _hex_direct(s, radius):
    # basis (1,0), (1/2, sqrt(3)/2): |m e1 + n e2|^2 = m^2 + mn + n^2
    r2 = radius * radius
    mmax = int(math.ceil(2.0 * radius / math.sqrt(3.0))) + 1
    ms = np.arange(-mmax, mmax + 1, dtype=np.float64)
    partials = []
    count = 0
    chunk = max(1, int(2**22 // ms.size))
    for lo in range(0, ms.size, chunk):
        m = ms[lo : lo + chunk, None]
        q = m * m + m * ms[None, :] + ms[None, :] ** 2
        mask = (q > 0.0) & (q <= r2)
        count += int(mask.sum())
        q[~mask] = np.inf
        partials.append(float(np.sum(q ** (-0.5 * s))))
    # start the continuum tail where the hexagonal cells of the enumerated
    # points (origin included) stop covering; matching areas this way cancels
    # the leading boundary error of the plain radius-R cut
    reff = math.sqrt((count + 1) * (math.sqrt(3.0) / 2.0) / math.pi)
    tail = (4.0 * math.pi / math.sqrt(3.0)) * reff ** (2.0 - s) / (s - 2.0)
    return math.fsum(partials) + tail


def _epstein_hex_factored(s):
    # m^2+mn+n^2 is the Eisenstein norm form, so the sum factors into
    # 6 zeta(s/2) L(s/2) with L the alternating character series mod 3.
    # Cross-check only; the direct lattice sum above is the primary path.
    half = 0.5 * float(s)
    return 6.0 * riemann_zeta(half) * _l_character_3(half)


def _l_character_3(sigma):
    # sum n^-sigma over n = 1, 4, 7, ... minus n = 2, 5, 8, ...
    from scipy.special import zeta as hurwitz

    return 3.0 ** (-sigma) * (hurwitz(sigma, 1.0 / 3.0) - hurwitz(sigma, 2.0 / 3.0))


@dataclass(frozen=True)
class LimitInfo:
    """Predicted limit of E / N^(1+s/d), when a constant is known."""

    value: float | None
    status: str  # "exact", "conjectured", "unknown"
    lattice_constant: float | None


def theoretical_limit(params: RieszParams, manifold) -> LimitInfo:
    """Asymptotic constant over the weighted measure, per intrinsic dimension.

    d=1 is a proven constant (twice the zeta value); d=2 relies on the
    conjecture that the hexagonal lattice is optimal; d=3 has no known
    constant and yields an absent value.
    """
    s, d = params.s, params.dim
    if d == 1:
        const = 2.0 * riemann_zeta(s)
        status = "exact"
    elif d == 2:
        const = (math.sqrt(3.0) / 2.0) ** (0.5 * s) * epstein_zeta_hex(s)
        status = "conjectured"
    else:
        return LimitInfo(None, "constant unknown", None)
    if params.weight_mode == "unit":
        measure = manifold.hausdorff_measure
    else:
        measure = 1.0  # density weights normalize the measure away
    return LimitInfo(const / measure ** (s / d), status, const)


@dataclass(frozen=True)
class EnergyRatios:
    """Energies scaled by N^(1+s/d), truncated and full variants."""

    n: int
    exponent: float
    truncated: float
    full: float
    energy_truncated: float
    energy_full: float
    pair_terms: int


def energy_ratios(config, manifold, params, n_schedule=None, backend=None) -> EnergyRatios:
    box = manifold.periodic_box
    scale = manifold.diameter
    bd = energy_truncated(
        config, params, n_schedule=n_schedule, box=box, scale=scale, backend=backend
    )
    full = energy_full(config, params, box=box, scale=scale)
    n = config.n
    expo = 1.0 + params.s / params.dim
    denom = float(n) ** expo
    return EnergyRatios(n, expo, bd.total / denom, full / denom, bd.total, full, bd.pair_terms_evaluated)


def energy_ratio(config, manifold, params, n_schedule=None, backend=None) -> float:
    """Truncated energy over N^(1+s/d), the scale on which minima converge."""
    return energy_ratios(config, manifold, params, n_schedule=n_schedule, backend=backend).truncated


@dataclass(frozen=True)
class DistributionReport:
    regions: int
    counts: np.ndarray
    expected: np.ndarray
    max_rel_deviation: float


def distribution_test(manifold, config, density=None, bins=10) -> DistributionReport:
    """Compare empirical region counts against the target measure.

    Partitions depend on the manifold: slabs in z on the sphere, radial
    shells crossed with octants on the shell, per-axis grids on cube and
    torus, equal arcs on the circle. Expected masses are analytic.
    """
    if bins < 1:
        raise ValueError("invalid partition: need at least one bin")
    pts = _points_of(config)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("empty configuration")

    if isinstance(manifold, Sphere2):
        counts, expected = _sphere_slabs(manifold, pts, density, bins)
    elif isinstance(manifold, SphericalShell):
        counts, expected = _shell_regions(manifold, pts, density, bins)
    elif isinstance(manifold, UnitCube):
        counts, expected = _grid_regions(pts, np.ones(pts.shape[1]), density, bins)
    elif isinstance(manifold, FlatTorus):
        counts, expected = _grid_regions(
            np.mod(pts, manifold.periodic_box), manifold.periodic_box, density, bins
        )
    elif isinstance(manifold, Circle):
        counts, expected = _circle_arcs(pts, density, bins)
    else:
        raise ValueError(f"no partition defined for {type(manifold).__name__}")

    frac = counts / float(n)
    rel = np.abs(frac - expected) / expected
    return DistributionReport(len(counts), counts, expected, float(rel.max()))


def _require_uniform(density, where):
    if density is not None and not isinstance(density, UniformDensity):
        raise ValueError(f"unsupported density for the {where} partition")


def _sphere_slabs(manifold, pts, density, bins):
    r = manifold.radius
    edges = np.linspace(-r, r, bins + 1)
    z = np.clip(pts[:, 2], -r, r)
    idx = np.clip(np.searchsorted(edges, z, side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    if isinstance(density, ZPolyDensity):
        c = density._norm
        a, b = density.a, density.b
    else:
        _require_uniform(density, "sphere slab")
        c = 1.0 / (4.0 * math.pi * r * r)
        a, b = 1.0, 0.0
    lo, hi = edges[:-1], edges[1:]
    # slab area element is 2 pi r dz, so mass = 2 pi r c (a dz + b dz^3 / (3 r^2))
    expected = 2.0 * math.pi * r * c * (a * (hi - lo) + b * (hi**3 - lo**3) / (3.0 * r * r))
    return counts, expected


def _shell_regions(manifold, pts, density, bins):
    _require_uniform(density, "shell")
    r0, r1 = manifold.r_inner, manifold.r_outer
    # radial edges at equal enclosed volume, so every shell x octant region
    # carries the same expected mass under the uniform density
    frac = np.arange(bins + 1) / bins
    edges = np.cbrt(r0**3 + frac * (r1**3 - r0**3))
    rad = np.linalg.norm(pts, axis=1)
    ridx = np.clip(np.searchsorted(edges, rad, side="right") - 1, 0, bins - 1)
    oidx = (
        (pts[:, 0] >= 0).astype(np.int64) * 4
        + (pts[:, 1] >= 0).astype(np.int64) * 2
        + (pts[:, 2] >= 0).astype(np.int64)
    )
    idx = ridx * 8 + oidx
    counts = np.bincount(idx, minlength=8 * bins).astype(np.float64)
    expected = np.full(8 * bins, 1.0 / (8.0 * bins))
    return counts, expected


def _grid_regions(pts, sides, density, bins):
    _require_uniform(density, "grid")
    p = pts.shape[1]
    scaled = np.clip((pts / sides * bins).astype(np.int64), 0, bins - 1)
    strides = bins ** np.arange(p - 1, -1, -1)
    idx = scaled @ strides
    total = bins**p
    counts = np.bincount(idx, minlength=total).astype(np.float64)
    expected = np.full(total, 1.0 / total)
    return counts, expected


def _circle_arcs(pts, density, bins):
    _require_uniform(density, "arc")
    ang = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * math.pi)
    idx = np.clip((ang / (2.0 * math.pi) * bins).astype(np.int64), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    expected = np.full(bins, 1.0 / bins)
    return counts, expected


@dataclass(frozen=True)
class ZAuditRow:
    """One threshold of the short-pair audit.

    ``z_count`` is the ordered count of pairs at distance in (0, delta];
    the bound delta^s * E_s(omega) holds for every configuration, where
    E_s is the full unweighted energy. ``z_normalized`` divides the count
    by N * C^d with C = delta * N^(1/d); for quasi-uniform families it
    stays bounded as N grows.
    """

    delta: float
    z_count: int
    bound: float
    slack: float
    satisfied: bool
    z_normalized: float


def audit_Z_bounds(config, s, deltas, dim=None, box=None, scale=None):
    """Check z_count <= delta^s * E_s for each threshold; returns one row each."""
    pts = _points_of(config)
    cfg = config if isinstance(config, Configuration) else Configuration(pts, pts.shape[1])
    d = cfg.intrinsic_dim if dim is None else int(dim)
    e_full = energy_full_unweighted(cfg, float(s), box=box, scale=scale)
    n = cfg.n
    rows = []
    for delta in deltas:
        delta = float(delta)
        if delta <= 0:
            raise ValueError("audit threshold must be positive")
        z = count_Z(cfg, delta, box=box)
        bound = delta ** float(s) * e_full
        if z > bound:
            # a theorem, not a tolerance: any excess is an implementation bug
            raise AssertionError(
                f"pair-count bound violated: Z={z} > delta^s * E = {bound!r} at delta={delta!r}"
            )
        scaled = delta * float(n) ** (1.0 / d)
        rows.append(ZAuditRow(delta, z, bound, bound - z, z <= bound, z / (n * scaled**d)))
    return rows
