"""Pair energies of point configurations, full and truncated, with derivatives.

The full energy sums w(x_i, x_j) |x_i - x_j|**(-s) over all ordered pairs
i != j. The truncated energy multiplies each term by phi(u / r) where phi
is a cutoff vanishing beyond 1 and r comes from the radius schedule, so only
pairs within the schedule's bound interact; those are enumerated through the
sparse cell grid at O(N + candidates) cost. Gradients and Hessians are
ambient derivatives of exactly the implemented formulas (finite differences
of the energy reproduce them), with the per-pair radius treated as constant
in the positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import Configuration
from .neighbors import CellGrid
from .weights import RieszParams

__all__ = [
    "EnergyBreakdown",
    "SparseHessian",
    "DegenerateConfigurationError",
    "energy_full",
    "energy_full_unweighted",
    "energy_truncated",
    "gradient_truncated",
    "hessian_truncated",
]

_DEGENERATE_FACTOR = 1e-14


class DegenerateConfigurationError(ValueError):
    """Two interacting points (nearly) coincide; the kernel value is meaningless."""


@dataclass(frozen=True)
class EnergyBreakdown:
    """Truncated-energy value plus the work counters that make cost auditable.

    ``pair_terms_evaluated`` counts unordered pairs within the cutoff bound
    whose kernel term was evaluated; ``candidate_distance_evals`` counts the
    distance computations performed during grid enumeration.
    """

    total: float
    pair_terms_evaluated: int
    candidate_distance_evals: int


def _degenerate_eps(points, box, scale=None):
    if scale is not None:
        return _DEGENERATE_FACTOR * float(scale)
    if box is not None:
        return _DEGENERATE_FACTOR * 0.5 * float(np.linalg.norm(box))
    if points.shape[0] == 0:
        return 0.0
    extent = float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))
    return _DEGENERATE_FACTOR * extent


def _point_sigmas(config, params):
    if params.weight_mode == "unit":
        return None
    return params.density.sigma(config.points)


def _full_sum(pts, s, sig, q, box, eps):
    # Upper triangle only, doubled at the end; one pow per pair on the
    # squared distance, and the separable weight (sig_i sig_j)**(-q) applied
    # as a per-point amplitude so no per-pair pow is spent on it.
    n = pts.shape[0]
    amp = None if sig is None else sig ** (-q)
    eps2 = eps * eps
    partials = []
    chunk = max(1, int(2**21 // n))
    for lo in range(0, n - 1, chunk):
        hi = min(lo + chunk, n - 1)
        block = pts[lo:hi]
        tail = pts[lo + 1 :]
        d = block[:, None, :] - tail[None, :, :]
        if box is not None:
            d = d - box * np.round(d / box)
        d2 = np.einsum("ijk,ijk->ij", d, d)
        # column t holds point lo+1+t; entries with t < row are j <= i duplicates
        d2[np.tril_indices(hi - lo, k=-1)] = np.inf
        if float(d2.min()) <= eps2:
            raise DegenerateConfigurationError(
                "degenerate configuration: coincident or nearly coincident points"
            )
        kern = d2 ** (-0.5 * s)  # masked entries become inf**neg = 0
        if amp is None:
            partials.append(float(kern.sum()))
        else:
            partials.append(float(amp[lo:hi] @ (kern @ amp[lo + 1 :])))
    return 2.0 * math.fsum(partials)


def energy_full(config: Configuration, params: RieszParams, box=None, scale=None):
    """Untruncated ordered-pair energy by direct summation (O(N^2))."""
    if config.n < 2:
        return 0.0
    pts = config.points
    eps = _degenerate_eps(pts, box, scale)
    sig = _point_sigmas(config, params)
    return _full_sum(pts, params.s, sig, params.weight_exponent, box, eps)


def energy_full_unweighted(config: Configuration, s: float, box=None, scale=None):
    """Unit-weight full energy at an arbitrary positive exponent.

    Counting audits need this for exponents outside the short-range regime,
    so it bypasses the parameter validation.
    """
    if s <= 0:
        raise ValueError("energy exponent must be positive")
    if config.n < 2:
        return 0.0
    pts = config.points
    eps = _degenerate_eps(pts, box, scale)
    return _full_sum(pts, float(s), None, 0.0, box, eps)


def _enumerate_pairs(points, delta, box, backend):
    """Grid enumeration with a direct fallback for too-coarse periodic boxes."""
    try:
        grid = CellGrid(points, delta, box=box)
    except ValueError:
        if box is None:
            raise
        n = points.shape[0]
        iu, ju = np.triu_indices(n, k=1)
        d = points[iu] - points[ju]
        d = d - box * np.round(d / box)
        dist = np.linalg.norm(d, axis=1)
        keep = dist <= delta
        return iu[keep], ju[keep], dist[keep], int(iu.size)
    return grid.pairs(backend=backend)


def _pair_data(config, params, n_schedule, box, backend):
    """Shared setup: enumerate pairs, evaluate radii and weights."""
    pts = config.points
    n_sched = config.n if n_schedule is None else int(n_schedule)
    delta = params.radius_sup(n_sched)
    ii, jj, dist, candidates = _enumerate_pairs(pts, delta, box, backend)
    r = params.pair_radius(pts[ii], pts[jj], n_sched)
    w = params.pair_weight(pts[ii], pts[jj])
    return ii, jj, dist, r, w, candidates


def _energy_given_pairs(points, ii, jj, dist, candidates, params, n_sched, box, scale, backend):
    """Energy from an already enumerated pair list (optimizer fast path)."""
    r = params.pair_radius(points[ii], points[jj], n_sched)
    w = params.pair_weight(points[ii], points[jj])
    _check_degenerate(dist, r, points, box, scale)
    kind, k = _cutoff_code(params.cutoff)
    impl = _kernels.get_backend(backend)
    total, terms = impl.energy_terms(dist, r, w, params.s, kind, k)
    return EnergyBreakdown(2.0 * total, int(terms), int(candidates))


def _gradient_given_pairs(points, ii, jj, dist, params, n_sched, box, scale, backend, out):
    """Gradient from an already enumerated pair list (optimizer fast path)."""
    r = params.pair_radius(points[ii], points[jj], n_sched)
    w = params.pair_weight(points[ii], points[jj])
    _check_degenerate(dist, r, points, box, scale)
    kind, k = _cutoff_code(params.cutoff)
    vw = params.log_weight_gradient(points)
    impl = _kernels.get_backend(backend)
    impl.gradient_pairs(points, ii, jj, dist, r, w, vw, params.s, kind, k, box, out)
    return out


def _check_degenerate(dist, r, points, box, scale):
    eps = _degenerate_eps(points, box, scale)
    interacting = dist[dist <= r]
    if interacting.size and float(interacting.min()) <= eps:
        raise DegenerateConfigurationError(
            "degenerate configuration: coincident or nearly coincident interacting points"
        )


def _cutoff_code(cutoff):
    desc = cutoff.describe()
    if desc["kind"] == "hard":
        return 0, 0
    return 1, int(desc["k"])


def energy_truncated(
    config: Configuration,
    params: RieszParams,
    n_schedule=None,
    box=None,
    scale=None,
    backend=None,
) -> EnergyBreakdown:
    """Cutoff-weighted ordered-pair energy via the cell grid."""
    if config.n < 2:
        return EnergyBreakdown(0.0, 0, 0)
    pts = config.points
    n_sched = config.n if n_schedule is None else int(n_schedule)
    delta = params.radius_sup(n_sched)
    ii, jj, dist, candidates = _enumerate_pairs(pts, delta, box, backend)
    return _energy_given_pairs(
        pts, ii, jj, dist, candidates, params, n_sched, box, scale, backend
    )


def gradient_truncated(
    config: Configuration,
    params: RieszParams,
    n_schedule=None,
    box=None,
    scale=None,
    backend=None,
):
    """Ambient gradient of the truncated energy, shape (N, p).

    Tangent projection is the optimizer's job; boundary or surface
    constraints are not applied here.
    """
    out = np.zeros_like(config.points)
    if config.n < 2:
        return out
    pts = config.points
    n_sched = config.n if n_schedule is None else int(n_schedule)
    delta = params.radius_sup(n_sched)
    ii, jj, dist, _ = _enumerate_pairs(pts, delta, box, backend)
    return _gradient_given_pairs(
        pts, ii, jj, dist, params, n_sched, box, scale, backend, out
    )


@dataclass
class SparseHessian:
    """Symmetric second derivative in lower-triangular COO triples.

    Nonzeros live only in block x block diagonal blocks and the blocks of
    interacting pairs; ``block`` is the ambient dimension per point and
    ``dim`` the flat index space size N * block.
    """

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    dim: int
    block: int
    _csr: object = None

    def to_sparse(self):
        """Full symmetric matrix as scipy CSR (built once, then cached)."""
        if self._csr is None:
            from scipy.sparse import coo_matrix, diags

            lower = coo_matrix(
                (self.values, (self.rows, self.cols)), shape=(self.dim, self.dim)
            ).tocsr()
            strict = lower - diags(lower.diagonal())
            self._csr = lower + strict.T
        return self._csr

    def matvec(self, v):
        v = np.asarray(v, dtype=np.float64).ravel()
        if v.size != self.dim:
            raise ValueError(f"vector length {v.size} != Hessian dimension {self.dim}")
        return self.to_sparse() @ v

    def block_pairs(self):
        """Set of (i, j) point-index pairs, i > j, holding off-diagonal blocks."""
        bi = self.rows // self.block
        bj = self.cols // self.block
        off = bi != bj
        return set(zip(bi[off].tolist(), bj[off].tolist()))


def hessian_truncated(
    config: Configuration,
    params: RieszParams,
    n_schedule=None,
    box=None,
    scale=None,
):
    """Sparse ambient Hessian of the truncated energy.

    Requires a cutoff with two usable derivatives (polynomial order >= 3).
    """
    if not params.cutoff.has_smooth_hessian:
        raise ValueError(
            "Hessian requires a twice-differentiable cutoff (polynomial order >= 3)"
        )
    pts = config.points
    n, p = pts.shape
    dim = n * p
    if n < 2:
        empty = np.empty(0, dtype=np.int64)
        return SparseHessian(empty, empty.copy(), np.empty(0), dim, p)

    ii, jj, dist, r, w, _ = _pair_data(config, params, n_schedule, box, None)
    _check_degenerate(dist, r, pts, box, scale)
    keep = dist <= r
    ii, jj, dist, r, w = ii[keep], jj[keep], dist[keep], r[keep], w[keep]

    u = dist
    phi, d1, d2 = params.cutoff.evaluate(u / r)
    s = params.s
    us = u ** (-s)
    g0 = phi * us
    g1 = d1 / r * us - s * phi * us / u
    g2 = d2 / (r * r) * us - 2.0 * s * d1 / r * us / u + s * (s + 1.0) * phi * us / (u * u)

    delta = pts[ii] - pts[jj]
    if box is not None:
        delta = delta - box * np.round(delta / box)
    e = delta / u[:, None]
    eye = np.eye(p)
    ee = e[:, :, None] * e[:, None, :]
    radial = g2[:, None, None] * ee + (g1 / u)[:, None, None] * (eye - ee)

    if params.weight_mode == "unit":
        off = -w[:, None, None] * radial
        diag_contrib_i = w[:, None, None] * radial
        diag_contrib_j = diag_contrib_i
    else:
        sig = params.density.sigma(pts)
        gs = params.density.grad_sigma(pts)
        hs = params.density.hess_sigma(pts)
        q = params.weight_exponent
        v = -q * gs / sig[:, None]  # grad_x w = w v(x)
        vi, vj = v[ii], v[jj]
        evj = e[:, :, None] * vj[:, None, :]
        vie = vi[:, :, None] * e[:, None, :]
        vivj = vi[:, :, None] * vj[:, None, :]
        off = w[:, None, None] * (
            -radial + g1[:, None, None] * (evj - vie) + g0[:, None, None] * vivj
        )
        # d/dx of v(x): -q (H sigma / sigma - grad grad^T / sigma^2)
        dv = -q * (
            hs / sig[:, None, None]
            - gs[:, :, None] * gs[:, None, :] / (sig**2)[:, None, None]
        )
        vvi = vi[:, :, None] * vi[:, None, :]
        vvj = vj[:, :, None] * vj[:, None, :]
        evi = e[:, :, None] * vi[:, None, :]
        vje = vj[:, :, None] * e[:, None, :]
        diag_contrib_i = w[:, None, None] * (
            radial
            + g1[:, None, None] * (evi + vie)
            + g0[:, None, None] * (vvi + dv[ii])
        )
        diag_contrib_j = w[:, None, None] * (
            radial
            - g1[:, None, None] * (evj + vje)
            + g0[:, None, None] * (vvj + dv[jj])
        )

    # ordered-pair double counting gives every block a factor 2
    off = 2.0 * off
    diag = np.zeros((n, p, p))
    np.add.at(diag, ii, 2.0 * diag_contrib_i)
    np.add.at(diag, jj, 2.0 * diag_contrib_j)

    rows_parts, cols_parts, vals_parts = [], [], []

    # off-diagonal blocks, stored with the larger point index as the row
    if ii.size:
        bi = np.maximum(ii, jj)
        bj = np.minimum(ii, jj)
        swap = ii < jj  # stored block must be d^2/dx_bi dx_bj = M or M^T
        blocks = np.where(swap[:, None, None], np.swapaxes(off, 1, 2), off)
        l_idx, k_idx = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
        rows_parts.append(
            (bi[:, None, None] * p + l_idx[None, :, :]).ravel()
        )
        cols_parts.append(
            (bj[:, None, None] * p + k_idx[None, :, :]).ravel()
        )
        vals_parts.append(blocks.ravel())

    # diagonal blocks, lower triangle only
    tri_l, tri_k = np.tril_indices(p)
    pts_idx = np.arange(n)
    rows_parts.append((pts_idx[:, None] * p + tri_l[None, :]).ravel())
    cols_parts.append((pts_idx[:, None] * p + tri_k[None, :]).ravel())
    vals_parts.append(diag[:, tri_l, tri_k].ravel())

    rows = np.concatenate(rows_parts).astype(np.int64)
    cols = np.concatenate(cols_parts).astype(np.int64)
    vals = np.concatenate(vals_parts)
    nonzero = vals != 0.0
    return SparseHessian(rows[nonzero], cols[nonzero], vals[nonzero], dim, p)
