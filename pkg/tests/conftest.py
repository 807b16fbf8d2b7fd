"""Shared brute-force oracles.

Everything here recomputes quantities straight from their definitions with
plain O(N^2) scans, independently of the grid enumeration and the kernel
backends, so the fast paths always have something dumb and trustworthy to
answer to.
"""

import math

import numpy as np


def min_image(diff, box):
    if box is None:
        return diff
    box = np.asarray(box, dtype=np.float64)
    return diff - box * np.round(diff / box)


def brute_pair_set(pts, delta, box=None):
    """Unordered pairs (i, j), i < j, with 0 < distance <= delta."""
    n = pts.shape[0]
    out = set()
    for i in range(n - 1):
        d = min_image(pts[i + 1 :] - pts[i], box)
        dist = np.sqrt((d * d).sum(axis=1))
        for k in np.nonzero((dist <= delta) & (dist > 0.0))[0]:
            out.add((i, i + 1 + int(k)))
    return out


def brute_ordered_count(pts, delta, box=None):
    return 2 * len(brute_pair_set(pts, delta, box=box))


def _pair_arrays(pts, box):
    n = pts.shape[0]
    ii, jj = np.triu_indices(n, k=1)
    d = min_image(pts[ii] - pts[jj], box)
    return ii, jj, np.sqrt((d * d).sum(axis=1))


def cutoff_profile(cutoff, t):
    """phi(t) recomputed from the written formulas, not from evaluate()."""
    t = np.asarray(t, dtype=np.float64)
    kind = cutoff.describe()["kind"]
    if kind == "hard":
        return (t <= 1.0).astype(np.float64)
    if kind == "poly":
        k = cutoff.describe()["k"]
        return np.where(t < 1.0, np.maximum(1.0 - t * t, 0.0) ** k, 0.0)
    raise AssertionError(f"oracle does not know cutoff kind {kind!r}")


def pair_weights(params, xi, xj):
    """w(x, y) from the density definition: (sigma(x) sigma(y))**(-s/2d)."""
    if params.weight_mode == "unit":
        return np.ones(xi.shape[0])
    q = params.s / (2.0 * params.dim)
    return (params.density.sigma(xi) * params.density.sigma(xj)) ** (-q)


def brute_truncated_energy(pts, params, box=None, n_for_radius=None):
    """Ordered-pair sum of phi(u / r) * w * u**(-s) by direct scan."""
    n = pts.shape[0]
    nn = n if n_for_radius is None else int(n_for_radius)
    ii, jj, u = _pair_arrays(pts, box)
    assert np.all(u > 0.0), "oracle given coincident points"
    r = np.broadcast_to(
        np.asarray(params.pair_radius(pts[ii], pts[jj], nn), dtype=np.float64), u.shape
    )
    phi = cutoff_profile(params.cutoff, u / r)
    w = pair_weights(params, pts[ii], pts[jj])
    return 2.0 * math.fsum((phi * w * u ** (-params.s)).tolist())


def brute_full_energy(pts, params, box=None):
    """Untruncated ordered-pair sum of w * u**(-s)."""
    ii, jj, u = _pair_arrays(pts, box)
    assert np.all(u > 0.0), "oracle given coincident points"
    w = pair_weights(params, pts[ii], pts[jj])
    return 2.0 * math.fsum((w * u ** (-params.s)).tolist())


def fd_gradient(fn, pts, h):
    """Central differences of a scalar function of the coordinate array."""
    out = np.zeros_like(pts)
    flat = pts.ravel()
    for idx in range(flat.size):
        bump = np.zeros(flat.size)
        bump[idx] = h
        out.ravel()[idx] = (
            fn((flat + bump).reshape(pts.shape)) - fn((flat - bump).reshape(pts.shape))
        ) / (2.0 * h)
    return out


def max_component_rel_error(approx, exact):
    """Largest absolute component error over the largest exact component."""
    scale = float(np.max(np.abs(exact)))
    if scale == 0.0:
        return float(np.max(np.abs(approx)))
    return float(np.max(np.abs(approx - exact))) / scale
