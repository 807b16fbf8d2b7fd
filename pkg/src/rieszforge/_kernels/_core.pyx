# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementation of the hot kernels.

Mirrors rieszforge._kernels.numpy_backend exactly: same candidate sets,
same filters, same per-term formulas. Sums may differ from the numpy
backend only by floating-point reassociation. Loops are plain C; the
caller guarantees contiguous float64/int64 inputs via the grid builder.
"""

import numpy as np

from libc.math cimport fabs, pow, rint, sqrt


cdef inline double _phi(double t, int kind, int k) noexcept:
    cdef double q
    if kind == 0:
        return 1.0 if t <= 1.0 else 0.0
    if t >= 1.0:
        return 0.0
    q = 1.0 - t * t
    return pow(q, k)


cdef inline double _dphi(double t, int kind, int k) noexcept:
    cdef double q
    if kind == 0:
        return 0.0
    if t >= 1.0:
        return 0.0
    q = 1.0 - t * t
    return -2.0 * k * t * pow(q, k - 1)


cdef inline Py_ssize_t _bsearch(const long long[::1] arr, long long val) noexcept:
    cdef Py_ssize_t lo = 0, hi = arr.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < val:
            lo = mid + 1
        else:
            hi = mid
    if lo < arr.shape[0] and arr[lo] == val:
        return lo
    return -1


cdef inline double _pair_dist(
    const double[:, ::1] pts,
    Py_ssize_t i,
    Py_ssize_t j,
    int p,
    bint boxed,
    const double[::1] box,
) noexcept:
    cdef double acc = 0.0, dd
    cdef int ax
    for ax in range(p):
        dd = pts[i, ax] - pts[j, ax]
        if boxed:
            # round-half-to-even, matching the vectorized backend
            dd -= box[ax] * rint(dd / box[ax])
        acc += dd * dd
    return sqrt(acc)


def pairs_blocks(
    points,
    cells,
    linear,
    order,
    starts,
    occ_linear,
    mins,
    maxs,
    strides,
    ncells,
    box,
    offsets,
    radius,
):
    """Enumerate unordered point pairs within ``radius`` from grid arrays.

    Same contract as the numpy backend: every pair appears exactly once,
    zero-distance pairs are returned, candidates counts distance
    evaluations.
    """
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const long long[:, ::1] cells_v = np.ascontiguousarray(cells, dtype=np.int64)
    cdef const long long[::1] order_v = np.ascontiguousarray(order, dtype=np.int64)
    cdef const long long[::1] starts_v = np.ascontiguousarray(starts, dtype=np.int64)
    cdef const long long[::1] occ_v = np.ascontiguousarray(occ_linear, dtype=np.int64)
    cdef const long long[::1] mins_v = np.ascontiguousarray(mins, dtype=np.int64)
    cdef const long long[::1] maxs_v = np.ascontiguousarray(maxs, dtype=np.int64)
    cdef const long long[::1] strides_v = np.ascontiguousarray(strides, dtype=np.int64)
    cdef const long long[:, ::1] offsets_v = np.ascontiguousarray(offsets, dtype=np.int64)

    cdef bint periodic = ncells is not None
    cdef const long long[::1] ncells_v = (
        np.ascontiguousarray(ncells, dtype=np.int64)
        if periodic
        else np.ones(pts.shape[1], dtype=np.int64)
    )
    cdef bint boxed = box is not None
    cdef const double[::1] box_v = (
        np.ascontiguousarray(box, dtype=np.float64)
        if boxed
        else np.ones(pts.shape[1], dtype=np.float64)
    )

    cdef double rad = float(radius)
    cdef int p = pts.shape[1]
    cdef Py_ssize_t ncell = occ_v.shape[0]
    cdef Py_ssize_t noff = offsets_v.shape[0]

    cdef Py_ssize_t cap = 1024
    if pts.shape[0] * 8 > cap:
        cap = pts.shape[0] * 8
    ii_arr = np.empty(cap, dtype=np.int64)
    jj_arr = np.empty(cap, dtype=np.int64)
    dd_arr = np.empty(cap, dtype=np.float64)
    cdef long long[::1] ii_v = ii_arr
    cdef long long[::1] jj_v = jj_arr
    cdef double[::1] dd_v = dd_arr

    cdef Py_ssize_t count = 0
    cdef long long candidates = 0

    cdef Py_ssize_t c, x, y, a0, a1, b0, b1, pos, first
    cdef Py_ssize_t pi, pj, o
    cdef int ax
    cdef bint zero, valid
    cdef long long tlin, coord
    cdef double d

    for c in range(ncell):
        a0 = starts_v[c]
        a1 = starts_v[c + 1]
        first = order_v[a0]

        # same-cell pairs; members appear in increasing point index
        for x in range(a0, a1):
            pi = order_v[x]
            for y in range(x + 1, a1):
                pj = order_v[y]
                candidates += 1
                d = _pair_dist(pts, pi, pj, p, boxed, box_v)
                if d <= rad:
                    if count == cap:
                        cap *= 2
                        ii_arr = np.resize(ii_arr, cap)
                        jj_arr = np.resize(jj_arr, cap)
                        dd_arr = np.resize(dd_arr, cap)
                        ii_v = ii_arr
                        jj_v = jj_arr
                        dd_v = dd_arr
                    ii_v[count] = pi
                    jj_v[count] = pj
                    dd_v[count] = d
                    count += 1

        # cross-cell pairs, one direction per unordered cell pair
        for o in range(noff):
            zero = True
            for ax in range(p):
                if offsets_v[o, ax] != 0:
                    zero = False
                    break
            if zero:
                continue
            valid = True
            tlin = 0
            for ax in range(p):
                coord = cells_v[first, ax] + offsets_v[o, ax]
                if periodic:
                    coord = coord % ncells_v[ax]
                    if coord < 0:
                        coord += ncells_v[ax]
                elif coord < mins_v[ax] or coord > maxs_v[ax]:
                    valid = False
                    break
                tlin += (coord - mins_v[ax]) * strides_v[ax]
            if not valid:
                continue
            if tlin <= occ_v[c]:
                continue
            pos = _bsearch(occ_v, tlin)
            if pos < 0:
                continue
            b0 = starts_v[pos]
            b1 = starts_v[pos + 1]
            for x in range(a0, a1):
                pi = order_v[x]
                for y in range(b0, b1):
                    pj = order_v[y]
                    candidates += 1
                    d = _pair_dist(pts, pi, pj, p, boxed, box_v)
                    if d <= rad:
                        if count == cap:
                            cap *= 2
                            ii_arr = np.resize(ii_arr, cap)
                            jj_arr = np.resize(jj_arr, cap)
                            dd_arr = np.resize(dd_arr, cap)
                            ii_v = ii_arr
                            jj_v = jj_arr
                            dd_v = dd_arr
                        ii_v[count] = pi
                        jj_v[count] = pj
                        dd_v[count] = d
                        count += 1

    return (
        ii_arr[:count].copy(),
        jj_arr[:count].copy(),
        dd_arr[:count].copy(),
        int(candidates),
    )


def energy_terms(dist, r, w, s, cutoff_kind, k):
    """Sum phi(u/r) w u^(-s) over pairs with u <= r; returns (total, terms)."""
    cdef const double[::1] d_v = np.ascontiguousarray(dist, dtype=np.float64)
    cdef const double[::1] r_v = np.ascontiguousarray(r, dtype=np.float64)
    cdef const double[::1] w_v = np.ascontiguousarray(w, dtype=np.float64)
    cdef double se = float(s)
    cdef int kind = int(cutoff_kind)
    cdef int kk = int(k)

    cdef Py_ssize_t m = d_v.shape[0], idx
    cdef long long terms = 0
    # Neumaier compensated accumulation
    cdef double total = 0.0, comp = 0.0, val, t, trial
    for idx in range(m):
        if d_v[idx] <= r_v[idx]:
            terms += 1
            t = d_v[idx] / r_v[idx]
            val = _phi(t, kind, kk) * w_v[idx] * pow(d_v[idx], -se)
            trial = total + val
            if fabs(total) >= fabs(val):
                comp += (total - trial) + val
            else:
                comp += (val - trial) + total
            total = trial
    return total + comp, int(terms)


def gradient_pairs(points, ii, jj, dist, r, w, vw, s, cutoff_kind, k, box, out):
    """Scatter per-pair gradient contributions of the truncated kernel."""
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const long long[::1] ii_v = np.ascontiguousarray(ii, dtype=np.int64)
    cdef const long long[::1] jj_v = np.ascontiguousarray(jj, dtype=np.int64)
    cdef const double[::1] d_v = np.ascontiguousarray(dist, dtype=np.float64)
    cdef const double[::1] r_v = np.ascontiguousarray(r, dtype=np.float64)
    cdef const double[::1] w_v = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, ::1] out_v = out

    cdef bint has_vw = vw is not None
    cdef const double[:, ::1] vw_v = (
        np.ascontiguousarray(vw, dtype=np.float64)
        if has_vw
        else np.zeros((1, pts.shape[1]))
    )
    cdef bint boxed = box is not None
    cdef const double[::1] box_v = (
        np.ascontiguousarray(box, dtype=np.float64)
        if boxed
        else np.ones(pts.shape[1], dtype=np.float64)
    )

    cdef double se = float(s)
    cdef int kind = int(cutoff_kind)
    cdef int kk = int(k)
    cdef int p = pts.shape[1]

    cdef Py_ssize_t m = d_v.shape[0], idx, pi, pj
    cdef int ax
    cdef double d, rr, ww, t, phi, dphi, um_s, radial, b, dd, e
    for idx in range(m):
        d = d_v[idx]
        rr = r_v[idx]
        if d > rr:
            continue
        pi = ii_v[idx]
        pj = jj_v[idx]
        ww = w_v[idx]
        t = d / rr
        phi = _phi(t, kind, kk)
        dphi = _dphi(t, kind, kk)
        um_s = pow(d, -se)
        radial = 2.0 * ww * um_s * (dphi / rr - se * phi / d)
        for ax in range(p):
            dd = pts[pi, ax] - pts[pj, ax]
            if boxed:
                dd -= box_v[ax] * rint(dd / box_v[ax])
            e = dd / d
            out_v[pi, ax] += radial * e
            out_v[pj, ax] -= radial * e
        if has_vw:
            b = 2.0 * phi * um_s * ww
            for ax in range(p):
                out_v[pi, ax] += b * vw_v[pi, ax]
                out_v[pj, ax] += b * vw_v[pj, ax]
