"""Fixed-radius near-neighbor engine over a sparse cell grid.

Points are bucketed into cubical cells of side ``cell_size`` (component-wise
``floor(x / cell_size)``; wrapped first on periodic boxes). Candidate pairs
are drawn only from the 3^p adjacent-cell neighborhood of each occupied
cell, so enumerating all pairs within a radius costs O(N + candidates)
instead of O(N^2). Memory stays proportional to N plus the number of
occupied cells; the virtual grid volume is never materialized.

A grid may be queried with drifted coordinates: as long as no point moved
more than (cell_size - radius) / 2 from its position at build time, the
stale cell assignments still cover every pair within ``radius``. Larger
drift raises StaleGridError. This is what lets an optimizer rebuild only
every few steps without ever missing an interaction.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import _kernels
from .geometry import Configuration

__all__ = ["CellGrid", "StaleGridError", "build_grid", "for_each_pair_within", "count_Z"]

_MAX_LINEAR_SPAN = 2**62


class StaleGridError(RuntimeError):
    """The grid no longer matches the configuration it is asked about."""


class CellGrid:
    """Sparse bucket grid over one snapshot of point coordinates."""

    def __init__(self, points, cell_size, box=None):
        points = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
        if points.ndim != 2 or points.shape[0] == 0:
            raise ValueError("cannot build a grid over an empty configuration")
        cell_size = float(cell_size)
        if not cell_size > 0 or not np.isfinite(cell_size):
            raise ValueError(f"invalid cell size {cell_size!r}")
        n, p = points.shape

        self._points = points.copy()
        self.cell_size = cell_size
        self.box = None if box is None else np.asarray(box, dtype=np.float64).copy()

        if self.box is not None:
            if self.box.shape != (p,) or np.any(self.box <= 0):
                raise ValueError("periodic box must hold one positive side per axis")
            ncells = np.maximum((self.box / cell_size).astype(np.int64), 1)
            if np.any(ncells < 3):
                raise ValueError(
                    "periodic box too small for this cell size "
                    "(needs at least 3 cells per side)"
                )
            wrapped = np.mod(self._points, self.box)
            per_dim = self.box / ncells  # >= cell_size per axis
            cells = np.minimum((wrapped / per_dim).astype(np.int64), ncells - 1)
            cells = np.maximum(cells, 0)
            mins = np.zeros(p, dtype=np.int64)
            maxs = ncells - 1
            extents = ncells.astype(np.int64)
            self._ncells = ncells
        else:
            cells = np.floor(self._points / cell_size).astype(np.int64)
            mins = cells.min(axis=0)
            maxs = cells.max(axis=0)
            extents = maxs - mins + 1
            self._ncells = None
        if np.prod(extents.astype(np.float64)) > _MAX_LINEAR_SPAN:
            raise ValueError("cell size too small for the point extent")

        strides = np.ones(p, dtype=np.int64)
        for axis in range(p - 2, -1, -1):
            strides[axis] = strides[axis + 1] * extents[axis + 1]
        linear = (cells - mins) @ strides

        order = np.argsort(linear, kind="stable").astype(np.int64)
        sorted_linear = linear[order]
        boundary = np.nonzero(np.diff(sorted_linear))[0] + 1
        starts = np.concatenate([[0], boundary, [n]]).astype(np.int64)
        occ_linear = sorted_linear[starts[:-1]]

        self._cells = cells
        self._linear = linear
        self._order = order
        self._starts = starts
        self._occ_linear = occ_linear
        self._mins = mins
        self._maxs = maxs
        self._strides = strides
        self._offsets = np.array(
            list(itertools.product((-1, 0, 1), repeat=p)), dtype=np.int64
        )

    @property
    def point_count(self) -> int:
        return self._points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self._points.shape[1]

    @property
    def points(self):
        """Read-only view of the build-time coordinates."""
        view = self._points.view()
        view.setflags(write=False)
        return view

    @property
    def occupied_cells(self) -> dict:
        """Cell-index tuple -> list of point indices (inspection view)."""
        out = {}
        for c in range(self._occ_linear.size):
            members = self._order[self._starts[c] : self._starts[c + 1]]
            key = tuple(int(v) for v in self._cells[members[0]])
            out[key] = [int(m) for m in members]
        return out

    def max_drift(self, points) -> float:
        """Largest displacement of ``points`` from the build snapshot."""
        delta = points - self._points
        if self.box is not None:
            delta = delta - self.box * np.round(delta / self.box)
        return float(np.sqrt((delta * delta).sum(axis=1).max()))

    def pairs(self, radius=None, points=None, backend=None):
        """All unordered pairs within ``radius`` as (i, j, dist, candidates).

        ``points`` defaults to the build snapshot; drifted coordinates are
        accepted while max drift <= (cell_size - radius) / 2, which keeps
        the enumeration exact.
        """
        radius = self.cell_size if radius is None else float(radius)
        if not 0 < radius <= self.cell_size:
            raise ValueError(
                f"query radius {radius} must lie in (0, cell_size={self.cell_size}]"
            )
        if points is None:
            pts = self._points
        else:
            pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
            if pts.shape != self._points.shape:
                raise StaleGridError(
                    "stale grid: configuration shape does not match the build snapshot"
                )
            allowed = 0.5 * (self.cell_size - radius)
            if self.max_drift(pts) > allowed:
                raise StaleGridError(
                    "stale grid: points drifted beyond the enumeration guarantee; rebuild"
                )
        impl = _kernels.get_backend(backend)
        ii, jj, dist, candidates = impl.pairs_blocks(
            pts,
            self._cells,
            self._linear,
            self._order,
            self._starts,
            self._occ_linear,
            self._mins,
            self._maxs,
            self._strides,
            self._ncells,
            self.box,
            self._offsets,
            radius,
        )
        return ii, jj, dist, int(candidates)

    def candidate_bound(self) -> int:
        """Sum over points of the occupancy of their 3^p neighborhoods."""
        occupancy = dict(
            zip(self._occ_linear.tolist(), np.diff(self._starts).tolist())
        )
        total = 0
        for c in range(self._occ_linear.size):
            count = self._starts[c + 1] - self._starts[c]
            vec = self._cells[self._order[self._starts[c]]]
            neigh = 0
            for off in self._offsets:
                target = vec + off
                if self._ncells is not None:
                    target = np.mod(target, self._ncells)
                elif np.any(target < self._mins) or np.any(target > self._maxs):
                    continue
                lin = int((target - self._mins) @ self._strides)
                neigh += occupancy.get(lin, 0)
            total += int(count) * neigh
        return total


def build_grid(config: Configuration, delta: float, box=None) -> CellGrid:
    """Bucket a configuration into a cell grid of side ``delta``."""
    return CellGrid(config.points, delta, box=box)


def for_each_pair_within(grid: CellGrid, config: Configuration, delta, visitor):
    """Invoke ``visitor(i, j, dist)`` once per unordered pair with 0 < dist <= delta.

    The grid must have been built from exactly this configuration (else
    StaleGridError) with cell_size >= delta.
    """
    if config.points.shape != grid.points.shape or not np.array_equal(
        config.points, grid.points
    ):
        raise StaleGridError("stale grid: built from a different configuration")
    ii, jj, dist, _ = grid.pairs(radius=delta)
    for a, b, d in zip(ii.tolist(), jj.tolist(), dist.tolist()):
        if d > 0.0:
            visitor(a, b, d)


def _brute_pair_count(points, delta, box):
    n = points.shape[0]
    total = 0
    chunk = max(1, int(2**22 // max(n, 1)))
    for lo in range(0, n, chunk):
        block = points[lo : lo + chunk]
        d = block[:, None, :] - points[None, :, :]
        if box is not None:
            d = d - box * np.round(d / box)
        dist2 = (d * d).sum(axis=-1)
        within = (dist2 <= delta * delta) & (dist2 > 0.0)
        within[:, lo : lo + block.shape[0]] &= ~np.eye(block.shape[0], dtype=bool)
        total += int(np.count_nonzero(within))
    return total


def count_Z(config: Configuration, delta: float, box=None) -> int:
    """Number of ordered pairs with 0 < |x_i - x_j| <= delta."""
    delta = float(delta)
    if not delta > 0:
        raise ValueError(f"invalid cell size {delta!r}")
    if config.n < 2:
        return 0
    try:
        grid = CellGrid(config.points, delta, box=box)
    except ValueError:
        if box is None:
            raise
        # periodic box too coarse for a grid: fall back to direct counting
        return _brute_pair_count(config.points, delta, box)
    _, _, dist, _ = grid.pairs()
    return 2 * int(np.count_nonzero(dist > 0.0))
