"""Finite subregions of Z^2: boxes, discrete balls, annuli.

A box of side length ``n`` is the vertex set ``{origin + (x, y): 0 <= x, y <= n}``,
so it has ``n + 1`` vertices per side and ``(n - 1)**2`` interior vertices.
The boundary of a region is the set of its vertices having at least one
lattice neighbour outside the region; everything else is interior.

Interior vertices are indexed densely in lexicographic ``(x, y)`` order.  For a
box at the origin this is the C-order ravel of an ``(n - 1, n - 1)`` array
indexed ``[x - 1, y - 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

_INT32 = (-(2**31), 2**31 - 1)

# +x, -x, +y, -y
STEPS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)


class Vertex(NamedTuple):
    x: int
    y: int


def neighbors(v) -> list[Vertex]:
    """The four axis neighbours of ``v`` in the fixed order +x, -x, +y, -y."""
    x, y = int(v[0]), int(v[1])
    return [Vertex(x + 1, y), Vertex(x - 1, y), Vertex(x, y + 1), Vertex(x, y - 1)]


class Region:
    """Immutable finite vertex set with its interior/boundary split.

    Parameters
    ----------
    vertices : iterable of (x, y)
        Vertex set; duplicates are ignored.
    box : (origin, n), optional
        Set by :func:`build_box` so that spectral backends can recognise boxes.
    """

    def __init__(self, vertices: Iterable, box: tuple[Vertex, int] | None = None):
        pts = np.asarray(list(vertices) if not isinstance(vertices, np.ndarray) else vertices,
                         dtype=np.int64).reshape(-1, 2)
        if pts.size == 0:
            raise ValueError("region must contain at least one vertex")
        if pts.min() < _INT32[0] or pts.max() > _INT32[1]:
            raise ValueError("vertex coordinates must fit in 32-bit signed range")
        pts = np.unique(pts, axis=0)  # lexicographic (x, y)

        lo = pts.min(axis=0) - 1
        shape = tuple(pts.max(axis=0) - lo + 2)
        mask = np.zeros(shape, dtype=bool)
        loc = pts - lo
        mask[loc[:, 0], loc[:, 1]] = True
        full = np.ones(len(pts), dtype=bool)
        for dx, dy in STEPS:
            full &= mask[loc[:, 0] + dx, loc[:, 1] + dy]

        self.vertices = pts
        self.interior = pts[full]
        self.boundary = pts[~full]
        self.box = box
        self._lo = lo
        # dense index grids over the padded bounding box; -1 elsewhere
        self._interior_grid = np.full(shape, -1, dtype=np.int64)
        self._boundary_grid = np.full(shape, -1, dtype=np.int64)
        li, lb = self.interior - lo, self.boundary - lo
        self._interior_grid[li[:, 0], li[:, 1]] = np.arange(len(li))
        self._boundary_grid[lb[:, 0], lb[:, 1]] = np.arange(len(lb))
        for a in (self.vertices, self.interior, self.boundary,
                  self._interior_grid, self._boundary_grid):
            a.setflags(write=False)

    def __repr__(self) -> str:
        return (f"Region(|V|={len(self.vertices)}, interior={self.n_interior}, "
                f"boundary={self.n_boundary})")

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    def _lookup(self, grid: np.ndarray, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=np.int64).reshape(-1, 2) - self._lo
        out = np.full(len(p), -1, dtype=np.int64)
        ok = np.all((p >= 0) & (p < np.array(grid.shape)), axis=1)
        out[ok] = grid[p[ok, 0], p[ok, 1]]
        return out

    def interior_indices(self, pts) -> np.ndarray:
        """Dense interior index for each point, -1 if not interior."""
        return self._lookup(self._interior_grid, pts)

    def boundary_indices(self, pts) -> np.ndarray:
        """Boundary index for each point, -1 if not a boundary vertex."""
        return self._lookup(self._boundary_grid, pts)

    def interior_index(self, v) -> int:
        i = int(self.interior_indices([v])[0])
        if i < 0:
            raise ValueError(f"{tuple(v)} is not an interior vertex")
        return i

    def is_interior(self, v) -> bool:
        return bool(self.interior_indices([v])[0] >= 0)

    def is_boundary(self, v) -> bool:
        return bool(self.boundary_indices([v])[0] >= 0)

    def contains(self, v) -> bool:
        return self.is_interior(v) or self.is_boundary(v)

    def transition_blocks(self):
        """Sparse (interior -> interior, interior -> boundary) one-step matrices.

        Entries are 1/4 per lattice edge, i.e. the simple random walk killed on
        leaving the interior.
        """
        from scipy import sparse

        m, b = self.n_interior, self.n_boundary
        rows_i, cols_i, rows_b, cols_b = [], [], [], []
        idx = np.arange(m)
        for step in STEPS:
            nb = self.interior + step
            ii = self.interior_indices(nb)
            bi = self.boundary_indices(nb)
            rows_i.append(idx[ii >= 0]); cols_i.append(ii[ii >= 0])
            rows_b.append(idx[bi >= 0]); cols_b.append(bi[bi >= 0])
        ri, ci = np.concatenate(rows_i), np.concatenate(cols_i)
        rb, cb = np.concatenate(rows_b), np.concatenate(cols_b)
        p_int = sparse.csr_matrix((np.full(len(ri), 0.25), (ri, ci)), shape=(m, m))
        p_bnd = sparse.csr_matrix((np.full(len(rb), 0.25), (rb, cb)), shape=(m, b))
        return p_int, p_bnd

    def label_grid(self):
        """Padded bounding-box grid: 0 outside, 1 interior, 2 boundary; plus its offset."""
        grid = np.zeros(self._interior_grid.shape, dtype=np.int8)
        grid[self._interior_grid >= 0] = 1
        grid[self._boundary_grid >= 0] = 2
        return grid, self._lo.copy()


def build_box(n: int, origin=(0, 0)) -> Region:
    """Box of side length ``n`` (``(n+1) x (n+1)`` vertices) with lower-left corner ``origin``."""
    if n < 2:
        raise ValueError(f"box side length must be >= 2 to have an interior, got {n}")
    ox, oy = int(origin[0]), int(origin[1])
    xs, ys = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    pts = np.column_stack([xs.ravel() + ox, ys.ravel() + oy])
    return Region(pts, box=(Vertex(ox, oy), n))


def _disc_points(center, radius: float) -> np.ndarray:
    cx, cy = int(center[0]), int(center[1])
    r = int(np.floor(radius))
    xs, ys = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    keep = xs**2 + ys**2 <= radius * radius
    return np.column_stack([xs[keep] + cx, ys[keep] + cy])


@dataclass(frozen=True, eq=False)
class DiscreteBall:
    center: Vertex
    radius: int
    region: Region


def build_ball(center, radius: int) -> DiscreteBall:
    """Closed Euclidean ball ``{v : |v - center| <= radius}``."""
    if radius < 2:
        raise ValueError(f"ball radius must be >= 2, got {radius}")
    c = Vertex(int(center[0]), int(center[1]))
    return DiscreteBall(c, int(radius), Region(_disc_points(c, radius)))


@dataclass(frozen=True, eq=False)
class Annulus:
    """``C(outer)`` minus the interior of ``C(inner)``.

    Its boundary is exactly the union of the inner and outer ball boundaries.
    """

    center: Vertex
    inner: int
    outer: int
    region: Region
    inner_ball: DiscreteBall
    outer_ball: DiscreteBall


def build_annulus(center, inner: int, outer: int) -> Annulus:
    if not 2 <= inner < outer:
        raise ValueError(f"need 2 <= inner < outer, got inner={inner}, outer={outer}")
    big = build_ball(center, outer)
    small = build_ball(center, inner)
    hole = {tuple(p) for p in small.region.interior.tolist()}
    pts = [p for p in big.region.vertices.tolist() if tuple(p) not in hole]
    return Annulus(big.center, inner, outer, Region(pts), small, big)


def box_center(n: int, origin=(0, 0)) -> Vertex:
    """Most central vertex of a box; for odd ``n`` the lower-left of the four central ones."""
    return Vertex(int(origin[0]) + n // 2, int(origin[1]) + n // 2)
