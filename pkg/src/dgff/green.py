"""Green functions of the killed simple random walk, i.e. DGFF covariances.

Normalisation is expected visit counts, ``G = (I - P_int)^{-1}``, so a region
with a single interior vertex has ``G = 1``.  On a box of side ``n`` this equals
``4 L^{-1}`` with ``L`` the Dirichlet lattice Laplacian, which is diagonal in
the sine basis; the spectral backend never materialises the full matrix unless
asked to.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dstn
from scipy.sparse import identity
from scipy.sparse.linalg import splu

from .errors import ResourceLimitError
from .lattice import Region, Vertex, build_box
from .walk import HarmonicKernel, PotentialKernel, warn_if_extrapolated

DENSE_CAP = 16384


def sine_basis(n: int) -> np.ndarray:
    """Orthonormal 1D Dirichlet modes: ``S[x-1, j-1] = sqrt(2/n) sin(pi j x / n)``."""
    k = np.arange(1, n)
    return math.sqrt(2.0 / n) * np.sin(np.pi * np.outer(k, k) / n)


def dirichlet_eigenvalues(n: int) -> np.ndarray:
    """``lambda_jk = 4 - 2 cos(pi j/n) - 2 cos(pi k/n)`` on an ``(n-1, n-1)`` grid."""
    c = 2.0 - 2.0 * np.cos(np.pi * np.arange(1, n) / n)
    return c[:, None] + c[None, :]


@dataclass(frozen=True, eq=False)
class GreenOperator:
    region: Region
    backend: str
    matrix: np.ndarray | None = None
    n: int | None = None
    origin: Vertex = Vertex(0, 0)
    weights: np.ndarray | None = None  # 4 / lambda_jk, spectral only
    basis: np.ndarray | None = None  # sine_basis(n), spectral only

    def _local(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=np.int64).reshape(-1, 2) - np.array(self.origin)
        if np.any((p < 1) | (p > self.n - 1)):
            raise ValueError("vertex is not interior to the box")
        return p - 1

    def entry(self, u, v) -> float:
        if self.backend == "dense":
            i, j = self.region.interior_index(u), self.region.interior_index(v)
            return float(self.matrix[i, j])
        (ux, uy), (vx, vy) = self._local([u, v])
        S = self.basis
        return float((S[ux] * S[vx]) @ self.weights @ (S[uy] * S[vy]))

    def column(self, v) -> np.ndarray:
        """``G(., v)`` over interior indices."""
        if self.backend == "dense":
            return self.matrix[:, self.region.interior_index(v)].copy()
        (vx, vy), = self._local([v])
        coeff = np.outer(self.basis[vx], self.basis[vy]) * self.weights
        return dstn(coeff, type=1, norm="ortho").ravel()

    def diagonal(self) -> np.ndarray:
        if self.backend == "dense":
            return np.diag(self.matrix).copy()
        Q = self.basis**2
        return (Q @ self.weights @ Q.T).ravel()

    def submatrix(self, pts) -> np.ndarray:
        """Covariance block for a list of interior vertices."""
        if self.backend == "dense":
            idx = self.region.interior_indices(pts)
            if np.any(idx < 0):
                raise ValueError("all vertices must be interior")
            return self.matrix[np.ix_(idx, idx)].copy()
        loc = self._local(pts)
        A, B = self.basis[loc[:, 0]], self.basis[loc[:, 1]]
        out = np.empty((len(loc), len(loc)))
        for a in range(len(loc)):
            out[a] = np.einsum("bj,jk,bk->b", A * A[a], self.weights, B * B[a])
        return 0.5 * (out + out.T)

    def to_dense(self, cap: int = DENSE_CAP) -> np.ndarray:
        if self.backend == "dense":
            return self.matrix
        m = self.region.n_interior
        if m > cap:
            raise ResourceLimitError(f"dense Green matrix of size {m} exceeds cap {cap}")
        phi = np.kron(self.basis, self.basis)
        g = (phi * self.weights.ravel()) @ phi.T
        return 0.5 * (g + g.T)


def green_dense(region: Region, cap: int = DENSE_CAP) -> GreenOperator:
    """Exact ``(I - P_int)^{-1}`` via a sparse LU factorisation."""
    m = region.n_interior
    if m == 0:
        raise ValueError("region has empty interior")
    if m > cap:
        raise ResourceLimitError(f"interior size {m} exceeds dense cap {cap}")
    p_int, _ = region.transition_blocks()
    lap = (identity(m, format="csc") - p_int).tocsc()
    g = splu(lap).solve(np.eye(m))
    resid = np.abs(lap @ g - np.eye(m)).max()
    assert resid <= 1e-10, f"Green solve residual {resid:.3g}"
    g = 0.5 * (g + g.T)
    g.setflags(write=False)
    return GreenOperator(region, "dense", matrix=g)


def green_spectral(n: int, origin=(0, 0)) -> GreenOperator:
    if n < 2:
        raise ValueError(f"box side length must be >= 2, got {n}")
    o = Vertex(int(origin[0]), int(origin[1]))
    w = 4.0 / dirichlet_eigenvalues(n)
    S = sine_basis(n)
    w.setflags(write=False)
    S.setflags(write=False)
    return GreenOperator(build_box(n, o), "spectral", n=n, origin=o, weights=w, basis=S)


def green_operator(region: Region, cap: int = DENSE_CAP) -> GreenOperator:
    """Spectral backend for boxes, dense otherwise."""
    if region.box is not None:
        origin, n = region.box
        return green_spectral(n, origin)
    return green_dense(region, cap)


@dataclass(frozen=True)
class PotentialGreen:
    value: float
    extrapolated: bool


def green_via_potential(region: Region, u, v, kernel: PotentialKernel,
                        hk: HarmonicKernel) -> PotentialGreen:
    """``G(u, v) = sum_w P_u(S_tau = w) a(w - v) - a(u - v)``."""
    if not (region.is_interior(u) and region.is_interior(v)):
        raise ValueError("u and v must be interior vertices")
    v_arr = np.asarray(v, dtype=np.int64)
    a_bnd, ext1 = kernel.lookup(region.boundary - v_arr)
    a_uv, ext2 = kernel.lookup(np.asarray(u, dtype=np.int64) - v_arr)
    row = hk.weights[region.interior_index(u)]
    warn_if_extrapolated(ext1 or ext2, "green_via_potential")
    return PotentialGreen(float(row @ a_bnd - a_uv[0]), ext1 or ext2)


@dataclass(frozen=True, eq=False)
class VarianceProfile:
    region: Region
    values: np.ndarray
    argmax: Vertex

    def __getitem__(self, v) -> float:
        return float(self.values[self.region.interior_index(v)])

    def as_dict(self) -> dict:
        return {Vertex(*p): float(x) for p, x in zip(self.region.interior.tolist(), self.values)}


def variance_profile(g: GreenOperator) -> VarianceProfile:
    d = g.diagonal()
    i = int(np.argmax(d))
    return VarianceProfile(g.region, d, Vertex(*g.region.interior[i].tolist()))


@dataclass(frozen=True)
class CorrelationPair:
    u: Vertex
    w: Vertex
    covariance: float
    correlation: float


def correlation(g: GreenOperator, pairs) -> list[CorrelationPair]:
    out = []
    for u, w in pairs:
        cov = g.entry(u, w)
        rho = cov / math.sqrt(g.entry(u, u) * g.entry(w, w))
        out.append(CorrelationPair(Vertex(*u), Vertex(*w), cov, rho))
    return out


def write_variance_csv(path, profile: VarianceProfile) -> None:
    with open(Path(path), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "y", "variance"])
        for (x, y), val in zip(profile.region.interior.tolist(), profile.values):
            wr.writerow([x, y, f"{val:.17g}"])


def write_pairs_csv(path, report: list[CorrelationPair]) -> None:
    with open(Path(path), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["ux", "uy", "wx", "wy", "covariance", "correlation"])
        for p in report:
            wr.writerow([p.u.x, p.u.y, p.w.x, p.w.y, f"{p.covariance:.17g}", f"{p.correlation:.17g}"])
