"""Random-walk potential theory on Z^2.

Exact objects (potential kernel, harmonic measure, hitting probabilities) are
computed by recurrence or sparse linear solves; :func:`mc_hit_before_exit` is
the Monte Carlo counterpart used where the geometry is too large to solve.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numba as nb
import numpy as np
from scipy.sparse import identity
from scipy.sparse.linalg import splu

from .errors import ResourceLimitError
from .lattice import Region, Vertex, build_annulus
from .rng import MASK64, counter_word

MAX_KERNEL_ENTRIES = 2**20

# the bundled TBB is too old for numba; skip it quietly
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


@dataclass(frozen=True, eq=False)
class PotentialKernel:
    """Potential kernel ``a`` of the simple random walk on Z^2.

    ``table[|dx|, |dy|]`` holds exact values for ``max(|dx|, |dy|) <= max_radius``.
    ``kappa0`` is the additive constant of the large-|z| expansion
    ``a(z) ~ (2/pi) log|z| + kappa0``, fitted to the exact table.
    """

    table: np.ndarray
    max_radius: int
    kappa0: float

    def __call__(self, dz) -> float:
        dx, dy = abs(int(dz[0])), abs(int(dz[1]))
        if max(dx, dy) > self.max_radius:
            raise KeyError(f"offset {tuple(dz)} outside exact table (radius {self.max_radius})")
        return float(self.table[dx, dy])

    def lookup(self, dz) -> tuple[np.ndarray, bool]:
        """Vectorised lookup; offsets beyond the table fall back to the asymptotic form.

        Returns the values and whether any fallback happened.
        """
        d = np.abs(np.asarray(dz, dtype=np.int64).reshape(-1, 2))
        inside = d.max(axis=1) <= self.max_radius
        out = np.empty(len(d))
        out[inside] = self.table[d[inside, 0], d[inside, 1]]
        if not inside.all():
            r = np.hypot(d[~inside, 0], d[~inside, 1])
            out[~inside] = 2.0 / math.pi * np.log(r) + self.kappa0
        return out, not bool(inside.all())

    def asymptotic(self, dz) -> float:
        return potential_kernel_asymptotic(dz, self.kappa0)


def _exact_rational_table(R: int) -> dict:
    # a(x, y) = p + q/pi with rational p, q; exact arithmetic avoids the
    # exponential error growth of the harmonicity recursion.
    zero = (Fraction(0), Fraction(0))
    a = {(0, 0): zero, (1, 0): (Fraction(1), Fraction(0)), (1, 1): (Fraction(0), Fraction(4))}
    odd_harmonic = Fraction(1)

    def get(x, y):
        x, y = abs(x), abs(y)
        return a[(x, y)] if x >= y else a[(y, x)]

    for x in range(1, R):
        for y in range(x + 1):
            if y == x:
                # harmonicity at (x, x) plus the reflection a(x, x+1) = a(x+1, x)
                s, t = a[(x, x)], get(x, x - 1)
                a[(x + 1, x)] = (2 * s[0] - t[0], 2 * s[1] - t[1])
            else:
                c, l, u, d = a[(x, y)], get(x - 1, y), get(x, y + 1), get(x, y - 1)
                a[(x + 1, y)] = tuple(4 * c[i] - l[i] - u[i] - d[i] for i in range(2))
        odd_harmonic += Fraction(1, 2 * x + 1)
        a[(x + 1, x + 1)] = (Fraction(0), 4 * odd_harmonic)
    return a


def potential_kernel(max_radius: int = 64, max_entries: int = MAX_KERNEL_ENTRIES) -> PotentialKernel:
    """Exact potential kernel on ``|z|_inf <= max_radius``.

    Seeds ``a(0,0) = 0``, ``a(1,0) = 1`` and the closed-form diagonal
    ``a(k,k) = (4/pi) sum_{j<=k} 1/(2j-1)``; the remaining entries follow from
    discrete harmonicity away from the origin and the lattice symmetries.
    """
    if max_radius < 1:
        raise ValueError("max_radius must be >= 1")
    if (max_radius + 1) ** 2 > max_entries:
        raise ResourceLimitError(
            f"potential kernel table of radius {max_radius} exceeds {max_entries} entries")
    R = max_radius
    if R == 1:
        rat = {(0, 0): (Fraction(0), Fraction(0)), (1, 0): (Fraction(1), Fraction(0)),
               (1, 1): (Fraction(0), Fraction(4))}
    else:
        rat = _exact_rational_table(R)

    digits = max(max(len(str(abs(c.numerator))), len(str(c.denominator)))
                 for pq in rat.values() for c in pq)
    table = np.zeros((R + 1, R + 1))
    with mpmath.workdps(digits + 30):
        inv_pi = 1 / mpmath.pi
        for (x, y), (p, q) in rat.items():
            if x > R:
                continue
            val = float(mpmath.mpf(p.numerator) / p.denominator
                        + mpmath.mpf(q.numerator) / q.denominator * inv_pi)
            table[x, y] = table[y, x] = val
    table.setflags(write=False)
    return PotentialKernel(table, R, _calibrate_kappa0(table, R))


def _calibrate_kappa0(table: np.ndarray, R: int) -> float:
    xs, ys = np.meshgrid(np.arange(R + 1), np.arange(R + 1), indexing="ij")
    r = np.hypot(xs, ys)
    lo = 20.0 if R >= 40 else R / 2
    sel = (r >= lo) & (r <= R)
    # one-parameter least squares: the mean residual
    return float(np.mean(table[sel] - 2.0 / math.pi * np.log(r[sel])))


def potential_kernel_asymptotic(dz, kappa0: float) -> float:
    """``(2/pi) log|z| + kappa0`` for ``z != 0``."""
    r = math.hypot(dz[0], dz[1])
    if r == 0:
        raise ValueError("asymptotic potential kernel is undefined at z = 0")
    return 2.0 / math.pi * math.log(r) + kappa0


@dataclass(frozen=True, eq=False)
class HarmonicKernel:
    """Exit distribution ``weights[i, j] = P_v(S_tau = u)``, ``v`` = interior i, ``u`` = boundary j."""

    region: Region
    weights: np.ndarray

    def row(self, v) -> np.ndarray:
        return self.weights[self.region.interior_index(v)]


def _dirichlet_factor(region: Region):
    if region.n_interior == 0:
        raise ValueError("region has empty interior")
    p_int, p_bnd = region.transition_blocks()
    lap = (identity(region.n_interior, format="csc") - p_int).tocsc()
    return splu(lap), lap, p_bnd


def harmonic_measure(region: Region) -> HarmonicKernel:
    """Solve the discrete Dirichlet problem for every boundary indicator at once."""
    lu, lap, p_bnd = _dirichlet_factor(region)
    rhs = p_bnd.toarray()
    w = lu.solve(rhs)
    resid = np.abs(lap @ w - rhs).max()
    assert resid <= 1e-10, f"harmonic measure residual {resid:.3g}"
    np.clip(w, 0.0, 1.0, out=w)
    w.setflags(write=False)
    return HarmonicKernel(region, w)


def _target_mask(region: Region, target) -> np.ndarray:
    pts = np.asarray(list(target), dtype=np.int64).reshape(-1, 2)
    bi = region.boundary_indices(pts)
    if np.any(bi < 0):
        raise ValueError("target set must be a subset of the region boundary")
    mask = np.zeros(region.n_boundary, dtype=bool)
    mask[bi] = True
    return mask


def hitting_prob_exact(region: Region, start, target_set, hk: HarmonicKernel | None = None) -> float:
    """Probability that the walk from interior ``start`` exits the region through ``target_set``."""
    if not region.is_interior(start):
        raise ValueError(f"start {tuple(start)} is not an interior vertex")
    mask = _target_mask(region, target_set)
    i = region.interior_index(start)
    if hk is not None:
        return float(hk.weights[i, mask].sum())
    if not mask.any():
        return 0.0
    lu, _, p_bnd = _dirichlet_factor(region)
    h = lu.solve(np.asarray(p_bnd @ mask.astype(float)).ravel())
    return float(min(max(h[i], 0.0), 1.0))


def hit_before_exit_exact(region: Region, target) -> np.ndarray:
    """For every interior start, P(walk visits ``target`` before the boundary).

    ``target`` may contain interior and boundary vertices.  Returns an array
    over interior indices (1 on interior target vertices).
    """
    pts = np.asarray(list(target), dtype=np.int64).reshape(-1, 2)
    ti = region.interior_indices(pts)
    bi = region.boundary_indices(pts)
    if np.any((ti < 0) & (bi < 0)):
        raise ValueError("target vertices must lie in the region")
    hit_int = np.zeros(region.n_interior, dtype=bool)
    hit_int[ti[ti >= 0]] = True
    hit_bnd = np.zeros(region.n_boundary, dtype=bool)
    hit_bnd[bi[bi >= 0]] = True

    p_int, p_bnd = region.transition_blocks()
    free = ~hit_int
    p_ff = p_int[free][:, free]
    rhs = np.asarray(p_int[free][:, hit_int].sum(axis=1)).ravel() + \
        np.asarray(p_bnd[free] @ hit_bnd.astype(float)).ravel()
    out = np.ones(region.n_interior)
    if free.any():
        lap = (identity(int(free.sum()), format="csc") - p_ff).tocsc()
        out[free] = splu(lap).solve(rhs)
    return np.clip(out, 0.0, 1.0)


def annulus_formula_check(k: int, n: int, x, center=(0, 0)) -> tuple[float, float]:
    """Exact ``P_x(reach outer boundary before inner)`` on ``C(n) \\ C(k)`` and the log formula."""
    if not k < n:
        raise ValueError("need k < n")
    ann = build_annulus(center, k, n)
    reg = ann.region
    dx, dy = x[0] - ann.center.x, x[1] - ann.center.y
    r = math.hypot(dx, dy)
    if not reg.contains(x) or r <= k and not reg.is_boundary(x):
        raise ValueError(f"{tuple(x)} is not in the annulus C({n}) \\ C({k})")
    formula = (math.log(r) - math.log(k)) / (math.log(n) - math.log(k))
    outer = {tuple(p) for p in ann.outer_ball.region.boundary.tolist()}
    if reg.is_boundary(x):
        exact = 1.0 if tuple(int(c) for c in x) in outer else 0.0
        return exact, formula
    exact = hitting_prob_exact(reg, x, outer)
    return exact, formula


@dataclass(frozen=True)
class HittingEstimate:
    probability: float
    std_error: float
    replicates: int
    seed: int


@nb.njit(parallel=True, cache=True)
def _walk_kernel(labels, x0, y0, seed, start_rep, count):
    hits = np.zeros(count, dtype=np.uint8)
    dx = np.array([1, -1, 0, 0])
    dy = np.array([0, 0, 1, -1])
    for i in nb.prange(count):
        rep = nb.uint64(start_rep + i)
        x, y = x0, y0
        step = 0
        word = nb.uint64(0)
        while True:
            lab = labels[x, y]
            if lab == 3:
                hits[i] = 1
                break
            if lab != 1:
                break
            if step % 32 == 0:
                word = counter_word(seed, rep, nb.uint64(step // 32))
            d = (word >> nb.uint64(2 * (step % 32))) & nb.uint64(3)
            x += dx[d]
            y += dy[d]
            step += 1
    return hits


def mc_hit_before_exit(region: Region, start, target, replicates: int, seed: int,
                       threads: int | None = None, first_replicate: int = 0) -> HittingEstimate:
    """Monte Carlo estimate of P(walk from ``start`` hits ``target`` before the region boundary).

    Target vertices win ties with the boundary.  Replicate ``r`` uses the
    counter stream ``(seed, r)``, two bits per step in the order +x, -x, +y, -y.
    """
    if replicates < 100:
        raise ValueError("replicates must be >= 100")
    if not region.contains(start):
        raise ValueError(f"start {tuple(start)} is not in the region")
    labels, lo = region.label_grid()
    labels = labels.copy()
    pts = np.asarray(list(target), dtype=np.int64).reshape(-1, 2)
    if len(pts):
        inside = region.interior_indices(pts) >= 0
        inside |= region.boundary_indices(pts) >= 0
        if not inside.all():
            raise ValueError("target vertices must lie in the region")
        loc = pts - lo
        labels[loc[:, 0], loc[:, 1]] = 3
    if threads:
        nb.set_num_threads(max(1, min(int(threads), nb.config.NUMBA_NUM_THREADS)))
    hits = _walk_kernel(labels, int(start[0] - lo[0]), int(start[1] - lo[1]),
                        np.uint64(seed & MASK64), first_replicate, replicates)
    p = math.fsum(hits.tolist()) / replicates
    return HittingEstimate(p, math.sqrt(p * (1 - p) / replicates), replicates, seed)


def hitting_geometry(r: int, ell: int, n: int) -> tuple[Region, Vertex, list]:
    """Two discrete balls of radius ``r`` at ``(ell, 2r)`` and ``(2 ell, 2r)`` inside a box of side ``n``.

    Returns the box, the first ball's centre (start) and the second ball's boundary (target).
    """
    from .lattice import build_ball, build_box

    if 2 * ell + r >= n:
        raise ValueError("balls do not fit in the box")
    box = build_box(n)
    second = build_ball((2 * ell, 2 * r), r)
    return box, Vertex(ell, 2 * r), [tuple(p) for p in second.region.boundary.tolist()]


def warn_if_extrapolated(flag: bool, what: str) -> None:
    if flag:
        warnings.warn(f"{what}: offsets beyond the exact potential-kernel table; "
                      "used the asymptotic expansion", RuntimeWarning, stacklevel=3)
