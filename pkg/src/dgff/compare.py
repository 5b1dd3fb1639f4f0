"""Numerical checks of the Gaussian comparison toolkit used for the left tail.

Every check returns a :class:`ComparisonReport` asserting ``lhs <= rhs`` up to
``3 * mc_error`` (Monte Carlo checks) or a fixed roundoff ``tolerance`` (exact ones).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import log_ndtr, ndtr

from .green import green_operator
from .lattice import Region, Vertex, box_center, build_box
from .rng import derive_seed, stream
from .sampler import CholeskySampler, SpectralSampler, map_chunks, spectral_sampler


@dataclass(frozen=True)
class ComparisonReport:
    check: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    mc_error: float = 0.0
    exact: bool = False
    tolerance: float = 0.0
    detail: dict = field(default_factory=dict)

    @classmethod
    def build(cls, check, lhs, rhs, mc_error=0.0, exact=False, tolerance=0.0, **detail):
        lhs, rhs = float(lhs), float(rhs)
        return cls(check, lhs, rhs, rhs - lhs, bool(lhs <= rhs + 3 * mc_error + tolerance),
                   float(mc_error), exact, tolerance, detail)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass(frozen=True)
class EquicorrelatedSpec:
    n: int
    rho: float

    def __post_init__(self):
        if not 0 <= self.rho <= 0.5:
            raise ValueError(f"rho must lie in [0, 1/2], got {self.rho}")
        if self.n < 1:
            raise ValueError("dimension must be positive")


def slepian_bound(spec: EquicorrelatedSpec) -> float:
    head = math.exp(-1 / (2 * spec.rho)) if spec.rho > 0 else 0.0
    return head + 0.9**spec.n


def orthant_quadrature(spec: EquicorrelatedSpec, nodes: int = 64) -> float:
    """``P(all zeta_i <= 0)`` for ``zeta_i = sqrt(rho) X + sqrt(1-rho) Y_i``, X integrated out."""
    if spec.rho == 0:
        return 0.5**spec.n
    x, w = hermegauss(nodes)
    a = -math.sqrt(spec.rho / (1 - spec.rho)) * x
    return float(np.sum(w * np.exp(spec.n * log_ndtr(a))) / math.sqrt(2 * math.pi))


def orthant_mc(spec: EquicorrelatedSpec, replicates: int, seed: int) -> tuple[float, float]:
    s1, s2 = math.sqrt(spec.rho), math.sqrt(1 - spec.rho)

    def chunk(lo, hi):
        hit = 0
        for r in range(lo, hi):
            z = stream(seed, r).standard_normal(spec.n + 1)
            hit += bool(np.all(s1 * z[0] + s2 * z[1:] <= 0))
        return hit

    hits = sum(map_chunks(chunk, 0, replicates, 4096))
    p = hits / replicates
    return p, math.sqrt(p * (1 - p) / replicates)


def slepian_corollary_check(spec: EquicorrelatedSpec, replicates: int = 10**4, seed: int = 0,
                            method: str = "quadrature") -> ComparisonReport:
    """Equicorrelated orthant probability against ``exp(-1/(2 rho)) + 0.9^n``."""
    if replicates < 10**4:
        raise ValueError("replicates must be >= 10^4")
    bound = slepian_bound(spec)
    name = f"slepian(n={spec.n}, rho={spec.rho})"
    if method == "quadrature":
        return ComparisonReport.build(name, orthant_quadrature(spec), bound, exact=True,
                                      tolerance=1e-12, method=method)
    if method == "mc":
        p, se = orthant_mc(spec, replicates, seed)
        return ComparisonReport.build(name, p, bound, mc_error=se, method=method,
                                      replicates=replicates)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True, eq=False)
class NestedBoxes:
    """Box ``B`` of side ``ell`` and ``B_hat = B' ∩ A_n`` with ``B'`` of side ``2 ell``, same centre."""

    outer: Region
    inner_vertices: np.ndarray
    b_hat: Region


def nested_boxes(n_outer: int, ell: int, center=None) -> NestedBoxes:
    if not 2 <= ell <= n_outer:
        raise ValueError("need 2 <= ell <= n_outer")
    c = Vertex(*center) if center is not None else box_center(n_outer)
    outer = build_box(n_outer)
    inner = build_box(ell, (c.x - ell // 2, c.y - ell // 2))
    big = build_box(2 * ell, (c.x - ell, c.y - ell))
    keep = outer.interior_indices(big.vertices) >= 0
    keep |= outer.boundary_indices(big.vertices) >= 0
    pts = big.vertices[keep]
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    is_box = len(pts) == np.prod(hi - lo + 1) and hi[0] - lo[0] == hi[1] - lo[1]
    b_hat = build_box(int(hi[0] - lo[0]), lo) if is_box else Region(pts)
    # B vertices where both fields are nondegenerate
    ok = (outer.interior_indices(inner.vertices) >= 0) & (b_hat.interior_indices(inner.vertices) >= 0)
    if not ok.any():
        raise ValueError("inner box has no vertex interior to both domains")
    return NestedBoxes(outer, inner.vertices[ok], b_hat)


def _corr(c: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.diag(c))
    return c / np.outer(d, d)


def nested_correlation_domination(n_outer: int, ell: int, center=None) -> ComparisonReport:
    """Exact check that correlations under ``A_n`` dominate those under ``B_hat`` on ``B``."""
    geo = nested_boxes(n_outer, ell, center)
    rho = _corr(green_operator(geo.outer).submatrix(geo.inner_vertices))
    rho_hat = _corr(green_operator(geo.b_hat).submatrix(geo.inner_vertices))
    diff = rho - rho_hat
    return ComparisonReport.build(f"nested_correlation(n={n_outer}, ell={ell})",
                                  -diff.min(), 0.0, exact=True, tolerance=1e-10,
                                  min_margin=float(diff.min()), pairs=int(diff.size))


def variance_ratio_bound(n: int, ell: int, c1: float = 2.0, c2: float = 4.0) -> float:
    return 1 + c1 * (math.log(n / ell) + c2) / math.log(n)


def _variances(region: Region, pts: np.ndarray) -> np.ndarray:
    g = green_operator(region)
    return g.diagonal()[region.interior_indices(pts)]


def variance_ratio_check(n_outer: int, ell: int, c1: float = 2.0, c2: float = 4.0,
                         center=None) -> ComparisonReport:
    """Max over ``v in B`` of ``Var eta_v / Var g_v`` against ``1 + c1 (log(n/ell) + c2) / log n``."""
    geo = nested_boxes(n_outer, ell, center)
    ratio = _variances(geo.outer, geo.inner_vertices) / _variances(geo.b_hat, geo.inner_vertices)
    return ComparisonReport.build(f"variance_ratio(n={n_outer}, ell={ell})", ratio.max(),
                                  variance_ratio_bound(n_outer, ell, c1, c2), exact=True,
                                  tolerance=1e-12, min_ratio=float(ratio.min()),
                                  max_ratio=float(ratio.max()))


def scaled_field_check(n_outer: int, ell: int, center=None) -> ComparisonReport:
    """``xi = eta / b`` with ``b = sqrt(Var eta / Var g)`` matches ``g`` in variance, keeps eta's correlations."""
    geo = nested_boxes(n_outer, ell, center)
    c_eta = green_operator(geo.outer).submatrix(geo.inner_vertices)
    c_g = green_operator(geo.b_hat).submatrix(geo.inner_vertices)
    b = np.sqrt(np.diag(c_eta) / np.diag(c_g))
    c_xi = c_eta / np.outer(b, b)
    var_err = np.abs(np.diag(c_xi) - np.diag(c_g)).max()
    corr_err = np.abs(_corr(c_xi) - _corr(c_eta)).max()
    cov_margin = (c_xi - c_g).min()
    return ComparisonReport.build(f"scaled_field(n={n_outer}, ell={ell})",
                                  max(var_err, corr_err), 0.0, exact=True, tolerance=1e-12,
                                  variance_error=float(var_err), correlation_error=float(corr_err),
                                  slepian_cov_margin=float(cov_margin))


def _sampler(region: Region):
    if region.box is not None and region.box[1] >= 2:
        return spectral_sampler(region.box[1])
    return CholeskySampler(region)


def _batch(samp, seed, lo, count):
    f = samp.batch(seed, lo, count)
    return f.reshape(count, -1)


def sup_exceedance(region: Region, U: np.ndarray, t_grid, replicates: int, seed: int,
                   threads: int | None = None) -> np.ndarray:
    """Monte Carlo ``P(sup_U eta >= t)`` for each ``t``."""
    idx = region.interior_indices(U)
    samp = _sampler(region)
    t = np.asarray(t_grid, dtype=float)

    def chunk(lo, hi):
        sup = _batch(samp, seed, lo, hi - lo)[:, idx].max(axis=1)
        return (sup[:, None] >= t[None, :]).sum(axis=0)

    return sum(map_chunks(chunk, 0, replicates, samp.chunk, threads)) / replicates


@dataclass(frozen=True, eq=False)
class MonotoneGeometry:
    """``eta1`` vanishes off ``outer.interior``, ``eta2`` off ``inner.interior``; ``U`` ⊆ both interiors."""

    outer: Region
    inner: Region
    U: np.ndarray


def box_in_box(n_outer: int = 16, n_inner: int = 8, U=None) -> MonotoneGeometry:
    o = (n_outer - n_inner) // 2
    inner = build_box(n_inner, (o, o))
    return MonotoneGeometry(build_box(n_outer), inner,
                            inner.interior if U is None else np.asarray(U).reshape(-1, 2))


def monotone_domain_check(geometry: MonotoneGeometry, t_grid, replicates: int, seed: int,
                          threads: int | None = None) -> ComparisonReport:
    """``P(sup_U eta1 >= t) >= P(sup_U eta2 >= t) / 2`` at every ``t``; reports the worst ``t``."""
    g = geometry
    if np.any(g.outer.interior_indices(g.inner.interior) < 0):
        raise ValueError("zero sets are not nested: inner interior must lie in the outer interior")
    if np.any(g.inner.interior_indices(g.U) < 0):
        raise ValueError("U must lie in the common interior")
    t = np.asarray(t_grid, dtype=float)
    if len(g.U) == 1:
        s1 = math.sqrt(green_operator(g.outer).entry(g.U[0], g.U[0]))
        s2 = math.sqrt(green_operator(g.inner).entry(g.U[0], g.U[0]))
        p1, p2 = ndtr(-t / s1), ndtr(-t / s2)
        err = np.zeros_like(t)
    else:
        p1 = sup_exceedance(g.outer, g.U, t, replicates, derive_seed(seed, 1), threads)
        p2 = sup_exceedance(g.inner, g.U, t, replicates, derive_seed(seed, 2), threads)
        err = np.sqrt(p1 * (1 - p1) / replicates + p2 * (1 - p2) / (4 * replicates))
    slack = p1 + 3 * err - p2 / 2
    k = int(np.argmin(slack))
    return ComparisonReport.build("monotone_domain", p2[k] / 2, p1[k], mc_error=err[k],
                                  exact=len(g.U) == 1, worst_t=float(t[k]),
                                  t=t.tolist(), p_larger=np.asarray(p1).tolist(),
                                  p_smaller=np.asarray(p2).tolist())


@dataclass(frozen=True, eq=False)
class SupEvent:
    """``{sup_V eta <= level}`` (kind ``"le"``, decreasing) or ``{sup_V eta >= level}`` (``"ge"``)."""

    vertices: np.ndarray
    level: float
    kind: str = "le"

    @property
    def decreasing(self) -> bool:
        if self.kind not in ("le", "ge"):
            raise ValueError(f"unknown event kind {self.kind!r}")
        return self.kind == "le"


def half_box_events(n: int, level: float) -> tuple[SupEvent, SupEvent]:
    inner = build_box(n).interior
    return (SupEvent(inner[inner[:, 0] < n / 2], level),
            SupEvent(inner[inner[:, 0] > n / 2], level))


def fkg_check(n: int, event_pair: tuple[SupEvent, SupEvent], replicates: int, seed: int,
              threads: int | None = None) -> ComparisonReport:
    """Positive association ``P(A ∩ B) >= P(A) P(B)`` for two events of the same monotonicity."""
    a, b = event_pair
    if a.decreasing != b.decreasing:
        raise ValueError("FKG needs both events increasing or both decreasing")
    region = build_box(n)
    ia, ib = region.interior_indices(a.vertices), region.interior_indices(b.vertices)
    if np.any(ia < 0) or np.any(ib < 0):
        raise ValueError("event vertices must be interior")
    samp = spectral_sampler(n)

    def occurs(sup, ev):
        return sup <= ev.level if ev.kind == "le" else sup >= ev.level

    def chunk(lo, hi):
        f = _batch(samp, seed, lo, hi - lo)
        return np.stack([occurs(f[:, ia].max(axis=1), a), occurs(f[:, ib].max(axis=1), b)], axis=1)

    ind = np.concatenate(map_chunks(chunk, 0, replicates, samp.chunk, threads)).astype(float)
    pa, pb = ind.mean(axis=0)
    pab = float(np.mean(ind[:, 0] * ind[:, 1]))
    infl = (ind[:, 0] - pa) * (ind[:, 1] - pb)
    se = float(infl.std(ddof=1) / math.sqrt(replicates))
    return ComparisonReport.build(f"fkg(n={n})", pa * pb, pab, mc_error=se,
                                  p_a=float(pa), p_b=float(pb), covariance=float(pab - pa * pb))


def slepian_tail_check(n_outer: int, ell: int, gammas, replicates: int, seed: int,
                       threads: int | None = None) -> ComparisonReport:
    """``P(sup_B xi <= gamma) >= P(sup_B g <= gamma)`` for the scaled field ``xi = eta / b``."""
    geo = nested_boxes(n_outer, ell)
    pts = geo.inner_vertices
    var_eta = _variances(geo.outer, pts)
    var_g = _variances(geo.b_hat, pts)
    b = np.sqrt(var_eta / var_g)
    gam = np.asarray(gammas, dtype=float)

    def below(region, scale, s):
        idx = region.interior_indices(pts)
        samp = _sampler(region)

        def chunk(lo, hi):
            sup = (_batch(samp, s, lo, hi - lo)[:, idx] / scale).max(axis=1)
            return (sup[:, None] <= gam[None, :]).sum(axis=0)

        return sum(map_chunks(chunk, 0, replicates, samp.chunk, threads)) / replicates

    p_xi = below(geo.outer, b, derive_seed(seed, 1))
    p_g = below(geo.b_hat, np.ones_like(b), derive_seed(seed, 2))
    err = np.sqrt((p_xi * (1 - p_xi) + p_g * (1 - p_g)) / replicates)
    k = int(np.argmin(p_xi + 3 * err - p_g))
    return ComparisonReport.build(f"slepian_tail(n={n_outer}, ell={ell})", p_g[k], p_xi[k],
                                  mc_error=err[k], worst_gamma=float(gam[k]))


def run_suite(level: str = "fast", seed: int = 0, threads: int | None = None) -> list[ComparisonReport]:
    """All comparison checks; ``fast`` runs the exact (non-Monte Carlo) ones only."""
    reports = []
    for rho in (0.05, 0.1, 0.2, 0.4):
        for n in (10, 50, 100):
            reports.append(slepian_corollary_check(EquicorrelatedSpec(n, rho)))
    reports.append(nested_correlation_domination(16, 4))
    reports.append(nested_correlation_domination(32, 8))
    reports.append(nested_correlation_domination(16, 4, center=(4, 4)))
    reports.append(variance_ratio_check(64, 16))
    reports.append(variance_ratio_check(32, 8))
    reports.append(scaled_field_check(16, 4))
    if level == "fast":
        return reports
    if level != "full":
        raise ValueError(f"unknown level {level!r}")
    for rho in (0.05, 0.1, 0.2, 0.4):
        for n in (10, 50, 100):
            reports.append(slepian_corollary_check(EquicorrelatedSpec(n, rho), 10**4,
                                                   derive_seed(seed, n, int(rho * 100)), method="mc"))
    reports.append(monotone_domain_check(box_in_box(16, 8), [0.5, 1.0, 2.0], 10**4,
                                         derive_seed(seed, 3), threads))
    level_a = float(np.mean(_box_maxima(32, 10**4, derive_seed(seed, 4), threads)))
    reports.append(fkg_check(32, half_box_events(32, level_a), 10**5, derive_seed(seed, 5), threads))
    reports.append(slepian_tail_check(16, 4, [1.0, 2.0, 3.0], 10**4, derive_seed(seed, 6), threads))
    return reports


def _box_maxima(n, replicates, seed, threads):
    from .maxima import run_maxima

    return run_maxima(n, replicates, seed, threads).values
