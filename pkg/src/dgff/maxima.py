"""Monte Carlo experiments on the box maximum ``M_n = max(0, max_v eta_v)``.

The boundary (where the field is 0) belongs to the box, so ``M_n >= 0``.
Tails are centred at an empirical location (mean by default) because the
exact expectation is only known up to an additive constant.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .errors import InsufficientDataError
from .green import green_spectral, variance_profile
from .rng import derive_seed, stream
from .sampler import map_chunks, spectral_sampler

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True, eq=False)
class MaxStatistic:
    n: int
    values: np.ndarray
    seed: int

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValueError("box maxima are nonnegative")

    @property
    def replicates(self) -> int:
        return len(self.values)


def run_maxima(n: int, replicates: int, seed: int, threads: int | None = None) -> MaxStatistic:
    """Maxima of ``replicates`` independent fields on the box of side ``n``."""
    if replicates < 100:
        raise ValueError("replicates must be >= 100")
    samp = spectral_sampler(n)

    def chunk(lo, hi):
        f = samp.batch(seed, lo, hi - lo)
        return np.maximum(f.max(axis=(1, 2)), 0.0)

    vals = np.concatenate(map_chunks(chunk, 0, replicates, samp.chunk, threads))
    vals.setflags(write=False)
    return MaxStatistic(n, vals, seed)


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    variance: float
    mean_se: float
    variance_se: float
    replicates: int


def estimate_moments(stat) -> MomentEstimate:
    """Sample mean and variance with jackknife standard errors."""
    x = np.asarray(getattr(stat, "values", stat), dtype=float)
    N = len(x)
    if N < 2:
        raise ValueError("need at least 2 replicates")
    mean = math.fsum(x) / N
    d = x - mean
    ss = math.fsum(d * d)
    var = ss / (N - 1)
    mean_se = math.sqrt(var / N)
    if N < 3:
        return MomentEstimate(mean, var, mean_se, float("nan"), N)
    # leave-one-out variances in closed form
    loo = (ss - d * d * N / (N - 1)) / (N - 2)
    loo_mean = math.fsum(loo) / N
    var_se = math.sqrt((N - 1) / N * math.fsum((loo - loo_mean) ** 2))
    return MomentEstimate(mean, var, mean_se, var_se, N)


def bz_expectation(n: float) -> float:
    """Leading terms ``2 sqrt(2/pi) (log n - 3/(8 log 2) log log n)`` of ``E M_n``."""
    return 2 * SQRT_2_OVER_PI * (math.log(n) - 3 / (8 * math.log(2)) * math.log(math.log(n)))


def predicted_gap(n: int, n2: int) -> float:
    return bz_expectation(n2) - bz_expectation(n)


@dataclass(frozen=True)
class GapEstimate:
    n: int
    gap: float
    std_error: float
    predicted: float
    mean_small: MomentEstimate
    mean_large: MomentEstimate


def expectation_gap(n: int, replicates: int, seed: int, threads: int | None = None) -> GapEstimate:
    """``E M_{2n} - E M_n`` from independent runs, with the leading-order prediction."""
    small = estimate_moments(run_maxima(n, replicates, derive_seed(seed, n), threads))
    large = estimate_moments(run_maxima(2 * n, replicates, derive_seed(seed, 2 * n), threads))
    se = math.hypot(small.mean_se, large.mean_se)
    return GapEstimate(n, large.mean - small.mean, se, predicted_gap(n, 2 * n), small, large)


def lambda_cap(n: int) -> float:
    return math.log(n) ** (2.0 / 3.0)


@dataclass(frozen=True, eq=False)
class TailEstimate:
    side: str
    lambda_grid: np.ndarray
    probabilities: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    centering: float
    counts: np.ndarray
    replicates: int


def wilson_band(counts, nobs: int, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = [], []
    for k in np.asarray(counts, dtype=int):
        ci = binomtest(int(k), nobs).proportion_ci(level, method="wilson")
        lo.append(ci.low)
        hi.append(ci.high)
    return np.array(lo), np.array(hi)


def tail_from_counts(side, grid, counts, replicates, centering=0.0) -> TailEstimate:
    grid = np.asarray(grid, dtype=float)
    counts = np.asarray(counts, dtype=int)
    lo, hi = wilson_band(counts, replicates)
    return TailEstimate(side, grid, counts / replicates, lo, hi, float(centering), counts, replicates)


def empirical_tail(stat: MaxStatistic, side: str, lambda_grid, centering: str | float = "mean",
                   enforce_cap: bool = True) -> TailEstimate:
    """Right tail ``P(M - m >= lam)`` or left tail ``P(M - m <= -lam)`` on a grid.

    Grid points beyond ``(log n)^{2/3}`` are dropped with a warning.
    """
    if side not in ("right", "left"):
        raise ValueError("side must be 'right' or 'left'")
    grid = np.asarray(lambda_grid, dtype=float)
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be increasing and nonnegative")
    if enforce_cap:
        cap = lambda_cap(stat.n)
        if np.any(grid > cap):
            warnings.warn(f"dropping lambda > (log n)^(2/3) = {cap:.3f}", RuntimeWarning, stacklevel=2)
            grid = grid[grid <= cap]
    x = np.asarray(stat.values)
    if centering == "mean":
        m = math.fsum(x) / len(x)
    elif centering == "median":
        m = float(np.median(x))
    else:
        m = float(centering)
    if side == "right":
        counts = [(x >= m + lam).sum() for lam in grid]
    else:
        counts = [(x <= m - lam).sum() for lam in grid]
    return tail_from_counts(side, grid, counts, len(x), m)


@dataclass(frozen=True)
class RateFit:
    model: str
    slope: float
    intercept: float
    r_squared: float
    lambda_window: tuple[float, float]
    points: int = field(default=0)


def fit_rate(tail: TailEstimate, window=(1.0, 3.0), model: str | None = None) -> RateFit:
    """Weighted least squares of the tail in log (right) or log-log (left) coordinates.

    Right: ``log p = a - b lam``.  Left: ``log(-log p) = a + b lam``.  Weights come
    from the Wilson band widths through the delta method.
    """
    model = model or ("log-linear" if tail.side == "right" else "loglog-linear")
    lo, hi = window
    p = tail.probabilities
    sel = (tail.lambda_grid >= lo) & (tail.lambda_grid <= hi) & (tail.counts > 0)
    if model == "loglog-linear":
        sel &= p < 1
    if sel.sum() < 4:
        raise InsufficientDataError(f"only {int(sel.sum())} usable tail points in window {window}")
    lam, ps = tail.lambda_grid[sel], p[sel]
    sig_p = np.maximum((tail.upper[sel] - tail.lower[sel]) / (2 * 1.959964), 1e-300)
    if model == "log-linear":
        y = np.log(ps)
        sig = sig_p / ps
    elif model == "loglog-linear":
        y = np.log(-np.log(ps))
        sig = sig_p / (ps * -np.log(ps))
    else:
        raise ValueError(f"unknown model {model!r}")
    w = 1.0 / sig**2
    slope, intercept = np.polyfit(lam, y, 1, w=np.sqrt(w))
    resid = y - (intercept + slope * lam)
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = np.sum(w * (y - ybar) ** 2)
    r2 = 1.0 - np.sum(w * resid**2) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(model, float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)),
                   (float(lo), float(hi)), int(sel.sum()))


@dataclass(frozen=True)
class FlatnessReport:
    ns: tuple
    variances: tuple
    std_errors: tuple
    ratio: float
    threshold: float
    flagged: bool


def flatness_gate(ns, variances, std_errors, threshold: float = 2.5) -> FlatnessReport:
    ratio = max(variances) / min(variances)
    return FlatnessReport(tuple(ns), tuple(variances), tuple(std_errors), ratio, threshold,
                          ratio > threshold)


def variance_flatness(ns, replicates: int, seed: int, threshold: float = 2.5,
                      threads: int | None = None) -> FlatnessReport:
    """Variance of ``M_n`` across sizes; flags when max/min exceeds ``threshold``."""
    if len(ns) < 3:
        raise ValueError("need at least 3 sizes")
    est = [estimate_moments(run_maxima(n, replicates, derive_seed(seed, n), threads)) for n in ns]
    return flatness_gate(ns, [e.variance for e in est], [e.variance_se for e in est], threshold)


def growing_variance_control(ns, replicates: int, seed: int, threshold: float = 2.5) -> FlatnessReport:
    """Same gate on ``sqrt(G_n(v*, v*)) Z``, a single Gaussian whose variance grows like log n."""
    est = []
    for n in ns:
        sd = math.sqrt(variance_profile(green_spectral(n)).values.max())
        z = stream(derive_seed(seed, n), 0).standard_normal(replicates)
        est.append(estimate_moments(sd * z))
    return flatness_gate(ns, [e.variance for e in est], [e.variance_se for e in est], threshold)


def write_maxima_csv(path, stats: list[MaxStatistic]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["n", "replicate", "M"])
        for st in stats:
            for r, m in enumerate(st.values):
                wr.writerow([st.n, r, f"{m:.17g}"])


def write_tail_csv(path, tail: TailEstimate) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["lambda", "p", "lo", "hi"])
        for row in zip(tail.lambda_grid, tail.probabilities, tail.lower, tail.upper):
            wr.writerow([f"{v:.17g}" for v in row])


def write_fit_csv(path, fits: list[RateFit]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["model", "slope", "intercept", "r2"])
        for f in fits:
            wr.writerow([f.model, f"{f.slope:.17g}", f"{f.intercept:.17g}", f"{f.r_squared:.17g}"])
