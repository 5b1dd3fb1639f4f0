"""DGFF samplers.

All samplers draw replicate ``r`` from the counter stream ``(seed, r)`` and
process replicates in fixed-size chunks, so the output for a given replicate
range is bitwise the same for any thread count.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.fft import dstn

from .errors import ResourceLimitError
from .green import DENSE_CAP, dirichlet_eigenvalues, green_dense, green_operator
from .lattice import Region, build_box
from .rng import stream
from .walk import HarmonicKernel, harmonic_measure

CHUNK_ELEMENTS = 2**18


def resolve_threads(threads: int | None) -> int:
    import os

    if threads is None:
        threads = int(os.environ.get("GFF_THREADS", "1"))
    return max(1, int(threads))


def map_chunks(fn, start: int, stop: int, chunk: int, threads: int | None = None) -> list:
    """Apply ``fn(lo, hi)`` over fixed chunks of ``[start, stop)``; results in chunk order."""
    bounds = [(lo, min(lo + chunk, stop)) for lo in range(start, stop, chunk)]
    threads = resolve_threads(threads)
    if threads == 1 or len(bounds) == 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


def _normals(seed: int, start: int, count: int, size: int) -> np.ndarray:
    out = np.empty((count, size))
    for i in range(count):
        stream(seed, start + i).standard_normal(size, out=out[i])
    return out


def _chunk_size(m: int) -> int:
    return max(1, min(4096, CHUNK_ELEMENTS // max(m, 1)))


@dataclass(frozen=True, eq=False)
class FieldSample:
    """One field over ``region.interior`` (boundary values are 0)."""

    region: Region
    values: np.ndarray
    seed: int
    replicate: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def at(self, v) -> float:
        if self.region.is_boundary(v):
            return 0.0
        return float(self.values[self.region.interior_index(v)])

    def grid(self) -> np.ndarray:
        """Full ``(n+1, n+1)`` array including the zero boundary (boxes only)."""
        if self.region.box is None:
            raise ValueError("grid() needs a box region")
        n = self.region.box[1]
        g = np.zeros((n + 1, n + 1))
        g[1:n, 1:n] = self.values.reshape(n - 1, n - 1)
        return g


class SpectralSampler:
    """Exact DGFF sampler on a box via the orthonormal type-I sine transform."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError(f"box side length must be >= 2, got {n}")
        self.n = n
        self.region = build_box(n)
        self.scale = np.sqrt(4.0 / dirichlet_eigenvalues(n))
        self.chunk = _chunk_size((n - 1) ** 2)

    def transform(self, z: np.ndarray) -> np.ndarray:
        """Map mode coefficients ``z`` of shape ``(count, n-1, n-1)`` to fields."""
        return dstn(z * self.scale, type=1, norm="ortho", axes=(1, 2))

    def batch(self, seed: int, start: int, count: int) -> np.ndarray:
        m = self.n - 1
        z = _normals(seed, start, count, m * m).reshape(count, m, m)
        return self.transform(z)

    def draw(self, seed: int, replicate: int) -> FieldSample:
        return FieldSample(self.region, self.batch(seed, replicate, 1)[0].ravel(), seed, replicate)


@lru_cache(maxsize=16)
def spectral_sampler(n: int) -> SpectralSampler:
    return SpectralSampler(n)


def sample_spectral(n: int, seed: int, replicate: int = 0) -> FieldSample:
    return spectral_sampler(n).draw(seed, replicate)


class CholeskySampler:
    """``eta = C z`` with ``C C^T = G`` for any region under the dense cap."""

    def __init__(self, region: Region, cap: int = DENSE_CAP):
        if region.n_interior > cap:
            raise ResourceLimitError(f"interior size {region.n_interior} exceeds dense cap {cap}")
        self.region = region
        self.factor = scipy.linalg.cholesky(green_dense(region, cap).matrix, lower=True)
        self.chunk = _chunk_size(region.n_interior)

    def transform(self, z: np.ndarray) -> np.ndarray:
        return z @ self.factor.T

    def batch(self, seed: int, start: int, count: int) -> np.ndarray:
        return self.transform(_normals(seed, start, count, self.region.n_interior))

    def draw(self, seed: int, replicate: int) -> FieldSample:
        return FieldSample(self.region, self.batch(seed, replicate, 1)[0], seed, replicate)


def sample_cholesky(region: Region, seed: int, replicate: int = 0, cap: int = DENSE_CAP) -> FieldSample:
    return CholeskySampler(region, cap).draw(seed, replicate)


def harmonic_extension(hk: HarmonicKernel, boundary_values) -> np.ndarray:
    """Interior values ``phi_v = sum_u P_v(S_tau = u) f(u)``.

    ``boundary_values`` is either a mapping vertex -> value covering the whole
    boundary, or an array whose last axis runs over boundary indices.
    """
    reg = hk.region
    if isinstance(boundary_values, dict):
        vals = np.empty(reg.n_boundary)
        for j, p in enumerate(reg.boundary.tolist()):
            key = tuple(p)
            if key not in boundary_values:
                raise ValueError(f"missing boundary value at {key}")
            vals[j] = boundary_values[key]
    else:
        vals = np.asarray(boundary_values, dtype=float)
        if vals.shape[-1] != reg.n_boundary:
            raise ValueError(f"expected {reg.n_boundary} boundary values, got {vals.shape[-1]}")
    return vals @ hk.weights.T


@dataclass(frozen=True, eq=False)
class DecompositionSample:
    """``total = coarse + fine`` over the outer interior.

    On the skeleton (outer interior outside every inner interior) ``coarse``
    is the sampled field itself and ``fine`` is 0.
    """

    region: Region
    coarse: np.ndarray
    fine: np.ndarray
    total: np.ndarray
    seed: int
    replicate: int


class ConditionalSampler:
    """Two-level sampler: exact skeleton field, harmonic extension, independent inner fields."""

    def __init__(self, outer: Region, inners: list[Region], cap: int = DENSE_CAP):
        self.outer = outer
        self.inners = list(inners)
        m = outer.n_interior
        owner = np.full(m, -1)
        self._inner_idx = []
        for k, reg in enumerate(self.inners):
            if reg.n_interior == 0:
                raise ValueError("inner regions need nonempty interiors")
            inside = (outer.interior_indices(reg.vertices) >= 0) | \
                (outer.boundary_indices(reg.vertices) >= 0)
            if not inside.all():
                raise ValueError("inner region is not contained in the outer region")
            idx = outer.interior_indices(reg.interior)
            if np.any(owner[idx] >= 0):
                raise ValueError("inner regions overlap")
            owner[idx] = k
            self._inner_idx.append(idx)
        for reg in self.inners:
            bi = outer.interior_indices(reg.boundary)
            if np.any(owner[bi[bi >= 0]] >= 0):
                raise ValueError("an inner boundary vertex lies inside another inner region")

        self.skeleton = np.flatnonzero(owner < 0)
        skel_pos = np.full(m, -1)
        skel_pos[self.skeleton] = np.arange(len(self.skeleton))
        if len(self.skeleton):
            g = green_operator(outer, cap)
            cov = g.submatrix(outer.interior[self.skeleton])
            self._skel_factor = scipy.linalg.cholesky(cov, lower=True)
        else:
            self._skel_factor = np.zeros((0, 0))

        self._coarse_maps = []
        self._fine = []
        for reg in self.inners:
            hk = harmonic_measure(reg)
            oi = outer.interior_indices(reg.boundary)
            live = oi >= 0  # inner boundary points on the outer boundary carry 0
            self._coarse_maps.append((skel_pos[oi[live]], hk.weights[:, live].T.copy()))
            self._fine.append(SpectralSampler(reg.box[1]) if reg.box is not None
                              else CholeskySampler(reg, cap))
        self._sizes = [len(self.skeleton)] + [r.n_interior for r in self.inners]
        self.chunk = _chunk_size(m)

    def batch(self, seed: int, start: int, count: int):
        """Arrays ``(coarse, fine, total)`` of shape ``(count, n_interior)``."""
        z = _normals(seed, start, count, sum(self._sizes))
        m = self.outer.n_interior
        coarse = np.zeros((count, m))
        fine = np.zeros((count, m))
        k = self._sizes[0]
        skel = z[:, :k] @ self._skel_factor.T
        coarse[:, self.skeleton] = skel
        off = k
        for idx, (pos, w), samp, size in zip(self._inner_idx, self._coarse_maps,
                                             self._fine, self._sizes[1:]):
            coarse[:, idx] = skel[:, pos] @ w
            zi = z[:, off:off + size]
            if isinstance(samp, SpectralSampler):
                s = samp.n - 1
                fine[:, idx] = samp.transform(zi.reshape(count, s, s)).reshape(count, size)
            else:
                fine[:, idx] = samp.transform(zi)
            off += size
        return coarse, fine, coarse + fine

    def draw(self, seed: int, replicate: int) -> DecompositionSample:
        c, f, t = self.batch(seed, replicate, 1)
        return DecompositionSample(self.outer, c[0], f[0], t[0], seed, replicate)


def sample_conditional(outer: Region, inner_partition: list[Region], seed: int,
                       replicate: int = 0) -> DecompositionSample:
    return ConditionalSampler(outer, inner_partition).draw(seed, replicate)


def partition_box(n: int, pieces: int) -> list[Region]:
    """Split the box of side ``n`` into ``pieces x pieces`` boxes sharing their edges."""
    if n % pieces:
        raise ValueError("side length must be divisible by the number of pieces")
    s = n // pieces
    return [build_box(s, (i * s, j * s)) for i in range(pieces) for j in range(pieces)]


_HEADER = struct.Struct("<qQqq")


def write_samples(path, n: int, seed: int, first_replicate: int, values: np.ndarray) -> None:
    """Binary dump: header ``(n, seed, first replicate, count)`` then little-endian float64 fields."""
    values = np.asarray(values, dtype="<f8")
    count = values.shape[0]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(n, seed, first_replicate, count))
        fh.write(values.reshape(count, -1).tobytes(order="C"))


def read_samples(path):
    with open(path, "rb") as fh:
        n, seed, first, count = _HEADER.unpack(fh.read(_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(count, -1)
    return n, seed, first, data
