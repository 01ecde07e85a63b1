"""Exact spectra, their split into bands, and band-count bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .chern_topology import triangulate_sphere
from .errors import ChernbandError, ClusteringAmbiguityError, NonHermitianError
from .hamiltonians import HamiltonianSpec, build_quantum, reduce_many
from .spin_algebra import HalfInt, SpherePoint, SpinLike, coherent_amplitudes

AMBIGUITY_RATIO = 3.0
PROJECTOR_MARGIN = 0.1
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EigenSystem:
    values: NDArray[np.float64]
    vectors: NDArray[np.complex128]

    def residuals(self, a) -> NDArray[np.float64]:
        a = np.asarray(a)
        return np.linalg.norm(a @ self.vectors - self.vectors * self.values, axis=0)


def diagonalize(a, tol: float = HERMITIAN_TOL) -> EigenSystem:
    """Dense Hermitian eigendecomposition with ascending eigenvalues."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"need a square matrix, got shape {a.shape}")
    asym = np.abs(a - a.conj().T)
    if asym.size and asym.max() > tol:
        loc = np.unravel_index(int(np.argmax(asym)), asym.shape)
        raise NonHermitianError(float(asym.max()), (int(loc[0]), int(loc[1])))
    vals, vecs = np.linalg.eigh((a + a.conj().T) / 2)
    return EigenSystem(vals, vecs)


@dataclass(frozen=True)
class BandDecomposition:
    """Split of a sorted spectrum into ``n_bands`` groups.

    ``boundaries[k]`` is the number of levels below the k-th boundary gap,
    so band k holds levels ``boundaries[k-1]:boundaries[k]``.
    """

    n_bands: int
    boundaries: tuple[int, ...]
    counts: tuple[int, ...]
    gap_ratio: float
    method: str = "gaps"

    def labels(self) -> list[HalfInt]:
        """Band labels g = -s..s with s = (n_bands - 1)/2."""
        return [HalfInt(2 * k - (self.n_bands - 1)) for k in range(self.n_bands)]

    def band_of_levels(self) -> NDArray[np.int64]:
        return np.repeat(np.arange(self.n_bands), self.counts)


def _from_cuts(n_levels, n_bands, cuts, ratio, method="gaps"):
    edges = [0, *cuts, n_levels]
    counts = tuple(int(b - a) for a, b in zip(edges, edges[1:]))
    return BandDecomposition(n_bands, tuple(int(c) for c in cuts), counts, ratio, method)


def cluster_bands(values, n_bands: int, threshold: float = AMBIGUITY_RATIO) -> BandDecomposition:
    """Split ascending ``values`` at the ``n_bands - 1`` largest gaps.

    ``gap_ratio`` is the smallest chosen gap over the largest unchosen one.

    Raises
    ------
    ClusteringAmbiguityError
        If ``gap_ratio < threshold``.
    """
    e = np.asarray(values, dtype=float)
    if n_bands < 1 or len(e) < n_bands:
        raise ValueError("need at least n_bands levels")
    if np.any(np.diff(e) < 0):
        raise ValueError("values must be sorted ascending")
    if n_bands == 1:
        return BandDecomposition(1, (), (len(e),), math.inf)
    gaps = np.diff(e)
    order = np.argsort(gaps, kind="stable")[::-1]
    chosen = np.sort(order[: n_bands - 1])
    used = float(np.min(gaps[chosen]))
    rest = float(gaps[order[n_bands - 1]]) if len(order) >= n_bands else 0.0
    ratio = used / rest if rest > 0 else math.inf
    if ratio < threshold:
        raise ClusteringAmbiguityError(used, rest)
    return _from_cuts(len(e), n_bands, chosen + 1, ratio)


# -- band character of eigenvectors ----------------------------------------------


def sphere_quadrature(j: SpinLike):
    """Gauss-Legendre (cos theta) x uniform (phi) nodes, weights summing to 1.

    Exact for the coherent-state resolution of identity on H_j.
    """
    n = 2 * HalfInt.of(j).twice + 2
    x, w = np.polynomial.legendre.leggauss(n)
    n_phi = 2 * n
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1 - x**2)
    nodes = np.stack(
        [np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)), np.outer(x, np.ones(n_phi))], -1
    ).reshape(-1, 3)
    weights = np.repeat(w / 2, n_phi) / n_phi
    return nodes, weights


def band_weights(h, j: SpinLike, s: SpinLike, vectors=None, chunk: int = 4096) -> NDArray[np.float64]:
    """Weight of each eigenvector of ``h`` on each semiclassical band.

    The band-g weight of |phi> is (2j+1) * mean over the sphere of
    |<n, psi_g(n)|phi>|^2, where |n> is the coherent state on H_j and
    psi_g(n) the g-th eigenvector of the reduced matrix at n. The weights of
    a level add up to one. Output shape (2s+1, levels).
    """
    j, s = HalfInt.of(j), HalfInt.of(s)
    h = np.asarray(h)
    if vectors is None:
        vectors = diagonalize(h).vectors
    nodes, qw = sphere_quadrature(j)
    out = np.zeros((s.dim, vectors.shape[1]))
    phi = vectors.reshape(j.dim, s.dim, -1)
    for lo in range(0, len(nodes), chunk):
        v, w = nodes[lo : lo + chunk], qw[lo : lo + chunk]
        c = coherent_amplitudes(j, v)  # (V, dj)
        _, psi = np.linalg.eigh(reduce_many(h, j, s, v))  # (V, ds, ds)
        # <n| phi>: (V, ds, levels), then project on each psi_g(n)
        cj = np.einsum("vm,mak->vak", c.conj(), phi)
        amp = np.einsum("vag,vak->vgk", psi.conj(), cj)
        out += np.einsum("v,vgk->gk", w, np.abs(amp) ** 2)
    return j.dim * out


def projector_counts(weights, min_margin: float = PROJECTOR_MARGIN) -> tuple[int, ...]:
    """Band counts from the dominant band weight of each level.

    Raises
    ------
    ClusteringAmbiguityError
        If the dominant band is not monotone in energy, or some level's two
        largest weights differ by less than ``min_margin``.
    """
    w = np.asarray(weights)
    best = np.argmax(w, axis=0)
    top2 = np.sort(w, axis=0)[-2:]
    margin = top2[-1] - top2[-2] if len(w) > 1 else np.ones(w.shape[1])
    k = int(np.argmin(margin))
    if margin[k] < min_margin:
        raise ClusteringAmbiguityError(
            float(top2[-1, k]), float(top2[-2, k]), f"level {k} is shared between bands"
        )
    if np.any(np.diff(best) < 0):
        raise ClusteringAmbiguityError(0.0, 0.0, "band character not ordered in energy")
    return tuple(int(c) for c in np.bincount(best, minlength=len(w)))


def band_counts(h, j: SpinLike, s: SpinLike, guided: bool = True) -> BandDecomposition:
    """Diagonalise ``h`` on H_j (x) H_s and split it into 2s+1 bands.

    A largest-gap split with ratio >= 3 is accepted as is. Below that, and
    only when ``guided`` is set, the largest-gap split is still accepted if
    the eigenvector band character (:func:`band_weights`) yields the same
    counts; otherwise the clustering is ambiguous.
    """
    s = HalfInt.of(s)
    eig = diagonalize(h)
    try:
        return cluster_bands(eig.values, s.dim)
    except ClusteringAmbiguityError:
        if not guided:
            raise
    by_gap = cluster_bands(eig.values, s.dim, threshold=0.0)
    gaps = _competing(eig.values, s.dim)
    try:
        by_character = projector_counts(band_weights(h, j, s, eig.vectors))
    except ClusteringAmbiguityError as exc:
        raise ClusteringAmbiguityError(*gaps, f"band character unclear: {exc.reason}") from exc
    if by_character != by_gap.counts:
        raise ClusteringAmbiguityError(
            *gaps, f"gap split {by_gap.counts} disagrees with band character {by_character}"
        )
    return replace(by_gap, method="gaps+character")


def _competing(values, n_bands):
    gaps = np.sort(np.diff(values))[::-1]
    return float(gaps[n_bands - 2]), float(gaps[n_bands - 1])


# -- theorem bookkeeping ------------------------------------------------------------


def large_j_threshold(s: SpinLike) -> HalfInt:
    """Smallest j treated as "large enough" for automated checks: 4s + 3."""
    s = HalfInt.of(s)
    return HalfInt(4 * s.twice + 6)


def is_large_j(j: SpinLike, s: SpinLike) -> bool:
    return HalfInt.of(j) >= large_j_threshold(s)


def theorem_residuals(counts: Sequence[int], chern: Sequence[int], j: SpinLike) -> list[int]:
    """N_g + C_g - (2j + 1) per band."""
    d = HalfInt.of(j).dim
    return [int(n) + int(c) - d for n, c in zip(counts, chern)]


# -- parameter scans ------------------------------------------------------------------


@dataclass(frozen=True)
class ChangePoint:
    lo: float
    hi: float
    before: tuple[int, ...]
    after: tuple[int, ...]

    @property
    def delta(self) -> tuple[int, ...]:
        return tuple(b - a for a, b in zip(self.before, self.after))

    def contains(self, t: float) -> bool:
        return self.lo <= t <= self.hi


@dataclass(frozen=True)
class ExchangeScan:
    """Band counts along a parameter grid. Flagged points hold ``None``."""

    parameter_values: tuple[float, ...]
    counts_per_value: tuple[Optional[tuple[int, ...]], ...]
    change_points: tuple[ChangePoint, ...]
    errors: dict = field(default_factory=dict)

    @property
    def flagged(self) -> list[float]:
        return [t for t, c in zip(self.parameter_values, self.counts_per_value) if c is None]


def scan_exchange(
    model: Callable[[float], HamiltonianSpec],
    j: SpinLike,
    s: SpinLike,
    t_grid: Sequence[float],
    guided: bool = True,
) -> ExchangeScan:
    """Band counts of ``build_quantum(model(t), j, s)`` along ``t_grid``.

    Points where clustering fails are flagged and skipped, so a change is
    bracketed by the nearest unflagged neighbours.
    """
    grid = [float(t) for t in t_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("t_grid must be sorted")
    counts: list[Optional[tuple[int, ...]]] = []
    errors = {}
    for t in grid:
        h = build_quantum(model(t), j, s)
        try:
            counts.append(band_counts(h, j, s, guided=guided).counts)
        except ChernbandError as exc:
            counts.append(None)
            errors[t] = exc
    changes = []
    last = None
    for t, c in zip(grid, counts):
        if c is None:
            continue
        if last is not None and last[1] != c:
            changes.append(ChangePoint(last[0], t, last[1], c))
        last = (t, c)
    return ExchangeScan(tuple(grid), tuple(counts), tuple(changes), errors)


# -- degeneracy search ---------------------------------------------------------------


def find_degeneracy(field: Callable, grid_depth: int) -> tuple[SpherePoint, float]:
    """Mesh vertex with the smallest gap between consecutive eigenvalues."""
    if grid_depth < 2:
        raise ValueError("grid_depth must be >= 2")
    tri = triangulate_sphere(grid_depth)
    vals = np.linalg.eigvalsh(np.asarray(field(tri.vertices)))
    gaps = np.min(np.diff(vals, axis=-1), axis=-1)
    k = int(np.argmin(gaps))
    return SpherePoint.from_vector(tri.vertices[k]), float(gaps[k])
