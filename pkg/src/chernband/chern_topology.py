"""Chern indices of Hermitian matrix fields over the sphere.

Berry phases are summed over an outward-oriented triangulation of the unit
sphere. Each face contributes ``-arg(<u1|u2><u2|u3><u3|u1>)`` per band. With
this sign the field n.S gives C_g = -2g, which is the convention under
which band counts obey N_g = (2j + 1) - C_g.

Fields are vectorised callables: an array of unit vectors of shape (N, 3)
maps to matrices of shape (N, m, m).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import (
    ConicalContactError,
    DegeneracyError,
    MeshTooCoarseError,
    NonAdmissibleError,
    WindingError,
)
from .hamiltonians import TwoLevelField
from .spin_algebra import HalfInt, SpherePoint, SpinLike, coherent_amplitudes

DEFAULT_MAX_DEPTH = 9
ADMISSIBLE_PHASE = math.pi / 2
MIN_VERTEX_GAP = 1e-8


def max_depth() -> int:
    """Refinement cap, overridable through CHERNBAND_MAX_DEPTH."""
    return int(os.environ.get("CHERNBAND_MAX_DEPTH", DEFAULT_MAX_DEPTH))


# -- triangulation --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SphereTriangulation:
    vertices: NDArray[np.float64]  # (V, 3) unit vectors
    faces: NDArray[np.int64]  # (F, 3) oriented vertex triples
    depth: int

    @property
    def points(self) -> list[SpherePoint]:
        return [SpherePoint.from_vector(v) for v in self.vertices]

    def edges(self) -> NDArray[np.int64]:
        e = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges()) + len(self.faces)

    def orientation_signs(self) -> NDArray[np.float64]:
        """+1 for faces whose normal points outward, -1 otherwise."""
        a, b, c = (self.vertices[self.faces[:, k]] for k in range(3))
        return np.sign(np.einsum("ij,ij->i", np.cross(b - a, c - a), a + b + c))

    def reversed(self) -> "SphereTriangulation":
        return SphereTriangulation(self.vertices, self.faces[:, ::-1].copy(), self.depth)

    def refine(self) -> "SphereTriangulation":
        """Split every face into four via projected edge midpoints."""
        f = self.faces
        nv = len(self.vertices)
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        uniq, inv = np.unique(np.sort(e, axis=1), axis=0, return_inverse=True)
        mid = self.vertices[uniq[:, 0]] + self.vertices[uniq[:, 1]]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        inv = inv.reshape(3, -1) + nv
        ab, bc, ca = inv
        a, b, c = f[:, 0], f[:, 1], f[:, 2]
        new = np.concatenate(
            [
                np.stack([a, ab, ca], 1),
                np.stack([ab, b, bc], 1),
                np.stack([ca, bc, c], 1),
                np.stack([ab, bc, ca], 1),
            ]
        )
        return SphereTriangulation(np.vstack([self.vertices, mid]), new, self.depth + 1)

    def neighbours(self) -> list[NDArray[np.int64]]:
        edges = self.edges()
        nb: list[list[int]] = [[] for _ in range(len(self.vertices))]
        for a, b in edges:
            nb[a].append(b)
            nb[b].append(a)
        return [np.array(x) for x in nb]

    def spacing(self) -> float:
        """Mean edge length in radians."""
        e = self.edges()
        d = np.einsum("ij,ij->i", self.vertices[e[:, 0]], self.vertices[e[:, 1]])
        return float(np.mean(np.arccos(np.clip(d, -1, 1))))


def _octahedron() -> SphereTriangulation:
    v = np.array(
        [[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
    )
    faces = []
    for k in range(4):
        a, b = k, (k + 1) % 4
        faces += [(4, a, b), (5, b, a)]
    return SphereTriangulation(v, np.array(faces, dtype=np.int64), 0)


def triangulate_sphere(depth: int) -> SphereTriangulation:
    """Octahedron subdivided ``depth`` times: 8 * 4**depth outward faces."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    tri = _octahedron()
    for _ in range(depth):
        tri = tri.refine()
    return tri


# -- Berry-phase Chern indices ------------------------------------------------------


@dataclass(frozen=True)
class ChernResult:
    indices: tuple[int, ...]
    raw: tuple[float, ...]
    max_face_phase: float
    depth_used: int

    def to_json(self) -> dict:
        return {
            "indices": list(self.indices),
            "raw": list(self.raw),
            "max_face_phase": self.max_face_phase,
            "depth": self.depth_used,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ChernResult":
        return cls(
            tuple(int(i) for i in data["indices"]),
            tuple(float(r) for r in data["raw"]),
            float(data["max_face_phase"]),
            int(data["depth"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def face_phases(vectors: NDArray[np.complex128], faces: NDArray[np.int64]) -> NDArray[np.float64]:
    """Per-face, per-band Berry phase -arg(<u1|u2><u2|u3><u3|u1>).

    ``vectors`` has shape (V, m, m) with eigenvectors in columns, as
    returned by ``numpy.linalg.eigh``. Output shape (F, m).
    """
    u1, u2, u3 = (vectors[faces[:, k]] for k in range(3))

    def link(a, b):
        return np.einsum("fib,fib->fb", a.conj(), b)

    return -np.angle(link(u1, u2) * link(u2, u3) * link(u3, u1))


def chern_from_eigenvectors(vectors, tri: SphereTriangulation) -> ChernResult:
    """Chern indices from per-vertex eigenvector frames, without refinement."""
    phases = face_phases(np.asarray(vectors), tri.faces)
    raw = phases.sum(axis=0) / (2 * math.pi)
    return ChernResult(
        tuple(int(round(r)) for r in raw),
        tuple(float(r) for r in raw),
        float(np.max(np.abs(phases))) if len(phases) else 0.0,
        tri.depth,
    )


def _vertex_eigh(field: Callable, tri: SphereTriangulation, what: str = "eigenvalue degeneracy"):
    mats = np.asarray(field(tri.vertices))
    vals, vecs = np.linalg.eigh(mats)
    if vals.shape[-1] > 1:
        gaps = np.min(np.diff(vals, axis=-1), axis=-1)
        k = int(np.argmin(gaps))
        if gaps[k] < MIN_VERTEX_GAP:
            raise DegeneracyError(SpherePoint.from_vector(tri.vertices[k]), float(gaps[k]), what)
    return vals, vecs


def chern_indices(field: Callable, tri: SphereTriangulation, cap: int | None = None) -> ChernResult:
    """Chern index of every band of ``field`` over the sphere, g ascending.

    The mesh is refined one level at a time while some face phase reaches
    pi/2, up to depth ``cap`` (default :func:`max_depth`).

    Raises
    ------
    DegeneracyError
        Two eigenvalues collide at a vertex.
    NonAdmissibleError
        The cap is reached with a face phase still >= pi/2, or the sum is
        not integer.
    """
    cap = max_depth() if cap is None else cap
    while True:
        _, vecs = _vertex_eigh(field, tri)
        res = chern_from_eigenvectors(vecs, tri)
        if res.max_face_phase < ADMISSIBLE_PHASE:
            break
        if tri.depth >= cap:
            raise NonAdmissibleError(
                f"max face phase {res.max_face_phase:.3f} >= pi/2 at refinement cap depth {cap}"
            )
        tri = tri.refine()
    worst = max(abs(r - i) for r, i in zip(res.raw, res.indices))
    if worst >= 1e-6:
        raise NonAdmissibleError(f"Berry-phase sum not integer (off by {worst:.3e})")
    return res


def sum_rule_check(result: ChernResult) -> bool:
    """True iff the indices of all bands add up to zero."""
    return sum(result.indices) == 0


# -- winding numbers and the two-level degree formula -----------------------------------


def _tangent_frame(c):
    """Orthonormal (e1, e2) with e1 x e2 = c."""
    c = np.asarray(c, dtype=float)
    ref = np.array([1.0, 0.0, 0.0]) if abs(c[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    if abs(c[2]) > 0.9:
        # keep (e1, e2) = (x, y) at the north pole so the direct circle runs with phi
        ref = np.array([1.0, 0.0, 0.0])
    e1 = ref - np.dot(ref, c) * c
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    return e1, e2


def circle_points(center: SpherePoint, radius: float, samples: int) -> NDArray[np.float64]:
    """Points of the direct (counter-clockwise seen from outside) circle."""
    c = center.vector
    e1, e2 = _tangent_frame(c)
    a = 2 * math.pi * np.arange(samples) / samples
    return (
        math.cos(radius) * c
        + math.sin(radius) * (np.cos(a)[:, None] * e1 + np.sin(a)[:, None] * e2)
    )


def winding_number(f: Callable, center: SpherePoint, radius: float, samples: int = 256) -> int:
    """Turns of f around 0 along the direct circle of given angular radius."""
    if samples < 64:
        raise ValueError("samples must be >= 64")
    vals = np.asarray(f(circle_points(center, radius, samples)), dtype=complex)
    k = int(np.argmin(np.abs(vals)))
    if abs(vals[k]) < 1e-12:
        raise WindingError(f"circle passes through a zero of f near sample {k}")
    steps = np.angle(np.roll(vals, -1) / vals)
    if np.max(np.abs(steps)) > math.pi / 2:
        raise WindingError(
            f"undersampled circle: phase step {np.max(np.abs(steps)):.3f} > pi/2 with {samples} samples"
        )
    raw = steps.sum() / (2 * math.pi)
    n = int(round(raw))
    if abs(raw - n) >= 0.1:
        raise WindingError(f"non-integer winding {raw:.4f}")
    return n


@dataclass(frozen=True)
class Zero:
    point: SpherePoint
    degree: int
    in_s_plus: bool


@dataclass(frozen=True)
class WindingResult:
    """Zeros of h12 with their degrees, and the resulting upper-band index.

    ``degree`` is the winding along the direct circle. Under the Berry-phase
    orientation used by :func:`chern_indices` the upper band index is minus
    the sum of degrees over zeros in S+, so ``c_plus = -sum(...)``.
    """

    zeros: tuple[Zero, ...]
    c_plus: int

    @property
    def c_minus(self) -> int:
        return -self.c_plus

    def to_json(self) -> dict:
        return {
            "c_plus": self.c_plus,
            "c_minus": self.c_minus,
            "zeros": [
                {"theta": z.point.theta, "phi": z.point.phi, "degree": z.degree, "in_S_plus": z.in_s_plus}
                for z in self.zeros
            ],
        }


def _refine_zero(h12: Callable, v0, step: float, tol: float = 1e-9):
    """Compass search for a local minimum of |h12| in the tangent plane."""
    v = np.array(v0, dtype=float)
    best = abs(complex(h12(v)))
    dirs = [(math.cos(a), math.sin(a)) for a in np.arange(8) * math.pi / 4]
    while step > tol and best > 0:
        e1, e2 = _tangent_frame(v)
        trial = np.array([v + step * (c * e1 + s * e2) for c, s in dirs])
        trial /= np.linalg.norm(trial, axis=1, keepdims=True)
        vals = np.abs(np.asarray(h12(trial)))
        k = int(np.argmin(vals))
        if vals[k] < best:
            v, best = trial[k], float(vals[k])
        else:
            step /= 2
    return v, best


def degree_formula(
    field: TwoLevelField,
    tri: SphereTriangulation,
    zero_tol: float | None = None,
    samples: int = 256,
) -> WindingResult:
    """Upper-band index of a two-level field from the zeros of h12.

    Local minima of |h12| on the mesh are refined to 1e-8, kept when the
    refined modulus is below ``zero_tol`` (default 1e-4 * max |h12| on the
    mesh), and their degree is the winding of h12 along a direct circle of
    radius three mesh cells. Zeros where h22 - h11 > 0 contribute.
    """
    v = tri.vertices
    mod = np.abs(field.h12(v))
    scale = float(np.max(mod))
    if zero_tol is None:
        zero_tol = 1e-4 * scale
    spacing = tri.spacing()
    radius = 3 * spacing

    found: list[NDArray[np.float64]] = []
    for i, nb in enumerate(tri.neighbours()):
        if mod[i] > np.min(mod[nb]):
            continue
        z, m = _refine_zero(field.h12, v[i], spacing)
        if m >= zero_tol:
            continue
        if any(np.linalg.norm(z - w) < 1e-6 for w in found):
            continue
        found.append(z)

    for a in range(len(found)):
        for b in range(a + 1, len(found)):
            sep = math.acos(float(np.clip(np.dot(found[a], found[b]), -1, 1)))
            if sep < radius:
                raise MeshTooCoarseError(
                    f"zeros {SpherePoint.from_vector(found[a])} and {SpherePoint.from_vector(found[b])} "
                    f"are {sep:.3e} apart, below winding radius {radius:.3e}; use a deeper mesh"
                )

    split_scale = max(float(np.max(np.abs(field.splitting(v)))), 1e-300)
    zeros = []
    for z in found:
        p = SpherePoint.from_vector(z)
        split = float(field.splitting(z))
        if abs(split) < 1e-8 * split_scale:
            raise ConicalContactError(p)
        n, deg = samples, None
        while deg is None:
            try:
                deg = winding_number(field.h12, p, radius, n)
            except WindingError:
                if n >= 1 << 16:
                    raise
                n *= 4
        zeros.append(Zero(p, deg, split > 0))
    c_plus = -sum(z.degree for z in zeros if z.in_s_plus)
    return WindingResult(tuple(zeros), c_plus)


# -- topological charge of a degeneracy ----------------------------------------------------


def topological_charge(
    family: Callable,
    center: Sequence[float],
    radius: float,
    depth: int = 4,
) -> tuple[int, ...]:
    """Band indices over a small sphere around ``center`` in parameter space.

    The sphere carries the outward orientation of the coordinate frame in
    which ``family`` is written, and the same Berry sign as
    :func:`chern_indices`.
    """
    c = np.asarray(center, dtype=float)

    def on_sphere(units):
        return family(c + radius * np.asarray(units))

    try:
        res = chern_indices(on_sphere, triangulate_sphere(depth))
    except DegeneracyError as exc:
        raise DegeneracyError(
            exc.point, exc.gap, f"degeneracy on the sampling sphere (radius {radius}); change the radius"
        ) from exc
    return res.indices


# -- Husimi distribution ------------------------------------------------------------


def husimi_map(state, s: SpinLike, tri: SphereTriangulation) -> NDArray[np.float64]:
    """|<coh(s, n)|state>|^2 at every vertex of ``tri``."""
    s = HalfInt.of(s)
    state = np.asarray(state, dtype=complex)
    if state.shape != (s.dim,):
        raise ValueError(f"state of length {len(state)} is not in H_{s}")
    c = coherent_amplitudes(s, tri.vertices)
    return np.abs(c.conj() @ state) ** 2
