"""Hamiltonians on H_j (x) H_s, their coherent-state reduction, and named models.

A :class:`HamiltonianSpec` is a sum of real-weighted monomials
``coeff * (J-word / j**len(J-word)) (x) S-word``. Each monomial is made
Hermitian as (W + W^H)/2 before summation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np
from numpy.typing import NDArray

from .errors import IncompatibleSpinError, SpecError
from .spin_algebra import (
    HalfInt,
    SpherePoint,
    SpinLike,
    coherent_amplitudes,
    embed,
    make_rep,
)

J_LETTERS = ("Jx", "Jy", "Jz")
S_LETTERS = ("Sx", "Sy", "Sz")

SPEC_SCHEMA = {
    "type": "object",
    "required": ["terms"],
    "additionalProperties": False,
    "properties": {
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["coeff"],
                "additionalProperties": False,
                "properties": {
                    "coeff": {"type": "number"},
                    "j_word": {"type": "array", "items": {"enum": list(J_LETTERS)}},
                    "s_word": {"type": "array", "items": {"enum": list(S_LETTERS)}},
                },
            },
        }
    },
}


@dataclass(frozen=True)
class Term:
    coeff: float
    j_word: tuple[str, ...] = ()
    s_word: tuple[str, ...] = ()


@dataclass(frozen=True)
class HamiltonianSpec:
    """Declarative Hamiltonian: a tuple of :class:`Term`."""

    terms: tuple[Term, ...]

    def to_json(self) -> dict:
        return {
            "terms": [
                {"coeff": t.coeff, "j_word": list(t.j_word), "s_word": list(t.s_word)}
                for t in self.terms
            ]
        }

    @classmethod
    def from_json(cls, data: dict) -> "HamiltonianSpec":
        try:
            jsonschema.validate(data, SPEC_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise SpecError(f"invalid Hamiltonian spec: {exc.message}") from exc
        return cls(
            tuple(
                Term(float(t["coeff"]), tuple(t.get("j_word", ())), tuple(t.get("s_word", ())))
                for t in data["terms"]
            )
        )


def load_spec(path: str | Path) -> HamiltonianSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: not valid JSON ({exc})") from exc
    return HamiltonianSpec.from_json(data)


def _word(rep, word, prefix):
    out = rep.identity
    for letter in word:
        if letter not in (prefix + "x", prefix + "y", prefix + "z"):
            raise SpecError(f"unknown operator {letter!r}")
        out = out @ rep[letter]
    return out


def build_quantum(spec: HamiltonianSpec, j: SpinLike, s: SpinLike) -> NDArray[np.complex128]:
    """Hermitian matrix of ``spec`` on H_j (x) H_s, dimension (2j+1)(2s+1)."""
    j, s = HalfInt.of(j), HalfInt.of(s)
    rj, rs = make_rep(j), make_rep(s)
    jval = j.value
    h = np.zeros((rj.dim * rs.dim,) * 2, dtype=complex)
    for term in spec.terms:
        wj = _word(rj, term.j_word, "J")
        if term.j_word:
            wj = wj / jval ** len(term.j_word)
        w = embed(wj, _word(rs, term.s_word, "S"))
        h += term.coeff * (w + w.conj().T) / 2
    return h


def model_eq1(t: float) -> HamiltonianSpec:
    """(1 - t) Sz + (t/j) J.S; zero-weight parts are dropped."""
    terms = []
    if 1 - t != 0:
        terms.append(Term(1 - t, (), ("Sz",)))
    if t != 0:
        terms += [Term(t, (a,), (b,)) for a, b in zip(J_LETTERS, S_LETTERS)]
    return HamiltonianSpec(tuple(terms))


def tetrahedral_spec(X: float, j: SpinLike) -> HamiltonianSpec:
    """Quantized two-level tetrahedral model for s = 1/2.

    Built as -D (x) Sz + 2 Re(h12) (x) Sx - 2 Im(h12) (x) Sy, where
    D = h22 - h11 = (3 Jz^2 - j(j+1))/j^2, so that the (+, -) entry of the
    reduced 2x2 matrix is h12 and its diagonal is traceless.
    """
    jv = HalfInt.of(j).value
    return HamiltonianSpec(
        (
            Term(-3.0, ("Jz", "Jz"), ("Sz",)),
            Term((jv + 1) / jv, (), ("Sz",)),
            Term(2.0, ("Jx", "Jx"), ("Sx",)),
            Term(-2.0, ("Jy", "Jy"), ("Sx",)),
            Term(-2.0 * X, ("Jx", "Jy", "Jz"), ("Sy",)),
        )
    )


MODEL_PARAMS = {"eq1": "t", "tetrahedral": "X", "local": "t_tilde"}


def named_model(name: str, params: dict, j: SpinLike) -> HamiltonianSpec:
    if name == "eq1":
        return model_eq1(float(params.get("t", 0.0)))
    if name == "tetrahedral":
        return tetrahedral_spec(float(params.get("X", 1.0)), j)
    raise SpecError(f"no J (x) S spec for model {name!r}")


# -- coherent-state reduction -------------------------------------------------


def _check_dims(h, j: HalfInt, s: HalfInt):
    n = j.dim * s.dim
    if h.shape != (n, n):
        raise IncompatibleSpinError(
            f"matrix of shape {h.shape} does not act on H_{j} (x) H_{s} (dim {n})"
        )


def reduce_many(h, j: SpinLike, s: SpinLike, vectors) -> NDArray[np.complex128]:
    """<n|H|n> over the J factor for an array of unit vectors, shape (..., 2s+1, 2s+1)."""
    j, s = HalfInt.of(j), HalfInt.of(s)
    h = np.asarray(h)
    _check_dims(h, j, s)
    dj, ds = j.dim, s.dim
    c = coherent_amplitudes(j, vectors)
    lead = c.shape[:-1]
    c = c.reshape(-1, dj)
    h4 = h.reshape(dj, ds, dj, ds)
    # (N, ds, dj, ds) then contract the remaining J index
    left = np.tensordot(c.conj(), h4, axes=(1, 0))
    m = np.einsum("vanb,vn->vab", left, c)
    m = (m + np.conj(np.swapaxes(m, -1, -2))) / 2
    return m.reshape(*lead, ds, ds)


def semiclassical_reduce(h, j: SpinLike, s: SpinLike, p: SpherePoint) -> NDArray[np.complex128]:
    """(2s+1)x(2s+1) matrix M_ab = <coh(p), a| H |coh(p), b>."""
    return reduce_many(h, j, s, p.vector)


def semiclassical_field(h, j: SpinLike, s: SpinLike) -> Callable:
    """Vectorised field ``vectors -> reduced matrices`` for a fixed quantum H."""
    j, s = HalfInt.of(j), HalfInt.of(s)
    h = np.array(h)
    _check_dims(h, j, s)

    def field(vectors):
        return reduce_many(h, j, s, vectors)

    return field


# -- two-level fields ---------------------------------------------------------


@dataclass(frozen=True)
class TwoLevelField:
    """2x2 Hermitian field ((h11, h12), (conj h12, h22)) on the unit sphere.

    The three callables take arrays of unit vectors of shape (..., 3).
    """

    h11: Callable
    h22: Callable
    h12: Callable

    def matrix(self, vectors) -> NDArray[np.complex128]:
        v = np.asarray(vectors, dtype=float)
        a, d, b = self.h11(v), self.h22(v), self.h12(v)
        out = np.empty(v.shape[:-1] + (2, 2), dtype=complex)
        out[..., 0, 0] = a
        out[..., 1, 1] = d
        out[..., 0, 1] = b
        out[..., 1, 0] = np.conj(b)
        return out

    __call__ = matrix

    def splitting(self, vectors):
        """h22 - h11."""
        return self.h22(vectors) - self.h11(vectors)

    @classmethod
    def from_matrix_field(cls, field: Callable) -> "TwoLevelField":
        """Read a 2x2 matrix field entrywise."""
        return cls(
            lambda v: field(v)[..., 0, 0].real,
            lambda v: field(v)[..., 1, 1].real,
            lambda v: field(v)[..., 0, 1],
        )


def tetrahedral_field(X: float, j: SpinLike) -> TwoLevelField:
    """Classical tetrahedral field with J = j n, in the traceless gauge."""
    jv = HalfInt.of(j).value
    if jv < 1:
        raise ValueError("tetrahedral field needs j >= 1")

    def h12(v):
        v = np.asarray(v, dtype=float)
        x, y, z = v[..., 0], v[..., 1], v[..., 2]
        return (x**2 - y**2) + 1j * X * x * y * z

    def split(v):
        z = np.asarray(v, dtype=float)[..., 2]
        return 3 * z**2 - (jv + 1) / jv

    return TwoLevelField(lambda v: -split(v) / 2, lambda v: split(v) / 2, h12)


# -- local oscillator model near a conical contact ------------------------------


@dataclass(frozen=True)
class LocalModelParams:
    t_tilde: float
    truncation_n: int = 40

    def __post_init__(self):
        if self.truncation_n < 2:
            raise ValueError("truncation_n must be >= 2")

    @classmethod
    def from_t(cls, t: float, j: SpinLike, truncation_n: int = 40) -> "LocalModelParams":
        jv = HalfInt.of(j).value
        return cls((2 * t - 1) * math.sqrt(2 * jv), truncation_n)


def local_model_spectrum(params: LocalModelParams) -> list[tuple[str, float]]:
    """Closed-form levels in scaled units: E0 = t~, E_n^(+-) = +-sqrt(n + t~^2)."""
    tt = params.t_tilde
    out = [("0", tt)]
    for n in range(1, params.truncation_n + 1):
        e = math.sqrt(n + tt**2)
        out += [(f"{n}+", e), (f"{n}-", -e)]
    return out


def local_model_matrix(params: LocalModelParams) -> NDArray[np.float64]:
    """Scaled 2x2 oscillator model ((-t~, a), (a^+, t~)).

    Basis index 2*n + k for |n> (x) |k>, k = 0 for |+> and 1 for |->,
    n = 0..truncation_n.
    """
    n_max = params.truncation_n
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)
    up = np.array([[1.0, 0.0], [0.0, 0.0]])
    down = np.array([[0.0, 0.0], [0.0, 1.0]])
    raise_pm = np.array([[0.0, 1.0], [0.0, 0.0]])  # |+><-|
    eye = np.eye(n_max + 1)
    tt = params.t_tilde
    return (
        -tt * np.kron(eye, up)
        + tt * np.kron(eye, down)
        + np.kron(a, raise_pm)
        + np.kron(a.T, raise_pm.T)
    )


def local_model_levels(params: LocalModelParams):
    """Eigenvalues of the truncated matrix with an edge flag per level.

    A level is flagged as edge when most of its weight sits on oscillator
    states with n >= 0.8 * truncation_n.
    """
    vals, vecs = np.linalg.eigh(local_model_matrix(params))
    n_of_index = np.repeat(np.arange(params.truncation_n + 1), 2)
    high = n_of_index >= 0.8 * params.truncation_n
    edge_weight = np.sum(np.abs(vecs[high, :]) ** 2, axis=0)
    return vals, edge_weight > 0.5


def local_model_symbol(vectors) -> NDArray[np.complex128]:
    """Classical symbol ((-t~, x - ip), (x + ip, t~)) at points (x, p, t~)."""
    v = np.asarray(vectors, dtype=float)
    x, p, tt = v[..., 0], v[..., 1], v[..., 2]
    out = np.empty(v.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = -tt
    out[..., 1, 1] = tt
    out[..., 0, 1] = x - 1j * p
    out[..., 1, 0] = x + 1j * p
    return out
