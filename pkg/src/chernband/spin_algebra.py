"""Angular momentum matrices, tensor embeddings and SU(2) coherent states.

Basis order is always descending, m = j, j-1, ..., -j, so |j, j> is the
first basis vector. Units are hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import numpy as np
from numpy.typing import NDArray

from .errors import IncompatibleSpinError


@dataclass(frozen=True, order=True)
class HalfInt:
    """Exact integer or half-integer, stored as twice its value."""

    twice: int

    @classmethod
    def of(cls, value: "SpinLike") -> "HalfInt":
        """Coerce ``int``, ``Fraction``, ``float`` or strings like ``"21/2"``."""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, str):
            text = value.strip()
            if "/" in text:
                num, den = text.split("/", 1)
                if int(den) != 2:
                    raise ValueError(f"not a half-integer: {value!r}")
                return cls(int(num))
            value = Fraction(text)
        doubled = Fraction(value) * 2
        if doubled.denominator != 1:
            raise ValueError(f"not a half-integer: {value!r}")
        return cls(int(doubled))

    @property
    def value(self) -> float:
        return self.twice / 2

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.twice, 2)

    @property
    def dim(self) -> int:
        """Dimension 2j + 1 of the spin-j irrep."""
        if self.twice < 0:
            raise ValueError(f"negative spin label {self}")
        return self.twice + 1

    def __float__(self) -> float:
        return self.value

    def __add__(self, other: "HalfInt") -> "HalfInt":
        return HalfInt(self.twice + HalfInt.of(other).twice)

    def __neg__(self) -> "HalfInt":
        return HalfInt(-self.twice)

    def __str__(self) -> str:
        if self.twice % 2 == 0:
            return str(self.twice // 2)
        return f"{self.twice}/2"


SpinLike = Union[HalfInt, int, float, str, Fraction]


def projections(j: SpinLike) -> list[HalfInt]:
    """Labels m = j, j-1, ..., -j in basis order."""
    j = HalfInt.of(j)
    return [HalfInt(j.twice - 2 * k) for k in range(j.dim)]


@dataclass(frozen=True, eq=False)
class AngularMomentumRep:
    spin: HalfInt
    dim: int
    jx: NDArray[np.complex128]
    jy: NDArray[np.complex128]
    jz: NDArray[np.complex128]
    jplus: NDArray[np.complex128]
    jminus: NDArray[np.complex128]

    def __getitem__(self, axis: str) -> NDArray[np.complex128]:
        return {"x": self.jx, "y": self.jy, "z": self.jz}[axis.lower()[-1]]

    @property
    def identity(self) -> NDArray[np.complex128]:
        return np.eye(self.dim, dtype=complex)


@lru_cache(maxsize=64)
def _rep_cached(twice: int) -> AngularMomentumRep:
    j = twice / 2
    dim = twice + 1
    m = j - np.arange(dim)
    jplus = np.zeros((dim, dim), dtype=complex)
    # J+ |j, m> = sqrt(j(j+1) - m(m+1)) |j, m+1>, and m+1 sits one row up.
    k = np.arange(1, dim)
    jplus[k - 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jminus = jplus.conj().T.copy()
    jx = (jplus + jminus) / 2
    jy = (jplus - jminus) / 2j
    jz = np.diag(m).astype(complex)
    for a in (jx, jy, jz, jplus, jminus):
        a.setflags(write=False)
    return AngularMomentumRep(HalfInt(twice), dim, jx, jy, jz, jplus, jminus)


def make_rep(j: SpinLike) -> AngularMomentumRep:
    """Matrices of Jx, Jy, Jz, J+ and J- for spin ``j``."""
    j = HalfInt.of(j)
    if j.twice < 0:
        raise ValueError(f"spin must be non-negative, got {j}")
    return _rep_cached(j.twice)


@dataclass(frozen=True)
class SpherePoint:
    """Point on the unit sphere in polar coordinates (radians)."""

    theta: float
    phi: float

    @classmethod
    def from_vector(cls, v) -> "SpherePoint":
        x, y, z = (float(c) for c in v)
        theta = math.atan2(math.hypot(x, y), z)
        phi = math.atan2(y, x) % (2 * math.pi)
        return cls(theta, phi)

    @property
    def vector(self) -> NDArray[np.float64]:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    def angle_to(self, other: "SpherePoint") -> float:
        c = float(np.clip(np.dot(self.vector, other.vector), -1.0, 1.0))
        return math.acos(c)

    def __str__(self) -> str:
        return f"(theta={self.theta:.6g}, phi={self.phi:.6g})"


NORTH = SpherePoint(0.0, 0.0)
SOUTH = SpherePoint(math.pi, 0.0)


@dataclass(frozen=True, eq=False)
class CoherentState:
    point: SpherePoint
    amplitudes: NDArray[np.complex128]

    @property
    def spin(self) -> HalfInt:
        return HalfInt(len(self.amplitudes) - 1)


def coherent_amplitudes(j: SpinLike, vectors) -> NDArray[np.complex128]:
    """Coherent-state amplitudes for an array of unit vectors.

    Uses the closed form of exp(-i phi Jz) exp(-i theta Jy) |j, j>::

        c_m = sqrt(binom(2j, j+m)) cos(theta/2)^(j+m) sin(theta/2)^(j-m) exp(-i m phi)

    Parameters
    ----------
    j : spin label
    vectors : array_like, shape (..., 3)

    Returns
    -------
    ndarray, shape (..., 2j+1)
    """
    j = HalfInt.of(j)
    v = np.asarray(vectors, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    rho = np.hypot(x, y)
    r = np.sqrt(rho**2 + z**2)
    cos_half = np.sqrt(np.clip((1 + z / r) / 2, 0.0, 1.0))
    sin_half = np.sqrt(np.clip((1 - z / r) / 2, 0.0, 1.0))
    phi = np.arctan2(y, x)

    n = j.twice
    up = np.arange(n, -1, -1)  # j + m
    m = (up - n / 2)
    binom = np.sqrt(np.array([math.comb(n, int(k)) for k in up], dtype=float))
    amp = (
        binom
        * cos_half[..., None] ** up
        * sin_half[..., None] ** (n - up)
        * np.exp(-1j * m * phi[..., None])
    )
    return amp


def coherent_state(rep: AngularMomentumRep, p: SpherePoint) -> CoherentState:
    """Spin coherent state R(p)|j, j> with R = exp(-i phi Jz) exp(-i theta Jy)."""
    amp = coherent_amplitudes(rep.spin, p.vector)
    amp.setflags(write=False)
    return CoherentState(p, amp)


def overlap(a: CoherentState, b: CoherentState) -> complex:
    """Inner product <a|b>."""
    if a.amplitudes.shape != b.amplitudes.shape:
        raise IncompatibleSpinError(
            f"cannot overlap spin {a.spin} with spin {b.spin}"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def embed(op_a, op_b) -> NDArray[np.complex128]:
    """Operator op_a (x) op_b on H_j (x) H_s, j index major."""
    op_a = np.asarray(op_a)
    op_b = np.asarray(op_b)
    for name, op in (("first", op_a), ("second", op_b)):
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ValueError(f"{name} factor must be square, got shape {op.shape}")
    return np.kron(op_a, op_b)
