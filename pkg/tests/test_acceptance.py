"""Acceptance criteria, each at its pinned tolerance.

Every test collects all sub-checks before asserting, so a failing criterion
reports every clause that did not hold. The conftest prints one PASS/FAIL
line per criterion in the terminal summary.
"""

import numpy as np
import pytest

from chernband.band_spectrum import band_counts, find_degeneracy, scan_exchange, theorem_residuals
from chernband.chern_topology import (
    chern_from_eigenvectors,
    chern_indices,
    degree_formula,
    sum_rule_check,
    topological_charge,
    triangulate_sphere,
)
from chernband.hamiltonians import (
    LocalModelParams,
    TwoLevelField,
    build_quantum,
    local_model_levels,
    local_model_spectrum,
    local_model_symbol,
    model_eq1,
    semiclassical_field,
    tetrahedral_field,
    tetrahedral_spec,
)
from chernband.spin_algebra import NORTH, SOUTH, HalfInt, coherent_amplitudes, embed, make_rep

J = 10
SPINS = ("1/2", "1", "3/2")
DEPTH = 5


class Checks:
    def __init__(self):
        self.failed = []

    def __call__(self, ok, label):
        if not ok:
            self.failed.append(label)

    def verify(self):
        assert not self.failed, "; ".join(self.failed)


def eq1_case(t, s):
    h = build_quantum(model_eq1(t), J, s)
    counts = band_counts(h, J, s).counts
    chern = chern_indices(semiclassical_field(h, J, s), triangulate_sphere(DEPTH))
    return counts, chern


def labels(s):
    s = HalfInt.of(s)
    return [HalfInt(2 * k - s.twice).value for k in range(s.dim)]


@pytest.fixture(scope="module")
def eq1_limits():
    return {(t, s): eq1_case(t, s) for t in (0.25, 0.75) for s in SPINS}


@pytest.fixture(scope="module")
def tetrahedral_case():
    h = build_quantum(tetrahedral_spec(1.0, J), J, "1/2")
    counts = band_counts(h, J, "1/2").counts
    classical = chern_indices(tetrahedral_field(1.0, J), triangulate_sphere(DEPTH))
    reduced = chern_indices(semiclassical_field(h, J, "1/2"), triangulate_sphere(DEPTH))
    return counts, classical, reduced


@pytest.mark.acceptance(1, "Eq1 limits: N_g and C_g at t=0.25 and t=0.75, j=10")
def test_criterion_1_eq1_limits(eq1_limits):
    check = Checks()
    for s in SPINS:
        g = labels(s)
        counts, chern = eq1_limits[(0.25, s)]
        check(counts == tuple([21] * len(g)), f"s={s} t=0.25 N={counts}")
        check(chern.indices == tuple([0] * len(g)), f"s={s} t=0.25 C={chern.indices}")
        counts, chern = eq1_limits[(0.75, s)]
        check(counts == tuple(int(21 + 2 * x) for x in g), f"s={s} t=0.75 N={counts}")
        check(chern.indices == tuple(int(-2 * x) for x in g), f"s={s} t=0.75 C={chern.indices}")
    check.verify()


@pytest.mark.acceptance(2, "Theorem N_g + C_g = 2j+1; tetrahedral counts (17, 25)")
def test_criterion_2_theorem(eq1_limits, tetrahedral_case):
    check = Checks()
    for (t, s), (counts, chern) in eq1_limits.items():
        resid = theorem_residuals(counts, chern.indices, J)
        check(all(r == 0 for r in resid), f"eq1 t={t} s={s} residuals {resid}")
    counts, classical, reduced = tetrahedral_case
    check(counts == (2 * J - 3, 2 * J + 5), f"tetrahedral counts {counts}")
    for name, res in (("classical", classical), ("reduced", reduced)):
        resid = theorem_residuals(counts, res.indices, J)
        check(all(r == 0 for r in resid), f"tetrahedral ({name} field) residuals {resid}")
    check.verify()


@pytest.mark.acceptance(3, "Sum rule: sum of C_g is 0 for every full-band computation")
def test_criterion_3_sum_rule(eq1_limits, tetrahedral_case):
    check = Checks()
    for key, (_, chern) in eq1_limits.items():
        check(sum_rule_check(chern), f"eq1 {key}: {chern.indices}")
    for res in tetrahedral_case[1:]:
        check(sum_rule_check(res), f"tetrahedral: {res.indices}")
    check.verify()


@pytest.mark.acceptance(4, "Degree formula vs curvature; C+ = 4 sign(X); pole windings 2 sign(X)")
def test_criterion_4_degree_formula():
    check = Checks()
    tri = triangulate_sphere(DEPTH)
    for X in (1.0, -1.0, 0.3, -0.3):
        field = tetrahedral_field(X, J)
        wind = degree_formula(field, tri)
        curv = chern_indices(field, tri).indices[1]
        sign = int(np.sign(X))
        check(wind.c_plus == curv, f"X={X}: degree formula {wind.c_plus} vs curvature {curv}")
        check(wind.c_plus == 4 * sign, f"X={X}: C+ = {wind.c_plus}, expected {4 * sign}")
        poles = {
            name: [z.degree for z in wind.zeros if z.point.angle_to(p) < 1e-6]
            for name, p in (("north", NORTH), ("south", SOUTH))
        }
        for name, deg in poles.items():
            check(deg == [2 * sign], f"X={X}: {name} pole winding {deg}, expected {2 * sign}")
    field = TwoLevelField.from_matrix_field(
        semiclassical_field(build_quantum(model_eq1(1.0), J, "1/2"), J, "1/2")
    )
    wind = degree_formula(field, tri)
    curv = chern_indices(field, tri).indices[1]
    check(wind.c_plus == curv, f"eq1 t=1: degree formula {wind.c_plus} vs curvature {curv}")
    check(wind.c_plus == -1, f"eq1 t=1: C+ = {wind.c_plus}, expected -1")
    check.verify()


@pytest.mark.acceptance(5, "Local model: levels to 1e-8 for n <= 10; upper-band charge -1")
def test_criterion_5_local_model():
    check = Checks()
    for tt in (0.0, 1.0, -1.0, 3.0, -3.0):
        p = LocalModelParams(tt, 40)
        vals, edge = local_model_levels(p)
        bulk = vals[~edge]
        for label, e in local_model_spectrum(p):
            n = 0 if label == "0" else int(label[:-1])
            if n > 10:
                continue
            err = np.min(np.abs(bulk - e))
            check(err < 1e-8, f"t~={tt} level {label}: off by {err:.2e}")
    charge = topological_charge(local_model_symbol, (0.0, 0.0, 0.0), 0.5)
    check(charge[1] == -1, f"upper-band charge {charge[1]}, expected -1")
    check.verify()


@pytest.mark.acceptance(6, "Exchange scan: one interval containing 1/2, dN = (-1, +1), dN + dC = 0")
def test_criterion_6_exchange_scan():
    check = Checks()
    grid = np.linspace(0, 1, 11)
    scan = scan_exchange(model_eq1, J, "1/2", grid)
    check(len(scan.change_points) == 1, f"{len(scan.change_points)} change intervals")
    if scan.change_points:
        c = scan.change_points[0]
        check(c.contains(0.5), f"interval ({c.lo}, {c.hi}) misses 1/2")
        check(c.delta == (-1, 1), f"dN = {c.delta}")
        tri = triangulate_sphere(DEPTH)
        chern = [
            chern_indices(semiclassical_field(build_quantum(model_eq1(t), J, "1/2"), J, "1/2"), tri).indices
            for t in (c.lo, c.hi)
        ]
        dc = tuple(b - a for a, b in zip(*chern))
        check(all(n + k == 0 for n, k in zip(c.delta, dc)), f"dN {c.delta} + dC {dc} != 0")
    check.verify()


PROPERTY_FIELDS = {
    "eq1 t=0.25 s=1": lambda: semiclassical_field(build_quantum(model_eq1(0.25), J, 1), J, 1),
    "eq1 t=0.75 s=3/2": lambda: semiclassical_field(build_quantum(model_eq1(0.75), J, "3/2"), J, "3/2"),
    "eq1 t=1 s=1/2": lambda: semiclassical_field(build_quantum(model_eq1(1.0), J, "1/2"), J, "1/2"),
    "tetrahedral X=1": lambda: tetrahedral_field(1.0, J),
    "tetrahedral X=-0.3": lambda: tetrahedral_field(-0.3, J),
}


@pytest.mark.acceptance(7, "Property suite: quantization, refinement, gauge, orientation, su(2), coherent states")
def test_criterion_7_properties():
    check = Checks()
    rng = np.random.default_rng(20240601)
    for name, make in PROPERTY_FIELDS.items():
        field = make()
        for depth in (5, 6):
            tri = triangulate_sphere(depth)
            res = chern_indices(field, tri)
            worst = max(abs(r - i) for r, i in zip(res.raw, res.indices))
            check(worst < 1e-6, f"{name} depth {depth}: |raw - round| = {worst:.1e}")
            finer = chern_indices(field, tri.refine())
            check(finer.indices == res.indices, f"{name}: depth {depth} vs {depth + 1}")
            rev = chern_indices(field, tri.reversed())
            check(rev.indices == tuple(-i for i in res.indices), f"{name}: reversal gives {rev.indices}")
            _, vecs = np.linalg.eigh(field(tri.vertices))
            gauge = np.exp(2j * np.pi * rng.random((len(tri.vertices), vecs.shape[-1])))
            a = chern_from_eigenvectors(vecs, tri).indices
            b = chern_from_eigenvectors(vecs * gauge[:, None, :], tri).indices
            check(a == b, f"{name}: gauge changed indices {a} -> {b}")

    for twice in range(0, 61):
        r = make_rep(HalfInt(twice))
        j = twice / 2
        jx, jy, jz = r.jx, r.jy, r.jz
        for lhs, rhs, tag in ((jx @ jy - jy @ jx, jz, "xy"), (jy @ jz - jz @ jy, jx, "yz"), (jz @ jx - jx @ jz, jy, "zx")):
            err = np.max(np.abs(lhs - 1j * rhs))
            check(err < 1e-12, f"[J,J] {tag} j={j}: {err:.1e}")
        err = np.max(np.abs(jx @ jx + jy @ jy + jz @ jz - j * (j + 1) * np.eye(r.dim)))
        check(err < 1e-12, f"Casimir j={j}: {err:.1e}")
        check(np.array_equal(r.jplus, r.jminus.conj().T), f"J+ != (J-)^H at j={j}")

    v = rng.normal(size=(100, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    for twice in (1, 2, 7, 20, 40, 60):
        j = HalfInt(twice)
        r = make_rep(j)
        c = coherent_amplitudes(j, v)
        err = np.max(np.abs(np.linalg.norm(c, axis=1) - 1))
        check(err < 1e-12, f"coherent norm j={j}: {err:.1e}")
        for k, a in enumerate((r.jx, r.jy, r.jz)):
            e = np.einsum("vi,ij,vj->v", c.conj(), a, c).real
            err = np.max(np.abs(e - j.value * v[:, k]))
            check(err < 1e-10, f"<J> j={j} axis {k}: {err:.1e}")
        if j.value <= 20:
            w = rng.normal(size=(100, 3))
            w /= np.linalg.norm(w, axis=1, keepdims=True)
            d = coherent_amplitudes(j, w)
            ov = np.abs(np.einsum("vi,vi->v", c.conj(), d)) ** 2
            model = ((1 + np.einsum("vi,vi->v", v, w)) / 2) ** twice
            err = np.max(np.abs(ov - model))
            check(err < 1e-10, f"overlap modulus j={j}: {err:.1e}")

    rj, rs = make_rep(4), make_rep("3/2")
    for a in (rj.jx, rj.jy, rj.jz):
        for b in (rs.jx, rs.jy, rs.jz):
            A, B = embed(a, rs.identity), embed(rj.identity, b)
            err = np.max(np.abs(A @ B - B @ A))
            check(err < 1e-13, f"distinct factors commute: {err:.1e}")
    check.verify()


@pytest.mark.acceptance(8, "Degeneracy localization near the south pole at t=1/2")
def test_criterion_8_degeneracy():
    field = semiclassical_field(build_quantum(model_eq1(0.5), J, "1/2"), J, "1/2")
    p, gap = find_degeneracy(field, 6)
    check = Checks()
    check(p.angle_to(SOUTH) < 0.1, f"found at {p}, {p.angle_to(SOUTH):.3f} rad from south pole")
    check(gap < 1e-3, f"gap {gap:.2e}")
    check.verify()
