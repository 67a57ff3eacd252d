import cmath
import math

import numpy as np
import pytest

from isinglab.constants import TOL_SHOL
from isinglab.dca import (
    BVPSpec,
    check_harmonic,
    check_sholomorphic,
    harmonic_conjugate,
    harmonic_measure_solve,
    solve_riemann_bvp,
)
from isinglab.errors import EmptyTarget, NotHarmonic
from isinglab.lattice import (
    CORNER_TAU2,
    DomainSpec,
    corner_type,
    discretize,
    orient,
    project,
)
from isinglab.oracle import complex_observable, contour_observable

FIVE = discretize(DomainSpec("disk", 0j, 1.5, 0j), 1.0)
NINE = discretize(DomainSpec("disk", 0j, 2.2, 0j), 1.0)


def test_projection_basics():
    assert project(1 + 1j, 1) == 1
    assert project(1 + 1j, 1j) == 1j
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = complex(rng.normal(), rng.normal())
        tau = cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        p = project(v, tau)
        assert abs(project(p, tau) - p) < 1e-14


def test_zero_bvp_is_zero():
    f = solve_riemann_bvp(BVPSpec(graph=FIVE))
    assert max(abs(v) for v in f.values.values()) == 0.0
    assert check_sholomorphic(f)["residual"] < TOL_SHOL


def test_linearity_of_bvp():
    rng = np.random.default_rng(1)
    l1 = {b: complex(rng.normal(), rng.normal()) for b in FIVE.boundary_medials}
    l2 = {b: complex(rng.normal(), rng.normal()) for b in FIVE.boundary_medials}
    l12 = {b: l1[b] + l2[b] for b in l1}
    f1 = solve_riemann_bvp(BVPSpec(graph=FIVE, boundary_data=l1))
    f2 = solve_riemann_bvp(BVPSpec(graph=FIVE, boundary_data=l2))
    f12 = solve_riemann_bvp(BVPSpec(graph=FIVE, boundary_data=l12))
    worst = max(
        abs(f12.values[p] - f1.values[p] - f2.values[p]) for p in f12.values
    )
    assert worst < 1e-10


@pytest.mark.parametrize("mono", [False, True])
@pytest.mark.parametrize("src", [(1, 1), (-1, 1)])
def test_solver_reproduces_contour_observable(mono, src):
    p1 = orient(NINE.edges[src])
    f = solve_riemann_bvp(BVPSpec(graph=NINE, pole=p1, monodromy=mono))
    rep = check_sholomorphic(f)
    assert rep["residual"] < TOL_SHOL
    assert abs(rep["residue"] - (-1.0 / p1.sqrt_o)) < 1e-12
    for z in list(NINE.edges) + list(NINE.boundary_medials):
        if z == src:
            continue
        want = complex_observable(NINE, [p1], z, monodromy=mono)
        assert abs(want - f.values[z]) < 1e-12


def test_boundary_condition_of_solution():
    p1 = orient(NINE.edges[(1, 1)])
    f = solve_riemann_bvp(BVPSpec(graph=NINE, pole=p1))
    for b, bm in NINE.boundary_medials.items():
        assert abs((f.values[b] * cmath.sqrt(bm.normal)).imag) < 1e-12


def test_uniqueness_perturbation_violates_boundary():
    # adding a nonzero s-holomorphic field with zero data would contradict
    # uniqueness: solving with its boundary trace recovers it exactly
    p1 = orient(NINE.edges[(1, 1)])
    f = solve_riemann_bvp(BVPSpec(graph=NINE, pole=p1))
    trace = {b: f.values[b] for b in NINE.boundary_medials}
    g = solve_riemann_bvp(BVPSpec(graph=NINE, pole=p1, boundary_data=trace))
    # the re-solve with matching data keeps the boundary exactly on the line
    for b, bm in NINE.boundary_medials.items():
        resid = ((g.values[b] - trace[b]) * cmath.sqrt(bm.normal)).imag
        assert abs(resid) < 1e-12


def test_corner_recovery_from_axis_values():
    # a solved field is determined by its two axis corner sublattices
    p1 = orient(NINE.edges[(1, 1)])
    f = solve_riemann_bvp(BVPSpec(graph=NINE, pole=p1))
    for e in NINE.interior_edges:
        if e.medial == p1.medial:
            continue
        c1, ci = NINE.medial_axis_corners(e.medial)
        rebuilt = f.values[c1] + f.values[ci]
        assert abs(rebuilt - f.values[e.medial]) < 1e-12


def test_check_harmonic_stencil():
    # affine functions are exactly harmonic; |x|^2 has constant defect
    pts = {(x, y) for x in range(-9, 10, 2) for y in range(-8, 9, 2)}
    type1 = {p for p in pts if (p[0] + p[1]) % 2 == 1 and corner_type(p) == "1"}
    aff = {p: complex(p[0]) for p in type1}
    assert check_harmonic(aff, FIVE) < 1e-12
    quad = {p: complex(p[0] ** 2 + p[1] ** 2) for p in type1}
    # direct expansion: each diagonal step has |s|^2 = 8 in half-mesh
    # units, so the stencil defect is 4*8 = 32 (8 delta^2 in mesh units)
    stencil = [q for q in type1 if all(
        (q[0] + dx, q[1] + dy) in type1 for dx, dy in ((2, 2), (2, -2), (-2, 2), (-2, -2))
    )]
    assert stencil
    for q in stencil:
        acc = sum(quad[(q[0] + dx, q[1] + dy)] for dx, dy in ((2, 2), (2, -2), (-2, 2), (-2, -2)))
        assert abs(abs(acc - 4 * quad[q]) - 32.0) < 1e-12


def test_harmonic_conjugate_affine():
    # conjugate of Re(z) is Im(z) up to the anchor constant
    pts = {(x, y) for x in range(-11, 12) for y in range(-11, 12)}
    type1 = {p for p in pts if (p[0] + p[1]) % 2 == 1 and p[0] % 2 == 1 and corner_type(p) == "1"}
    u = {p: complex(p[0]) for p in type1}
    anchor_pt = next(p for p in pts if (p[0] + p[1]) % 2 == 1 and p[0] % 2 == 1 and corner_type(p) == "i")
    w = harmonic_conjugate(u, (anchor_pt, complex(anchor_pt[1])))
    for p, v in w.items():
        assert abs(v - p[1]) < 1e-10


def test_harmonic_conjugate_zero():
    pts = {(x, y) for x in range(-7, 8) for y in range(-7, 8)}
    type1 = {p for p in pts if (p[0] + p[1]) % 2 == 1 and p[0] % 2 == 1 and corner_type(p) == "1"}
    u = {p: 0j for p in type1}
    anchor_pt = (1, 0) if corner_type((1, 0)) == "i" else (-1, 0)
    w = harmonic_conjugate(u, (anchor_pt, 0j))
    assert all(abs(v) < 1e-14 for v in w.values())


def test_harmonic_conjugate_rejects_nonharmonic():
    pts = {(x, y) for x in range(-9, 10) for y in range(-9, 10)}
    type1 = {p for p in pts if (p[0] + p[1]) % 2 == 1 and p[0] % 2 == 1 and corner_type(p) == "1"}
    u = {p: complex(p[0] ** 2) for p in type1}
    anchor_pt = next(p for p in pts if (p[0] + p[1]) % 2 == 1 and p[0] % 2 == 1 and corner_type(p) == "i")
    with pytest.raises(NotHarmonic):
        harmonic_conjugate(u, (anchor_pt, 0j))


def test_harmonic_measure_solver():
    sites = {(x, y) for x in range(-10, 11, 2) for y in range(-10, 11, 2)
             if (x + y) % 4 == 0 and max(abs(x), abs(y)) < 10}
    boundary = {}
    for x in range(-12, 13, 2):
        for y in range(-12, 13, 2):
            if (x + y) % 4 == 0 and (x, y) not in sites:
                if max(abs(x), abs(y)) <= 12:
                    boundary[(x, y)] = 1.0
    sol = harmonic_measure_solve(sites, boundary)
    for p in sites:
        assert abs(sol[p] - 1.0) < 1e-10  # constant one
    with pytest.raises(EmptyTarget):
        harmonic_measure_solve(sites, {})


def test_harmonic_measure_range():
    sites = {(x, y) for x in range(-10, 11, 2) for y in range(-10, 11, 2)
             if (x + y) % 4 == 0 and max(abs(x), abs(y)) < 10}
    boundary = {}
    for x in range(-12, 13, 2):
        for y in range(-12, 13, 2):
            if (x + y) % 4 == 0 and (x, y) not in sites and max(abs(x), abs(y)) <= 12:
                boundary[(x, y)] = 1.0 if x > 0 else 0.0
    sol = harmonic_measure_solve(sites, boundary)
    assert all(-1e-12 <= sol[p] <= 1 + 1e-12 for p in sites)
