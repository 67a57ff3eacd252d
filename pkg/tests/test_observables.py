import itertools
import math

import numpy as np
import pytest

from isinglab.constants import MU
from isinglab.errors import NotAntisymmetric
from isinglab.lattice import DomainSpec, OrientedPoint, discretize, edge_direction, orient, principal_sqrt
from isinglab.observables import (
    FullPlaneValues,
    ObservableKernel,
    assemble_A,
    fullplane_two_point,
    fused_energy_product,
    pfaffian,
    pfaffian_reference,
    richardson,
)
from isinglab.oracle import ExactMeasure, contour_observable

NINE = discretize(DomainSpec("disk", 0j, 2.2, 0j), 1.0)
MEAS = ExactMeasure(NINE)


def test_pfaffian_base_cases():
    assert pfaffian(np.zeros((0, 0))) == 1.0
    a = np.array([[0.0, 3.0], [-3.0, 0.0]])
    assert pfaffian(a) == 3.0
    b = np.zeros((4, 4))
    vals = {(0, 1): 1.0, (0, 2): 2.0, (0, 3): 3.0, (1, 2): 4.0, (1, 3): 5.0, (2, 3): 6.0}
    for (i, j), v in vals.items():
        b[i, j] = v
        b[j, i] = -v
    # a12 a34 - a13 a24 + a14 a23
    assert abs(pfaffian(b) - (1 * 6 - 2 * 5 + 3 * 4)) < 1e-12


def test_pfaffian_squares_to_determinant():
    rng = np.random.default_rng(3)
    for n in (2, 4, 6, 8, 10):
        m = rng.normal(size=(n, n))
        a = m - m.T
        pf = pfaffian(a)
        det = np.linalg.det(a)
        assert abs(pf * pf - det) < 1e-10 * max(1.0, abs(det))
        if n <= 8:
            assert abs(pf - pfaffian_reference(a)) < 1e-10 * max(1.0, abs(pf))


def test_pfaffian_odd_dimension_and_antisymmetry_check():
    assert pfaffian(np.zeros((3, 3))) == 0.0
    with pytest.raises(NotAntisymmetric):
        pfaffian(np.eye(4))


def test_kernel_two_point_matches_oracle():
    for mono in (False, True):
        ker = ObservableKernel(NINE, monodromy=mono)
        for src, tgt in [((1, 1), (-1, 1)), ((3, 1), (1, -1))]:
            for s1, b1 in ((1, 1), (-1, 1), (1, -1)):
                p1 = orient(NINE.edges[src], sign=s1, branch=b1)
                p2 = orient(NINE.edges[tgt])
                want = contour_observable(NINE, [p1, p2], monodromy=mono).real
                got = ker.two_point(p1, p2)
                assert abs(want - got) < 1e-12


def test_kernel_pair_correlation():
    ker = ObservableKernel(NINE)
    for med in [(1, 1), (3, 1)]:
        e = NINE.edges[med]
        want = MU - MEAS.energy_product([e])
        assert abs(ker.pair_correlation(e) - want) < 1e-12


def test_assembled_matrix_antisymmetric():
    ker = ObservableKernel(NINE)
    edges = [NINE.edges[(1, 1)], NINE.edges[(-1, 1)]]
    mat = assemble_A(ker, edges)
    assert np.max(np.abs(mat.data + mat.data.T)) < 1e-14


@pytest.mark.parametrize("mono", [False, True])
def test_fused_energy_products_match_enumeration(mono):
    ker = ObservableKernel(NINE, monodromy=mono)
    ea = MEAS.spin_product([(0, 0)])
    all_m = [(1, 1), (-1, 1), (-1, -1), (1, -1)]
    for m in (1, 2, 3, 4):
        for combo in itertools.combinations(all_m, m):
            edges = [NINE.edges[mm] for mm in combo]
            lhs = MEAS.energy_product(edges, sigma_face=(0, 0) if mono else None)
            if mono:
                lhs /= ea
            rhs = fused_energy_product(ker, edges)
            assert abs(lhs - rhs) < 1e-12, (mono, combo)


def test_orientation_choice_invariance_of_pfaffian():
    # the fused value is independent of the reference orientation branch
    ker = ObservableKernel(NINE)
    edges = [NINE.edges[(1, 1)], NINE.edges[(-1, 1)]]
    base = fused_energy_product(ker, edges)
    for s1, s2 in itertools.product((1, -1), repeat=2):
        orientations = [
            OrientedPoint(edges[0].medial, principal_sqrt(edge_direction(edges[0]) * s1)),
            OrientedPoint(edges[1].medial, principal_sqrt(edge_direction(edges[1]) * s2)),
        ]
        mat = assemble_A(ker, edges, orientations=orientations)
        assert abs(2.0 ** 2 * mat.pfaffian() - base) < 1e-12


def test_single_edge_energy_value():
    ker = ObservableKernel(NINE)
    e = NINE.edges[(1, 1)]
    val = fused_energy_product(ker, [e])
    want = MU - MEAS.spin_product([(0, 0)]) * 0  # placeholder guard
    want = MEAS.energy_product([e])
    assert abs(val - want) < 1e-12
    assert abs((MU - val) - MEAS.spin_product(list(e.faces))) < 1e-12


def test_richardson_recovers_polynomial():
    sizes = [8, 16, 32, 64]
    vals = [0.25 + 0.7 / L + 0.3 / L**2 - 0.1 / L**3 for L in sizes]
    assert abs(richardson(vals, sizes) - 0.25) < 1e-12


@pytest.mark.slow
def test_fullplane_two_point_properties():
    sizes = (8, 16, 32)
    fp = FullPlaneValues(monodromy=False, sizes=sizes)
    g = fp._kernels()[0].graph
    p1 = orient(g.edges[(1, 1)])
    p2 = orient(g.edges[(-1, 1)])
    v = fp.two_point(p1, p2, tol=1e-3)
    # antisymmetry under swap
    v_swap = fp.two_point(p2, p1, tol=1e-3)
    assert abs(v + v_swap) < 1e-6
    # translation invariance: same offset elsewhere
    p1t = orient(g.edges[(5, 1)])
    p2t = orient(g.edges[(3, 1)])
    # (-1,1)-(1,1) offset equals (3,1)-(5,1) offset
    v_t = fp.two_point(p1t, p2t, tol=1e-3)
    assert abs(v - v_t) < 5e-4
    # full-plane same-point entries vanish without monodromy
    assert fp.same_point((1, 1)) == 0.0


@pytest.mark.slow
def test_fullplane_monodromy_pair_correlation():
    fp = FullPlaneValues(monodromy=True, sizes=(8, 16, 32))
    # edges incident to the mark have exact limit 1
    assert fp.pair_correlation((1, 1)) == 1.0
    # a distant edge sits between mu (far limit) and 1 (incident limit)
    v = fp.pair_correlation((5, 1), tol=1e-2)
    assert MU < v < 1.0
