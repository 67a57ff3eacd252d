import itertools
import math

import numpy as np
import pytest

from isinglab.constants import ALPHA, BETA_C, MU
from isinglab.errors import TooManyEdges, TooManyFaces
from isinglab.lattice import DomainSpec, discretize, orient, OrientedPoint
from isinglab.oracle import (
    ExactMeasure,
    complex_observable,
    contour_observable,
    enumerate_contours,
    exact_pattern_prob,
    fused_energy_product_fusion_path,
    partition_function,
)


def disk(radius, delta=1.0, center=0j):
    return discretize(DomainSpec("disk", center, radius, 0j), delta)


ONE_FACE = disk(1.2)
FIVE_FACE = disk(1.5)
NINE_FACE = disk(2.2)


def test_single_face_magnetization():
    m = ExactMeasure(ONE_FACE)
    expect = math.tanh(4 * BETA_C)
    assert abs(expect - 2 * math.sqrt(2) / 3) < 1e-15
    assert abs(m.spin_product([(0, 0)]) - expect) < 1e-14


def test_zero_interior_expectation_of_one():
    m = ExactMeasure(ONE_FACE)
    assert abs(m.expectation(lambda s: np.ones(len(s))) - 1.0) < 1e-14


def test_adjacent_pair_correlation_golden():
    g = discretize(DomainSpec("disk", 0.5 + 0.5j, 1.6, 0j), 1.0)
    assert len(g.faces) == 6
    m = ExactMeasure(g)
    val = m.spin_product([(-2, 2), (0, 0)])
    # frozen from the 2^6-term enumeration
    assert abs(val - 0.8619650607006198) < 1e-12


def test_enumeration_cap():
    with pytest.raises(TooManyFaces):
        ExactMeasure(NINE_FACE, cap=4)


def test_contour_count_one_face():
    cfgs = list(enumerate_contours(ONE_FACE, ()))
    assert len(cfgs) == 2
    sizes = sorted(len(c.edges) for c in cfgs)
    assert sizes == [0, 4]


def test_contour_cap():
    with pytest.raises(TooManyEdges):
        list(enumerate_contours(NINE_FACE, (), cap=5))


@pytest.mark.parametrize("g", [ONE_FACE, FIVE_FACE, NINE_FACE])
def test_low_temperature_correspondence(g):
    m = ExactMeasure(g)
    z_contour = partition_function(g)
    z_spin = m.Z * math.exp(-BETA_C * len(g.edges))
    assert abs(z_contour - z_spin) < 1e-12 * z_spin
    # contour configurations biject with spin configurations
    assert len(list(enumerate_contours(g, ()))) == 2 ** len(g.faces)


@pytest.mark.parametrize("g", [ONE_FACE, FIVE_FACE, NINE_FACE])
def test_monodromy_partition_function(g):
    m = ExactMeasure(g)
    za = partition_function(g, monodromy=True)
    z = partition_function(g)
    assert abs(za / z - m.spin_product([(0, 0)])) < 1e-12


def test_endpoint_parity():
    # every configuration has exactly one half edge per endpoint
    for cfg in enumerate_contours(FIVE_FACE, ((1, 1), (-1, 1))):
        assert cfg.n_half == 2
        degs = {}
        for mkey in cfg.edges:
            for v in FIVE_FACE.edges[mkey].vertices:
                degs[v] = degs.get(v, 0) + 1
        for mkey, v in cfg.half_edges:
            degs[v] = degs.get(v, 0) + 1
        assert all(d % 2 == 0 for d in degs.values())


def test_observable_swap_antisymmetry_and_reality():
    p1 = orient(FIVE_FACE.edges[(1, 1)])
    p2 = orient(FIVE_FACE.edges[(-1, 1)])
    f12 = contour_observable(FIVE_FACE, [p1, p2])
    f21 = contour_observable(FIVE_FACE, [p2, p1])
    assert abs(f12.imag) < 1e-14
    assert abs(f12 + f21) < 1e-14
    # branch flip negates
    p1b = OrientedPoint(p1.medial, -p1.sqrt_o)
    assert abs(contour_observable(FIVE_FACE, [p1b, p2]) + f12) < 1e-14


def test_pairing_invariance_small():
    # all admissible walk decompositions give equal weights
    p1 = orient(FIVE_FACE.edges[(1, 1)])
    p2 = orient(FIVE_FACE.edges[(-1, 1)])
    contour_observable(FIVE_FACE, [p1, p2], check_pairings=True)
    contour_observable(FIVE_FACE, [p1, p2], monodromy=True, check_pairings=True)


def test_two_point_golden_two_by_two():
    # golden value on the 5-face domain frozen from the contour summation
    p1 = orient(FIVE_FACE.edges[(1, 1)])
    p2 = orient(FIVE_FACE.edges[(-1, 1)])
    val = contour_observable(FIVE_FACE, [p1, p2]).real
    assert abs(val - (-0.0323529411764706)) < 1e-12


def test_boundary_condition():
    p1 = orient(FIVE_FACE.edges[(1, 1)])
    for mono in (False, True):
        for b, bm in FIVE_FACE.boundary_medials.items():
            h = complex_observable(FIVE_FACE, [p1], b, monodromy=mono)
            assert abs((h * np.sqrt(complex(bm.normal))).imag) < 1e-13


def test_multipoint_pfaffian_identity():
    # four- and six-point observables reduce to Pfaffians of two-point values
    from isinglab.observables import pfaffian_reference

    mets = [(1, 1), (-1, 1), (-1, -1), (1, -1), (3, 1), (1, 3)]
    pts = [orient(NINE_FACE.edges[m]) for m in mets]
    for mono in (False, True):
        for n_pts in (4, 6):
            sel = pts[:n_pts]
            f = contour_observable(NINE_FACE, sel, monodromy=mono).real
            a = np.zeros((n_pts, n_pts))
            for i, j in itertools.combinations(range(n_pts), 2):
                a[i, j] = contour_observable(
                    NINE_FACE, [sel[i], sel[j]], monodromy=mono
                ).real
                a[j, i] = -a[i, j]
            assert abs(f - pfaffian_reference(a)) < 1e-12


@pytest.mark.parametrize("mono", [False, True])
def test_fusion_path_matches_enumeration(mono):
    m = ExactMeasure(NINE_FACE)
    ea = m.spin_product([(0, 0)])
    for meds in [[(1, 1)], [(1, 1), (-1, 1)], [(1, 1), (-1, -1), (3, 1)]]:
        edges = [NINE_FACE.edges[mm] for mm in meds]
        lhs = m.energy_product(edges, sigma_face=(0, 0) if mono else None)
        if mono:
            lhs /= ea
        rhs = fused_energy_product_fusion_path(NINE_FACE, edges, monodromy=mono)
        assert abs(lhs - rhs) < 1e-12


def test_exact_pattern_probabilities_partition():
    offs = ((1, 1), (-1, 1), (-1, -1), (1, -1))
    total = 0.0
    import itertools as it

    for sub in it.chain.from_iterable(
        it.combinations(offs, k) for k in range(5)
    ):
        total += exact_pattern_prob(NINE_FACE, offs, sub)
    # separating sets of the cross biject with the 16 symmetric patterns
    assert abs(total - 1.0) < 1e-12


def test_sensitive_patterns_sum_to_symmetric():
    offs = ((1, 1),)
    for sub in ((), ((1, 1),)):
        p = exact_pattern_prob(NINE_FACE, offs, sub)
        pp = exact_pattern_prob(NINE_FACE, offs, sub, sigma_a=+1)
        pm = exact_pattern_prob(NINE_FACE, offs, sub, sigma_a=-1)
        assert abs(pp + pm - p) < 1e-14


def test_pattern_golden_three_by_three():
    # 3x3 block of faces; golden value frozen from the spin enumeration
    assert len(NINE_FACE.faces) == 9
    val = exact_pattern_prob(NINE_FACE, ((1, 1),), ((1, 1),))
    assert abs(val - 0.08090547755156091) < 1e-12
