import math

import pytest

from isinglab.errors import (
    DiagramTouchesBoundary,
    MarkedPointOutside,
    MeshTooCoarse,
    NotBoundary,
)
from isinglab.lattice import (
    DIAGRAM_PRESETS,
    DomainGraph,
    DomainSpec,
    DoubleCover,
    corner_type,
    corner_vertex,
    discretize,
    embed_diagram,
    is_face,
    is_medial,
    is_vertex,
)


def disk(radius, delta, center=0j, a=0j):
    return discretize(DomainSpec("disk", center, radius, a), delta)


def test_too_coarse_mesh():
    with pytest.raises(MeshTooCoarse):
        discretize(DomainSpec("disk", 0j, 1.0, 0j), 2.0)


def test_marked_point_outside():
    with pytest.raises(MarkedPointOutside):
        discretize(DomainSpec("disk", 2.0 + 0j, 1.0, 0j), 0.25)


@pytest.mark.parametrize(
    "spec,delta",
    [
        (DomainSpec("disk", 0j, 1.0, 0j), 0.25),
        (DomainSpec("disk", 0.2 + 0.1j, 1.3, 0j), 0.5),
        (DomainSpec("square", 0j, 1.05, 0j), 0.5),
        (DomainSpec("square", -0.1j, 0.8, 0j), 0.25),
    ],
)
def test_euler_relation(spec, delta):
    g = discretize(spec, delta)
    assert g.euler_characteristic() == 1


def test_disk_quarter_mesh_face_count_golden():
    # golden value from the geometric membership test
    g = disk(1.0, 0.25)
    assert len(g.faces) == 21
    assert g.marked_face == (0, 0)


def test_element_classes_partition():
    g = disk(1.0, 0.25)
    for f in g.faces:
        assert is_face(f)
    for v in g.vertices:
        assert is_vertex(v)
    for m in g.edges:
        assert is_medial(m)
    counts = {}
    for c in g.corner_medial_adjacency():
        counts[corner_type(c)] = counts.get(corner_type(c), 0) + 1
    assert len(counts) == 4
    assert len(set(counts.values())) == 1  # four equal sublattices


def test_corner_sublattice_spacing():
    g = disk(1.0, 0.25)
    type1 = sorted(c for c in g.corner_medial_adjacency() if corner_type(c) == "1")
    base = type1[0]
    # every same-type corner differs by a (2,2)-lattice combination
    for c in type1:
        dx, dy = c[0] - base[0], c[1] - base[1]
        assert (dx + dy) % 4 == 0 and dx % 2 == 0


def test_interior_medials_have_four_corners():
    g = disk(1.0, 0.25)
    for e in g.interior_edges:
        x, y = e.medial
        for c in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            assert corner_vertex(c) in g.vertices


def test_outward_normals():
    g = discretize(DomainSpec("square", 0j, 1.05, 0j), 0.5)
    total = 0j
    rightmost = max(g.boundary_medials, key=lambda b: b[0])
    assert g.outward_normal(rightmost).real > 0
    for b in g.boundary_medials:
        v = g.outward_normal(b)
        assert abs(abs(v) - 1.0) < 1e-12
        total += v
    assert abs(total) < 1e-12  # closed-contour symmetry of the square
    with pytest.raises(NotBoundary):
        g.outward_normal(next(iter(g.edges)))


def test_deterministic_construction():
    a = disk(1.0, 0.25)
    b = disk(1.0, 0.25)
    assert a.faces == b.faces
    assert set(a.edges) == set(b.edges)
    assert set(a.boundary_medials) == set(b.boundary_medials)


def test_json_roundtrip():
    g = disk(1.3, 0.5, center=0.2 + 0.1j)
    g2 = DomainGraph.from_json(g.to_json())
    assert g2.faces == g.faces
    assert set(g2.edges) == set(g.edges)
    assert g2.delta == g.delta


def test_double_cover_monodromy():
    g = disk(1.5, 0.5)
    cov = DoubleCover(g)
    # loop once around the marked face: sheet flips
    loop = [(3, 1), (1, 3), (-3, 1), (-1, -3), (3, -1), (3, 1)]
    assert cov.path_sign(loop) == -1
    # loop not enclosing the mark: unchanged
    far = [(5, 1), (5, 3), (7, 3), (7, 1), (5, 1)]
    assert cov.path_sign(far) == 1
    # crossing the cut twice cancels
    twice = [(-3, 1), (-3, -1), (-3, 1)]
    assert cov.path_sign(twice) == 1


def test_double_cover_lifts():
    g = disk(1.5, 0.5)
    cov = DoubleCover(g)
    (p1, s1), (p2, s2) = cov.lifts((3, 1))
    assert p1 == p2 and s1 == -s2


def test_embed_diagram_cross():
    g = disk(1.5, 1.0)
    edges = embed_diagram(g, DIAGRAM_PRESETS["cross"])
    assert len(edges) == 4
    assert all(g.marked_face in e.faces for e in edges)
    assert embed_diagram(g, ()) == []
    with pytest.raises(DiagramTouchesBoundary):
        embed_diagram(g, ((5, 5),))


def test_embed_requires_interior_faces():
    g = disk(1.2, 1.0)  # single face: cross needs the four neighbours
    with pytest.raises(DiagramTouchesBoundary):
        embed_diagram(g, DIAGRAM_PRESETS["cross"])
