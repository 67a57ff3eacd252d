"""Rotated square lattice discretization of a planar domain.

All lattice elements are indexed by integer coordinates in units of
delta/2, anchored so that the marked face sits at the origin.  With
``(x, y)`` in these units,

* faces have both coordinates even and ``(x + y) % 4 == 0``,
* vertices have both coordinates even and ``(x + y) % 4 == 2``,
* medial vertices (edge midpoints) have both coordinates odd,
* corners have one odd and one even coordinate.

The continuum position of ``(x, y)`` is ``a + (x + 1j*y) * delta / 2``.
Anchoring the grid at the marked point realizes the sub-mesh shift that
makes the marked point a face midpoint; the construction is deterministic.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

from .errors import (
    DiagramTouchesBoundary,
    Disconnected,
    MarkedPointOutside,
    MeshTooCoarse,
    NotBoundary,
)

Point = tuple[int, int]

SQRT2 = math.sqrt(2.0)

# Face-lattice step directions (between edge-adjacent faces), delta apart.
FACE_DIRS: tuple[Point, ...] = ((2, 2), (2, -2), (-2, -2), (-2, 2))

# Corner types and their projection lines.  A corner of type tau carries
# values on the line {t * line_dir(tau) : t real}; the projection is
# P(z) = (z + tau2 * conj(z)) / 2 with tau2 = line_dir**2.
CORNER_TAU2 = {
    "1": 1 + 0j,      # corner east of its vertex, line R
    "i": -1 + 0j,     # corner west of its vertex, line iR
    "lam": -1j,       # corner north of its vertex, line exp(-i pi/4) R
    "lbar": 1j,       # corner south of its vertex, line exp(+i pi/4) R
}


def is_face(p: Point) -> bool:
    return p[0] % 2 == 0 and p[1] % 2 == 0 and (p[0] + p[1]) % 4 == 0


def is_vertex(p: Point) -> bool:
    return p[0] % 2 == 0 and p[1] % 2 == 0 and (p[0] + p[1]) % 4 == 2


def is_medial(p: Point) -> bool:
    return p[0] % 2 == 1 and p[1] % 2 == 1


def is_corner(p: Point) -> bool:
    return (p[0] + p[1]) % 2 == 1


def corner_type(p: Point) -> str:
    """Type of the corner at p, one of '1', 'i', 'lam', 'lbar'."""
    x, y = p
    if x % 2 == 1:  # vertex east or west
        if is_vertex((x - 1, y)):
            return "1"
        return "i"
    if is_vertex((x, y - 1)):
        return "lam"
    return "lbar"


def corner_vertex(p: Point) -> Point:
    x, y = p
    if x % 2 == 1:
        return (x - 1, y) if is_vertex((x - 1, y)) else (x + 1, y)
    return (x, y - 1) if is_vertex((x, y - 1)) else (x, y + 1)


def project(v: complex, tau: complex) -> complex:
    """Project v onto the line tau*R (|tau| = 1): (v + tau^2 conj(v)) / 2."""
    return 0.5 * (v + tau * tau * v.conjugate())


def project_tau2(v: complex, tau2: complex) -> complex:
    return 0.5 * (v + tau2 * v.conjugate())


@dataclass(frozen=True)
class DomainSpec:
    """Continuous domain: a disk or an axis-aligned square, plus a marked point.

    ``shape`` is 'disk' (center, radius) or 'square' (center, half_side).
    """

    shape: str
    center: complex
    size: float  # radius for disk, half side length for square
    marked_point: complex = 0j

    def __post_init__(self):
        if self.shape not in ("disk", "square"):
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.size <= 0:
            raise ValueError("size must be positive")

    def contains(self, z: complex) -> bool:
        w = z - self.center
        if self.shape == "disk":
            return abs(w) < self.size
        return max(abs(w.real), abs(w.imag)) < self.size


@dataclass
class Edge:
    """One lattice edge of the face complex."""

    medial: Point           # midpoint, odd/odd coordinates
    vertices: tuple[Point, Point]
    faces: tuple[Point, Point]   # the two faces it separates
    interior: bool               # both faces interior


@dataclass
class BoundaryMedial:
    """Midpoint of an edge leaving the complex, carrying the outward normal."""

    medial: Point
    v_in: Point
    v_out: Point

    @property
    def normal(self) -> complex:
        d = complex(self.v_out[0] - self.v_in[0], self.v_out[1] - self.v_in[1])
        return d / abs(d)


@dataclass
class DomainGraph:
    spec: DomainSpec
    delta: float
    faces: set[Point] = field(default_factory=set)
    boundary_faces: set[Point] = field(default_factory=set)
    edges: dict[Point, Edge] = field(default_factory=dict)   # keyed by medial
    vertices: set[Point] = field(default_factory=set)
    boundary_medials: dict[Point, BoundaryMedial] = field(default_factory=dict)
    marked_face: Point = (0, 0)

    # ---- continuum mapping -------------------------------------------------

    def position(self, p: Point) -> complex:
        return self.spec.marked_point + complex(p[0], p[1]) * (self.delta / 2.0)

    # ---- derived structure -------------------------------------------------

    @property
    def interior_edges(self) -> list[Edge]:
        return [e for e in self.edges.values() if e.interior]

    def medials(self) -> list[Point]:
        return list(self.edges.keys())

    def corner_medial_adjacency(self) -> dict[Point, list[Point]]:
        """Map corner -> sorted list of adjacent medials (interior and boundary)."""
        adj: dict[Point, list[Point]] = {}
        for m in list(self.edges.keys()) + list(self.boundary_medials.keys()):
            x, y = m
            for c in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                adj.setdefault(c, []).append(m)
        for c in adj:
            adj[c].sort()
        return adj

    def medial_axis_corners(self, m: Point) -> tuple[Point, Point]:
        """The type-'1' and type-'i' corners adjacent to medial m, in that order."""
        x, y = m
        cn, cs = (x, y + 1), (x, y - 1)
        if corner_type(cn) == "1":
            return cn, cs
        return cs, cn

    def outward_normal(self, b: Point) -> complex:
        if b not in self.boundary_medials:
            raise NotBoundary(f"{b} is not a boundary medial vertex")
        return self.boundary_medials[b].normal

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces)

    # ---- serialization -----------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "delta": self.delta,
            "shape": self.spec.shape,
            "center": [self.spec.center.real, self.spec.center.imag],
            "size": self.spec.size,
            "marked_point": [self.spec.marked_point.real, self.spec.marked_point.imag],
            "marked_face": list(self.marked_face),
            "faces": sorted(list(f) for f in self.faces),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "DomainGraph":
        doc = json.loads(text)
        spec = DomainSpec(
            shape=doc["shape"],
            center=complex(*doc["center"]),
            size=doc["size"],
            marked_point=complex(*doc["marked_point"]),
        )
        g = cls(spec=spec, delta=doc["delta"])
        g.faces = {tuple(f) for f in doc["faces"]}
        _build_complex(g)
        return g


def _build_complex(g: DomainGraph) -> None:
    """Fill edges, vertices, boundary sets from g.faces."""
    g.edges = {}
    g.boundary_faces = set()
    for f in g.faces:
        fx, fy = f
        for dx, dy in FACE_DIRS:
            nb = (fx + dx, fy + dy)
            m = (fx + dx // 2, fy + dy // 2)
            if m in g.edges:
                continue
            # vertices flank the midpoint perpendicular to the face step;
            # canonical order keeps edge orientations translation covariant
            perp = (dy // 2, -dx // 2)
            v1 = (m[0] + perp[0], m[1] + perp[1])
            v2 = (m[0] - perp[0], m[1] - perp[1])
            v1, v2 = sorted((v1, v2))
            g.edges[m] = Edge(
                medial=m,
                vertices=(v1, v2),
                faces=(f, nb),
                interior=nb in g.faces,
            )
            if nb not in g.faces:
                g.boundary_faces.add(nb)
    g.vertices = set()
    for e in g.edges.values():
        g.vertices.update(e.vertices)
    # boundary medials: lattice edges from a complex vertex that are not in
    # the complex and whose far endpoint is outside it
    g.boundary_medials = {}
    for v in g.vertices:
        for dx, dy in FACE_DIRS:
            m = (v[0] + dx // 2, v[1] + dy // 2)
            if m in g.edges or m in g.boundary_medials:
                continue
            v_out = (v[0] + dx, v[1] + dy)
            if v_out in g.vertices:
                continue  # a dangling edge between two complex vertices; unused
            g.boundary_medials[m] = BoundaryMedial(medial=m, v_in=v, v_out=v_out)


def _faces_connected(faces: set[Point]) -> bool:
    if not faces:
        return True
    seen = set()
    stack = [next(iter(faces))]
    while stack:
        f = stack.pop()
        if f in seen:
            continue
        seen.add(f)
        for dx, dy in FACE_DIRS:
            nb = (f[0] + dx, f[1] + dy)
            if nb in faces and nb not in seen:
                stack.append(nb)
    return len(seen) == len(faces)


def discretize(spec: DomainSpec, delta: float) -> DomainGraph:
    """Discretize the domain at mesh delta (nearest vertices sqrt(2)*delta apart).

    Faces are the lattice faces whose midpoint lies strictly inside the
    shape; boundary elements are the incident-but-excluded ones.  Raises
    MarkedPointOutside / MeshTooCoarse on bad input.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not spec.contains(spec.marked_point):
        raise MarkedPointOutside(f"marked point {spec.marked_point} outside shape")

    g = DomainGraph(spec=spec, delta=delta)
    half = delta / 2.0
    # bounding box of the shape in half-unit coordinates around the marked point
    rad = spec.size * (1.0 if spec.shape == "disk" else SQRT2)
    reach = int(math.ceil((abs(spec.center - spec.marked_point) + rad) / half)) + 2
    reach += reach % 2
    full_face_exists = False
    for x in range(-reach, reach + 1, 2):
        for y in range(-reach, reach + 1, 2):
            if (x + y) % 4 != 0:
                continue
            if spec.contains(g.position((x, y))):
                g.faces.add((x, y))
                if not full_face_exists:
                    corners = ((x + 2, y), (x - 2, y), (x, y + 2), (x, y - 2))
                    if all(spec.contains(g.position(q)) for q in corners):
                        full_face_exists = True
    if not full_face_exists:
        raise MeshTooCoarse(
            f"no face of diagonal {2 * delta} fits inside the shape"
        )
    if (0, 0) not in g.faces:
        raise MarkedPointOutside("marked face not strictly inside the shape")
    if not _faces_connected(g.faces):
        raise Disconnected("face set is not connected; refine delta")
    _build_complex(g)
    return g


class DoubleCover:
    """Double cover of the complex ramified at the marked face.

    The branch cut runs along the leftward horizontal ray from the marked
    face, displaced infinitesimally below it, so points on the ray itself
    attach to the upper side.  Sheets are labelled +1/-1; the canonical
    (+1) lift of a base point is the one reached from the reference corner
    right of the marked face without crossing the cut.
    """

    def __init__(self, graph: DomainGraph):
        self.graph = graph
        self.a = graph.marked_face

    def crosses_cut(self, p: Point, q: Point) -> bool:
        """True if the straight segment p -> q crosses the branch cut."""
        ax, ay = self.a
        yp, yq = p[1] - ay, q[1] - ay
        if min(yp, yq) > -1 or max(yp, yq) < 0:
            return False
        xp, xq = p[0] - ax, q[0] - ax
        num = xp * yq - xq * yp          # x-coordinate at the axis, times den
        den = yq - yp
        if num == 0:
            return False                 # crossing exactly at the ramification
        return (num < 0) == (den > 0)

    def path_sign(self, points: list[Point]) -> int:
        """Sheet factor (+1/-1) accumulated along a piecewise-straight path."""
        s = 1
        for p, q in zip(points, points[1:]):
            if self.crosses_cut(p, q):
                s = -s
        return s

    def lifts(self, p: Point) -> tuple[tuple[Point, int], tuple[Point, int]]:
        return ((p, 1), (p, -1))


# ---- base diagrams ---------------------------------------------------------

#: Named base diagrams.  Each is a tuple of medial offsets (odd/odd integer
#: pairs in delta/2 units relative to the marked face); the edge with
#: midpoint offset m separates the two faces at m +- perpendicular step.
DIAGRAM_PRESETS: dict[str, tuple[Point, ...]] = {
    "edge": ((1, 1),),
    "domino": ((1, 1), (-1, -1)),
    "cross": ((1, 1), (-1, 1), (-1, -1), (1, -1)),
    "corner3": ((1, 1), (-1, 1), (-1, -1)),
    "ell": ((1, 1), (-1, 1)),
}


def diagram_faces(offsets: tuple[Point, ...]) -> set[Point]:
    """Faces incident to the diagram's edges (offsets relative to the center)."""
    out: set[Point] = set()
    for m in offsets:
        if not is_medial(m):
            raise ValueError(f"diagram offset {m} is not an edge midpoint")
        for dx, dy in ((1, 1), (-1, -1)):
            f = (m[0] + dx, m[1] + dy)
            if is_face(f):
                out.add(f)
            f = (m[0] + dx, m[1] - dy)
            if is_face(f):
                out.add(f)
    return out


def embed_diagram(graph: DomainGraph, offsets: tuple[Point, ...]) -> list[Edge]:
    """Embed a base diagram centered at the marked face.

    Returns the concrete edges; raises DiagramTouchesBoundary if any face
    of the diagram is not an interior face of the graph.
    """
    for f in diagram_faces(offsets):
        if f not in graph.faces:
            raise DiagramTouchesBoundary(f"diagram face {f} outside the domain")
    out = []
    for m in offsets:
        if m not in graph.edges or not graph.edges[m].interior:
            raise DiagramTouchesBoundary(f"diagram edge at {m} not interior")
        out.append(graph.edges[m])
    return out


# ---- orientations ----------------------------------------------------------

def edge_direction(e: Edge) -> complex:
    """Unit vector along the edge (one of the two orientations)."""
    d = complex(e.vertices[1][0] - e.vertices[0][0], e.vertices[1][1] - e.vertices[0][1])
    return d / abs(d)


def principal_sqrt(o: complex) -> complex:
    """Square root with branch cut on the negative real axis."""
    return cmath.exp(0.5j * cmath.phase(o))


@dataclass(frozen=True)
class OrientedPoint:
    """A medial vertex with a double orientation (a recorded square root).

    ``sqrt_o`` squares to a unit vector parallel to the edge; rotating it by
    i flips the sign of observables, per the orientation-rotation rule.
    """

    medial: Point
    sqrt_o: complex

    @property
    def o(self) -> complex:
        return self.sqrt_o * self.sqrt_o

    @property
    def half_vertex(self) -> Point:
        """The edge endpoint on the orientation side of the midpoint."""
        o = self.o
        return (self.medial[0] + round(o.real * SQRT2), self.medial[1] + round(o.imag * SQRT2))

    def rotated(self) -> "OrientedPoint":
        return OrientedPoint(self.medial, 1j * self.sqrt_o)


def orient(e: Edge, sign: int = 1, branch: int = 1) -> OrientedPoint:
    o = edge_direction(e) * sign
    s = principal_sqrt(o)
    return OrientedPoint(e.medial, s * branch)
