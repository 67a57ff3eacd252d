"""Discrete complex analysis kernel.

S-holomorphic fields are stored by their complex values on medial vertices
and corners (canonical sheet when on a double cover).  The linear solver
works with real unknowns on the two axis corner types, which determine an
s-holomorphic field completely; the consistency equations live on the
diagonal corner types and at corners shared between two medials.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .constants import TOL_HARMONIC, TOL_SHOL, TOL_SOLVER
from .errors import (
    EmptyTarget,
    MissingValues,
    NotHarmonic,
    ResidualTooLarge,
    SingularSystem,
)
from .lattice import (
    CORNER_TAU2,
    DomainGraph,
    DoubleCover,
    OrientedPoint,
    Point,
    corner_type,
    corner_vertex,
    principal_sqrt,
    project,
    project_tau2,
)

#: unit direction of each corner type's value line
CORNER_LINE = {
    "1": 1 + 0j,
    "i": 1j,
    "lam": cmath.exp(-0.25j * math.pi),
    "lbar": cmath.exp(0.25j * math.pi),
}


def corner_medials(c: Point) -> tuple[Point, Point]:
    """The two medial positions a corner can be adjacent to."""
    x, y = c
    if x % 2 == 1:
        return (x, y + 1), (x, y - 1)
    return (x + 1, y), (x - 1, y)


@dataclass
class Pole:
    """Discrete simple pole at a medial vertex: distinct front/rear values."""

    point: OrientedPoint
    front: complex = 0j
    rear: complex = 0j

    @property
    def residue(self) -> complex:
        return self.front - self.rear


@dataclass
class CornerDefect:
    """Source corner whose two one-sided values differ (one-point spinors)."""

    corner: Point
    north: complex = 0j
    south: complex = 0j


@dataclass
class SHolField:
    """Complex-valued field on corners and medial vertices.

    ``values`` holds medial and corner values on the canonical sheet; with
    ``monodromy`` the value at the opposite lift is the negative.
    """

    graph: DomainGraph
    values: dict[Point, complex] = field(default_factory=dict)
    monodromy: bool = False
    pole: Pole | None = None
    corner_defect: CornerDefect | None = None

    def cover(self) -> DoubleCover | None:
        return DoubleCover(self.graph) if self.monodromy else None

    def value(self, p: Point, sheet: int = 1) -> complex:
        v = self.values[p]
        return v if sheet == 1 else -v

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# x,y,re,im\n")
            for p in sorted(self.values):
                v = self.values[p]
                fh.write(f"{p[0]},{p[1]},{v.real!r},{v.imag!r}\n")


def _adjacency_sign(cover: DoubleCover | None, c: Point, m: Point) -> float:
    if cover is not None and cover.crosses_cut(c, m):
        return -1.0
    return 1.0


def check_sholomorphic(f: SHolField) -> dict:
    """Residual report: max |K(c) - P(K(m))| over corner/medial adjacencies.

    Relations at a declared pole or corner defect are excluded; the report
    carries the measured residue instead.
    """
    g = f.graph
    cover = f.cover()
    pole_m = f.pole.point.medial if f.pole else None
    defect_c = f.corner_defect.corner if f.corner_defect else None
    worst = 0.0
    worst_at = None
    for c, ms in g.corner_medial_adjacency().items():
        if corner_vertex(c) not in g.vertices:
            continue
        if c not in f.values:
            raise MissingValues(f"no value at corner {c}")
        t2 = CORNER_TAU2[corner_type(c)]
        for m in ms:
            if m == pole_m or c == defect_c:
                continue
            if m not in f.values:
                raise MissingValues(f"no value at medial {m}")
            s = _adjacency_sign(cover, c, m)
            r = abs(f.values[c] - s * project_tau2(f.values[m], t2))
            if r > worst:
                worst, worst_at = r, (c, m)
    report = {"residual": worst, "at": worst_at}
    if f.pole is not None:
        report["residue"] = f.pole.residue
    if f.corner_defect is not None:
        report["defect"] = f.corner_defect.north - f.corner_defect.south
    return report


def check_harmonic(
    values: dict[Point, complex],
    graph: DomainGraph,
    cover: DoubleCover | None = None,
    exclude: set | None = None,
) -> float:
    """Max deviation of the 4-diagonal-neighbour mean relation.

    ``values`` is a field on one corner sublattice; points whose stencil is
    not fully contained in the field are skipped, as are ``exclude`` points.
    """
    exclude = exclude or set()
    worst = 0.0
    for c, v in values.items():
        if c in exclude:
            continue
        acc = 0.0 + 0j
        ok = True
        for dx, dy in ((2, 2), (2, -2), (-2, -2), (-2, 2)):
            q = (c[0] + dx, c[1] + dy)
            if q not in values:
                ok = False
                break
            s = 1.0
            if cover is not None and cover.crosses_cut(c, q):
                s = -1.0
            acc += s * values[q]
        if ok:
            worst = max(worst, abs(acc - 4.0 * v))
    return worst


def axis_corners_of_medial(m: Point) -> tuple[Point, Point]:
    """(type-'1' corner, type-'i' corner) adjacent to medial m, graph-free."""
    cn, cs = (m[0], m[1] + 1), (m[0], m[1] - 1)
    return (cn, cs) if corner_type(cn) == "1" else (cs, cn)


def harmonic_conjugate(
    u: dict[Point, complex],
    anchor: tuple[Point, complex],
    tol: float = TOL_HARMONIC,
) -> dict[Point, complex]:
    """Harmonic conjugate on the other axis corner sublattice.

    Input is a discrete harmonic function on one axis corner type; output
    is the conjugate on the other type, matching the anchor value.  The
    conjugation relations (projection consistency at the diagonal corners
    between the two axis sublattices) read

        u(c1_E) - w(ci_E) = u(c1_W) - w(ci_W)   at vertex-south centers,
        u(c1_E) + w(ci_E) = u(c1_W) + w(ci_W)   at vertex-north centers,

    where c1/ci are the axis corners of the east/west medials of the
    center.  Path independence holds iff u is harmonic; deviations beyond
    ``tol`` raise NotHarmonic.
    """
    input_type = corner_type(next(iter(u)))
    w: dict[Point, complex] = {anchor[0]: anchor[1]}
    frontier = [anchor[0]]
    scale = max((abs(v) for v in u.values()), default=1.0)
    worst = 0.0

    def relation(center: Point):
        sgn = -1.0 if corner_type(center) == "lam" else 1.0
        m_e, m_w = (center[0] + 1, center[1]), (center[0] - 1, center[1])
        ce1, cei = axis_corners_of_medial(m_e)
        cw1, cwi = axis_corners_of_medial(m_w)
        if input_type == "1":
            return (ce1, cei, cw1, cwi, sgn)
        return (cei, ce1, cwi, cw1, sgn)

    while frontier:
        c = frontier.pop()
        x, y = c
        for center in ((x + 1, y + 1), (x - 1, y + 1), (x + 1, y - 1), (x - 1, y - 1)):
            if (center[0] + center[1]) % 2 == 0 or center[0] % 2 == 1:
                continue
            ue, we, uw, ww, sgn = relation(center)
            if ue not in u or uw not in u:
                continue
            # u(ue) + sgn*w(we) = u(uw) + sgn*w(ww)
            if we in w and ww not in w:
                w[ww] = w[we] + (u[ue] - u[uw]) / sgn
                frontier.append(ww)
            elif ww in w and we not in w:
                w[we] = w[ww] - (u[ue] - u[uw]) / sgn
                frontier.append(we)
            elif we in w and ww in w:
                worst = max(worst, abs(u[ue] + sgn * w[we] - u[uw] - sgn * w[ww]))
    if worst > max(tol, 1e-9 * scale):
        raise NotHarmonic(f"conjugate increments are path dependent: {worst}")
    return w


@dataclass
class BVPSpec:
    """Riemann(-Hilbert) boundary value problem specification."""

    graph: DomainGraph
    boundary_data: dict[Point, complex] = field(default_factory=dict)
    monodromy: bool = False
    pole: OrientedPoint | None = None
    residue_scale: complex = 1.0
    corner_source: Point | None = None
    normalization: tuple[Point, complex] | None = None


def solve_riemann_bvp(spec: BVPSpec) -> SHolField:
    """Solve the discrete Riemann boundary value problem.

    The solution is s-holomorphic away from the declared singularity,
    satisfies Im[(K - L) sqrt(v_out)] = 0 at every boundary medial vertex,
    and carries the declared monodromy.  A medial pole imposes front/rear
    values with residue ``residue_scale * (-1/sqrt_o)``; a corner source
    drops the consistency relation at that corner and pins the field by
    ``normalization`` instead.
    """
    g = spec.graph
    cover = DoubleCover(g) if spec.monodromy else None
    pole_m = spec.pole.medial if spec.pole is not None else None

    # ---- unknown layout ----------------------------------------------
    idx: dict = {}

    def add(key) -> int:
        if key not in idx:
            idx[key] = len(idx)
        return idx[key]

    interior = [m for m in g.edges if m != pole_m]
    axis_corners = {}
    for m in interior:
        c1, ci = g.medial_axis_corners(m)
        axis_corners[m] = (c1, ci)
        add(("u", c1))
        add(("w", ci))
    # corner-source split: the source corner's w (or u) differs between the
    # north and south medial parametrizations
    src = spec.corner_source
    if src is not None:
        add(("src_other",))
    for b in g.boundary_medials:
        add(("t", b))
    if pole_m is not None:
        add(("pole_re",))
        add(("pole_im",))

    n_unknowns = len(idx)

    # K(m) as affine form: dict index -> complex coefficient, plus constant
    def medial_form(m: Point, side_corner: Point | None = None):
        coeffs: dict[int, complex] = {}
        const = 0j
        if m in g.boundary_medials:
            bm = g.boundary_medials[m]
            eta = principal_sqrt(bm.normal).conjugate()
            coeffs[idx[("t", m)]] = eta
            const = spec.boundary_data.get(m, 0j)
            return coeffs, const
        if m == pole_m:
            # front on the orientation side, rear opposite
            d = (side_corner[0] - m[0], side_corner[1] - m[1])
            o = spec.pole.o
            front = d[0] * o.real + d[1] * o.imag > 0
            coeffs[idx[("pole_re",)]] = 1.0
            coeffs[idx[("pole_im",)]] = 1j
            if front:
                const = spec.residue_scale * (-1.0 / spec.pole.sqrt_o)
            return coeffs, const
        c1, ci = axis_corners[m]
        s1 = _adjacency_sign(cover, c1, m)
        si = _adjacency_sign(cover, ci, m)
        if src is not None and ci == src:
            # source corner: the south-medial parametrization uses the
            # alternate unknown
            if m[1] < ci[1]:
                coeffs[idx[("src_other",)]] = 1j * si
            else:
                coeffs[idx[("w", ci)]] = 1j * si
        else:
            coeffs[idx[("w", ci)]] = 1j * si
        if src is not None and c1 == src:
            if m[1] < c1[1]:
                coeffs[idx[("src_other",)]] = s1
            else:
                coeffs.setdefault(idx[("u", c1)], 0j)
                coeffs[idx[("u", c1)]] += s1
        else:
            coeffs.setdefault(idx[("u", c1)], 0j)
            coeffs[idx[("u", c1)]] += s1
        return coeffs, const

    # ---- equations ----------------------------------------------------
    rows = []
    rhs = []

    def add_row(parts, const):
        rows.append(parts)
        rhs.append(-const)

    has_value = set(interior) | set(g.boundary_medials)
    if pole_m is not None:
        has_value.add(pole_m)

    for c in sorted(g.corner_medial_adjacency()):
        if corner_vertex(c) not in g.vertices:
            continue
        if src is not None and c == src:
            continue
        ms = [m for m in corner_medials(c) if m in has_value]
        if len(ms) < 2:
            continue
        ctype = corner_type(c)
        # axis corners between two regular interior medials are consistent
        # by construction
        if ctype in ("1", "i") and all(
            m in axis_corners and pole_m != m and m not in g.boundary_medials
            for m in ms
        ):
            continue
        tau = CORNER_LINE[ctype]
        line = tau.conjugate()
        forms = []
        for m in ms:
            coeffs, const = medial_form(m, side_corner=c)
            s = _adjacency_sign(cover, c, m)
            forms.append((s, coeffs, const))
        (s_a, ca, ka), (s_b, cb, kb) = forms
        parts: dict[int, float] = {}
        for j, coef in ca.items():
            parts[j] = parts.get(j, 0.0) + (line * s_a * coef).real
        for j, coef in cb.items():
            parts[j] = parts.get(j, 0.0) - (line * s_b * coef).real
        const = (line * (s_a * ka - s_b * kb)).real
        add_row(parts, const)

    if spec.normalization is not None:
        p, val = spec.normalization
        key = ("u", p) if corner_type(p) == "1" else ("w", p)
        if key not in idx:
            raise SingularSystem(f"normalization point {p} carries no unknown")
        add_row({idx[key]: 1.0}, -val)

    # ---- assemble and solve --------------------------------------------
    n_rows = len(rows)
    data, ri, ci_ = [], [], []
    for r, parts in enumerate(rows):
        for j, v in parts.items():
            if v != 0.0:
                ri.append(r)
                ci_.append(j)
                data.append(v)
    A = sp.csr_matrix((data, (ri, ci_)), shape=(n_rows, n_unknowns))
    b = np.asarray(rhs)

    scale = max(1.0, float(np.max(np.abs(b))) if len(b) else 1.0)
    if n_rows == n_unknowns:
        try:
            lu = spla.splu(A.tocsc())
            x = lu.solve(b)
        except RuntimeError as exc:
            raise SingularSystem(str(exc)) from exc
    else:
        x = spla.lsqr(A, b, atol=1e-14, btol=1e-14, iter_lim=20 * n_unknowns)[0]
    resid = float(np.max(np.abs(A @ x - b))) if n_rows else 0.0
    if not np.all(np.isfinite(x)):
        raise SingularSystem("linear solve produced non-finite values")
    if resid > max(TOL_SOLVER * scale, 1e-12):
        raise ResidualTooLarge(f"linear residual {resid} (scale {scale})")

    # ---- reconstruct the field ----------------------------------------
    f = SHolField(graph=g, monodromy=spec.monodromy)
    if spec.pole is not None:
        rear = complex(x[idx[("pole_re",)]], x[idx[("pole_im",)]])
        f.pole = Pole(
            point=spec.pole,
            rear=rear,
            front=rear + spec.residue_scale * (-1.0 / spec.pole.sqrt_o),
        )

    def eval_form(m: Point, side_corner: Point | None):
        coeffs, const = medial_form(m, side_corner=side_corner)
        return sum(x[j] * v for j, v in coeffs.items()) + const

    for m in interior:
        c1, ci = axis_corners[m]
        f.values[m] = eval_form(m, side_corner=c1)
    for bpt in g.boundary_medials:
        f.values[bpt] = eval_form(bpt, None)
    if pole_m is not None:
        f.values[pole_m] = f.pole.rear
    # corner values by projection from an adjacent regular medial
    for c, ms in g.corner_medial_adjacency().items():
        if corner_vertex(c) not in g.vertices:
            continue
        t2 = CORNER_TAU2[corner_type(c)]
        for m in ms:
            if m == pole_m or m not in f.values:
                continue
            s = _adjacency_sign(cover, c, m)
            f.values[c] = s * project_tau2(f.values[m], t2)
            break
    if src is not None:
        w_n = x[idx[("w", src)]]
        w_s = x[idx[("src_other",)]]
        f.corner_defect = CornerDefect(corner=src, north=1j * w_n, south=1j * w_s)
        f.values[src] = 1j * w_n
    return f


# ---- generic rotated-lattice harmonic measure ------------------------------

def harmonic_measure_solve(
    sites: set[Point],
    boundary_values: dict[Point, float],
    step: int = 2,
) -> dict[Point, float]:
    """Dirichlet problem on a diagonal sublattice with given boundary values.

    ``sites`` are the free sites; neighbours are the four diagonal offsets
    (+-step, +-step).  Sites adjacent to neither free nor boundary sites
    see an implicit zero (absorbing at infinity truncation).
    """
    if not boundary_values:
        raise EmptyTarget("no boundary values given")
    order = sorted(sites)
    pos = {p: k for k, p in enumerate(order)}
    data, ri, ci = [], [], []
    b = np.zeros(len(order))
    for p, k in pos.items():
        data.append(4.0)
        ri.append(k)
        ci.append(k)
        for dx in (-step, step):
            for dy in (-step, step):
                q = (p[0] + dx, p[1] + dy)
                if q in pos:
                    data.append(-1.0)
                    ri.append(k)
                    ci.append(pos[q])
                elif q in boundary_values:
                    b[k] += boundary_values[q]
    A = sp.csr_matrix((data, (ri, ci)), shape=(len(order), len(order)))
    x = spla.spsolve(A.tocsc(), b)
    out = dict(boundary_values)
    out.update({p: float(x[k]) for p, k in pos.items()})
    return out
