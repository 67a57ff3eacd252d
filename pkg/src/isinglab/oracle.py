"""Independent ground truth on small domains.

Everything here is exponential-cost enumeration: exact spin sums, the
low-temperature contour expansion, and direct summation of the fermionic
observables.  The production solvers are validated against these.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .constants import ALPHA, BETA_C, FUSION_C
from .errors import TooManyEdges, TooManyFaces, ZeroDenominator
from .lattice import (DomainGraph, DoubleCover, Edge, OrientedPoint, Point,
                      edge_direction as edge_direction_of, principal_sqrt)

_CHUNK = 1 << 16


class ExactMeasure:
    """Exact Ising measure with plus boundary conditions, by enumeration.

    Spins live on interior faces; every boundary face is fixed to +1.  The
    energy couples the two faces across every edge of the complex.
    """

    def __init__(self, graph: DomainGraph, cap: int = 24):
        self.graph = graph
        self.faces = sorted(graph.faces)
        n = len(self.faces)
        if n > cap:
            raise TooManyFaces(f"{n} interior faces exceeds enumeration cap {cap}")
        self.n = n
        self._index = {f: i for i, f in enumerate(self.faces)}
        # edge -> (i, j) face indices, -1 for a fixed boundary face
        self.edge_pairs = []
        for e in graph.edges.values():
            i = self._index.get(e.faces[0], -1)
            j = self._index.get(e.faces[1], -1)
            self.edge_pairs.append((i, j))
        self._logw_shift = None
        self._Z = None

    # ---- enumeration over configurations ------------------------------

    def _spin_chunks(self):
        """Yield (spins, weights) with spins of shape (chunk, n) in {-1, +1}."""
        n = self.n
        total = 1 << n
        bits = np.arange(n, dtype=np.uint64)
        for start in range(0, total, _CHUNK):
            idx = np.arange(start, min(start + _CHUNK, total), dtype=np.uint64)
            spins = ((idx[:, None] >> bits[None, :]) & 1).astype(np.int8)
            spins = 2 * spins - 1
            energy = np.zeros(len(idx))
            for i, j in self.edge_pairs:
                si = spins[:, i] if i >= 0 else 1
                sj = spins[:, j] if j >= 0 else 1
                energy -= si * sj
            yield spins, np.exp(-BETA_C * energy)

    @property
    def Z(self) -> float:
        if self._Z is None:
            self._Z = sum(w.sum() for _, w in self._spin_chunks())
        return self._Z

    def expectation(self, fn) -> float:
        """E[fn] where fn maps a (chunk, n) spin array to a (chunk,) array."""
        acc = 0.0
        for spins, w in self._spin_chunks():
            acc += float(np.dot(np.asarray(fn(spins), dtype=float), w))
        return acc / self.Z

    def spin_product(self, faces) -> float:
        idx = [self._index[f] for f in faces]
        return self.expectation(lambda s: np.prod(s[:, idx], axis=1))

    def energy_product(self, edges, sigma_face: Point | None = None) -> float:
        """E[prod_e eps(e)] with eps(e) = MU - s_i s_j; optionally times s_a."""
        from .constants import MU

        pairs = []
        for e in edges:
            i = self._index.get(e.faces[0], -1)
            j = self._index.get(e.faces[1], -1)
            pairs.append((i, j))
        ia = self._index[sigma_face] if sigma_face is not None else None

        def fn(s):
            out = np.ones(len(s))
            for i, j in pairs:
                si = s[:, i] if i >= 0 else 1
                sj = s[:, j] if j >= 0 else 1
                out *= MU - si * sj
            if ia is not None:
                out *= s[:, ia]
            return out

        return self.expectation(fn)


def exact_measure(graph: DomainGraph, cap: int = 24) -> ExactMeasure:
    return ExactMeasure(graph, cap=cap)


def exact_pattern_prob(
    graph: DomainGraph,
    offsets,
    separating,
    sigma_a: int | None = None,
    cap: int = 24,
) -> float:
    """Probability that the embedded diagram shows exactly the given pattern.

    ``offsets`` are the diagram's edge midpoints (relative to the marked
    face), ``separating`` the subset that must separate opposite spins;
    ``sigma_a`` additionally fixes the spin at the marked face.
    """
    from .lattice import embed_diagram

    edges = embed_diagram(graph, tuple(offsets))
    meas = ExactMeasure(graph, cap=cap)
    want = [m in set(separating) for m in offsets]
    pairs = []
    for e in edges:
        pairs.append((meas._index[e.faces[0]], meas._index[e.faces[1]]))
    ia = meas._index[graph.marked_face]

    def fn(s):
        ok = np.ones(len(s), dtype=bool)
        for (i, j), sep in zip(pairs, want):
            ok &= (s[:, i] != s[:, j]) == sep
        if sigma_a is not None:
            ok &= s[:, ia] == sigma_a
        return ok.astype(float)

    return meas.expectation(fn)


# ---- low-temperature contours ------------------------------------------


@dataclass(frozen=True)
class ContourConfiguration:
    edges: frozenset          # medials of the full edges present
    half_edges: tuple         # ((medial, vertex), ...) one per endpoint

    @property
    def n_half(self) -> int:
        return len(self.half_edges)


def _cycle_space_basis(graph: DomainGraph, excluded: frozenset):
    """GF(2) cycle basis of (V, E \\ excluded) as lists of medials, plus a
    spanning forest for T-join construction."""
    medials = [m for m in graph.edges if m not in excluded]
    adj: dict[Point, list[tuple[Point, Point]]] = {}
    for m in medials:
        v1, v2 = graph.edges[m].vertices
        adj.setdefault(v1, []).append((m, v2))
        adj.setdefault(v2, []).append((m, v1))
    parent: dict[Point, tuple[Point, Point] | None] = {}
    basis = []
    tree_edges = set()
    for root in sorted(adj):
        if root in parent:
            continue
        parent[root] = None
        stack = [root]
        while stack:
            v = stack.pop()
            for m, w in adj[v]:
                if w not in parent:
                    parent[w] = (m, v)
                    tree_edges.add(m)
                    stack.append(w)
    def path_to_root(v):
        out = []
        while parent.get(v) is not None:
            m, up = parent[v]
            out.append(m)
            v = up
        return out, v
    for m in medials:
        if m in tree_edges:
            continue
        v1, v2 = graph.edges[m].vertices
        p1, r1 = path_to_root(v1)
        p2, r2 = path_to_root(v2)
        if r1 != r2:
            continue
        cyc = {m}
        for mm in p1 + p2:
            cyc ^= {mm}
        basis.append(frozenset(cyc))
    return basis, parent


def _t_join(graph: DomainGraph, parent, vertices_odd):
    """Any edge set with odd degree exactly at vertices_odd, via forest paths."""
    join: set[Point] = set()
    for v in vertices_odd:
        if v not in parent:
            return None
        while parent.get(v) is not None:
            m, up = parent[v]
            join ^= {m}
            v = up
    # all odd vertices must cancel at a common root; verify parity
    deg: dict[Point, int] = {}
    for m in join:
        for w in graph.edges[m].vertices:
            deg[w] = deg.get(w, 0) + 1
    odd = {v for v, d in deg.items() if d % 2 == 1}
    if odd != set(vertices_odd):
        return None
    return frozenset(join)


def enumerate_contours(graph: DomainGraph, endpoints=(), cap: int = 30, fixed_halves=None):
    """Yield every contour configuration with the given endpoint medials.

    For ``endpoints = ()`` these are the loop configurations of the
    partition function; otherwise each endpoint carries exactly one
    half-edge and all other vertices have even degree.  ``fixed_halves``
    optionally prescribes the half-edge vertex at each endpoint.
    """
    if len(graph.edges) > cap:
        raise TooManyEdges(f"{len(graph.edges)} edges exceeds cap {cap}")
    endpoints = tuple(endpoints)
    excluded = frozenset(m for m in endpoints if m in graph.edges)
    for m in endpoints:
        if m not in graph.edges and m not in graph.boundary_medials:
            raise ValueError(f"endpoint {m} is not a medial vertex of the graph")
    basis, parent = _cycle_space_basis(graph, excluded)
    if fixed_halves is not None:
        half_options = [(v,) for v in fixed_halves]
    else:
        half_options = [
            graph.edges[m].vertices
            if m in graph.edges
            else (graph.boundary_medials[m].v_in,)
            for m in endpoints
        ]
    for halves in itertools.product(*half_options) if endpoints else [()]:
        odd: set[Point] = set()
        for v in halves:
            odd ^= {v}
        base = _t_join(graph, parent, odd) if odd else frozenset()
        if base is None:
            continue
        half_edges = tuple(zip(endpoints, halves))
        for k in range(1 << len(basis)):
            s = set(base)
            kk = k
            for b in basis:
                if kk & 1:
                    s ^= b
                kk >>= 1
            yield ContourConfiguration(edges=frozenset(s), half_edges=half_edges)


def partition_function(graph: DomainGraph, monodromy: bool = False, cap: int = 30) -> float:
    """Z = sum over loop configurations of alpha^{#edges}, optionally with
    the (-1)^{#loops around a} factor (giving E[s_a] * Z)."""
    cover = DoubleCover(graph) if monodromy else None
    z = 0.0
    for cfg in enumerate_contours(graph, (), cap=cap):
        w = ALPHA ** len(cfg.edges)
        if cover is not None:
            w *= _loop_sign(graph, cover, cfg.edges)
        z += w
    return z


def _loop_sign(graph: DomainGraph, cover: DoubleCover, edge_set) -> int:
    """(-1)^{# loops of the even subgraph that wind around the marked face}.

    Equals the spin at the marked face of the corresponding configuration,
    i.e. the parity of cut-crossing edges.
    """
    s = 1
    for m in edge_set:
        v1, v2 = graph.edges[m].vertices
        if cover.crosses_cut(v1, v2):
            s = -s
    return s


# ---- walk decomposition and weights --------------------------------------

_DIRS = ((1, 1), (-1, 1), (-1, -1), (1, -1))


def _vertex_items(graph: DomainGraph, cfg: ContourConfiguration):
    """items[v] = list of (kind, data): ('edge', medial) or ('half', idx)."""
    items: dict[Point, list] = {}
    for m in cfg.edges:
        for v in graph.edges[m].vertices:
            items.setdefault(v, []).append(("edge", m))
    for idx, (m, v) in enumerate(cfg.half_edges):
        items.setdefault(v, []).append(("half", idx))
    return items


def _item_direction(cfg, v: Point, item) -> Point:
    if item[0] == "edge":
        m = item[1]
    else:
        m = cfg.half_edges[item[1]][0]
    return (m[0] - v[0], m[1] - v[1])


def _noncrossing_matchings(cfg, v: Point, items):
    """Vertex matchings that never route a strand straight through.

    At a 4-valent vertex the two admissible matchings pair each strand with
    an angularly adjacent one; the straight-through (crossing) matching is
    excluded, which is what makes the walk weights well-defined.
    """
    if len(items) == 2:
        return [((0, 1),)]
    dirs = [_item_direction(cfg, v, it) for it in items]

    def antipodal(i, j):
        return dirs[i][0] == -dirs[j][0] and dirs[i][1] == -dirs[j][1]

    out = []
    for match in (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))):
        if any(antipodal(i, j) for i, j in match):
            continue
        out.append(match)
    return out


def _walk_polyline(graph: DomainGraph, cfg, pairing, start_idx):
    """Follow a walk from half-edge start_idx; returns (polyline, end_idx).

    The polyline alternates medials and vertices and starts/ends at the
    endpoint medials.
    """
    m0, v0 = cfg.half_edges[start_idx]
    poly = [m0, v0]
    prev_item = ("half", start_idx)
    v = v0
    while True:
        nxt = pairing[v][prev_item]
        if nxt[0] == "half":
            poly.append(cfg.half_edges[nxt[1]][0])
            return poly, nxt[1]
        m = nxt[1]
        v1, v2 = graph.edges[m].vertices
        w = v2 if v1 == v else v1
        poly.extend([m, w])
        prev_item = ("edge", m)
        v = w


def _turn_angle(d1: complex, d2: complex) -> float:
    a = cmath.phase(d2 / d1)
    return a


def _winding(poly) -> float:
    """Total signed turning along the polyline, in radians."""
    dirs = []
    for p, q in zip(poly, poly[1:]):
        d = complex(q[0] - p[0], q[1] - p[1])
        dirs.append(d / abs(d))
    w = 0.0
    for d1, d2 in zip(dirs, dirs[1:]):
        w += _turn_angle(d1, d2)
    return w


def _crossing_parity(pairs) -> int:
    """Parity of crossings of the chord diagram of index pairs."""
    c = 0
    for (i, j), (k, l) in itertools.combinations(pairs, 2):
        a, b = min(i, j), max(i, j)
        p, q = min(k, l), max(k, l)
        if a < p < b < q or p < a < q < b:
            c ^= 1
    return c


def _walk_phase(points, poly, start_idx, end_idx, cover=None):
    """phi (or psi) for one walk traversed from start_idx to end_idx.

    Configurations are built so that the walk leaves its start point along
    the start orientation and enters its end point against the end
    orientation; the winding is the plain turning of the polyline.
    """
    op_s: OrientedPoint = points[start_idx]
    op_e: OrientedPoint = points[end_idx]
    w = _winding(poly)
    phase = 1j * (op_e.sqrt_o / op_s.sqrt_o) * cmath.exp(-0.5j * w)
    if cover is not None:
        phase *= cover.path_sign(poly)
    return phase


def _admissible_decompositions(graph, cfg, all_pairings: bool):
    """Yield (walks, loop_edges) where walks = list of (poly, i, j)."""
    items = _vertex_items(graph, cfg)
    branch_vs = [v for v, it in sorted(items.items()) if len(it) == 4]
    choice_sets = []
    for v in branch_vs:
        opts = _noncrossing_matchings(cfg, v, items[v])
        choice_sets.append(opts if all_pairings else opts[:1])
    for combo in itertools.product(*choice_sets):
        pairing: dict[Point, dict] = {}
        ok = True
        for v, it in items.items():
            if len(it) == 2:
                pairing[v] = {it[0]: it[1], it[1]: it[0]}
        for v, match in zip(branch_vs, combo):
            it = items[v]
            pairing[v] = {}
            for i, j in match:
                pairing[v][it[i]] = it[j]
                pairing[v][it[j]] = it[i]
        walks = []
        used = set()
        for idx in range(len(cfg.half_edges)):
            if idx in used:
                continue
            poly, end = _walk_polyline(graph, cfg, pairing, idx)
            if end == idx:
                ok = False
                break
            used.add(idx)
            used.add(end)
            walks.append((poly, idx, end))
        if not ok:
            continue
        walk_edges = set()
        for poly, _, _ in walks:
            walk_edges.update(p for p in poly if p in cfg.edges)
        loops = cfg.edges - walk_edges
        yield walks, loops


def _config_weight(graph, cover, points, cfg, walks, loops):
    """alpha^{#gamma} (-1)^{#L} (-1)^{c} prod psi for one decomposition."""
    # half-edges count one half each toward the contour length
    w = ALPHA ** (len(cfg.edges) + 0.5 * len(cfg.half_edges))
    sign = 1.0
    if cover is not None:
        sign *= _loop_sign(graph, cover, loops)
    pairs = [(i, j) for _, i, j in walks]
    if _crossing_parity(pairs):
        sign = -sign
    phase = complex(sign)
    for poly, i, j in walks:
        phase *= _walk_phase(points, poly, i, j, cover=cover)
    return w * phase


def contour_observable(
    graph: DomainGraph,
    points: list[OrientedPoint],
    restrictions: dict | None = None,
    monodromy: bool = False,
    cap: int = 30,
    check_pairings: bool = False,
) -> complex:
    """Fermionic observable F by direct contour summation.

    ``points`` are the 2n doubly oriented medial vertices.  ``restrictions``
    maps an edge midpoint to True (edge present: spins across it differ) or
    False (edge absent).  With ``monodromy`` the spinor version on the
    double cover is computed, normalized by Z[s_a].
    """
    restrictions = restrictions or {}
    cover = DoubleCover(graph) if monodromy else None
    endpoints = tuple(p.medial for p in points)
    halves = tuple(p.half_vertex for p in points)
    total = 0.0 + 0.0j
    for cfg in enumerate_contours(graph, endpoints, cap=cap, fixed_halves=halves):
        skip = False
        for m, present in restrictions.items():
            if (m in cfg.edges) != present:
                skip = True
                break
        if skip:
            continue
        vals = []
        for walks, loops in _admissible_decompositions(graph, cfg, check_pairings):
            vals.append(_config_weight(graph, cover, points, cfg, walks, loops))
            if not check_pairings:
                break
        if check_pairings and len(vals) > 1:
            if max(abs(v - vals[0]) for v in vals) > 1e-9 * max(1.0, abs(vals[0])):
                raise AssertionError(
                    f"pairing ambiguity: {vals} for configuration {cfg}"
                )
        if vals:
            total += vals[0]
    z = partition_function(graph, monodromy=monodromy, cap=cap)
    if abs(z) < 1e-300:
        raise ZeroDenominator("partition function vanished")
    return total / z


def complex_observable(
    graph: DomainGraph,
    points: list[OrientedPoint],
    z: Point,
    restrictions: dict | None = None,
    monodromy: bool = False,
    cap: int = 30,
) -> complex:
    """Complex fermionic observable H(points..., z), z an unoriented medial.

    Combines the two orientation classes at z so that the result does not
    depend on any branch choice there.  Works for boundary medials too,
    where only the inner half-edge exists.
    """
    if z in graph.edges:
        e = graph.edges[z]
        o = edge_direction_of(e)
    else:
        bm = graph.boundary_medials[z]
        d = complex(bm.v_in[0] - z[0], bm.v_in[1] - z[1])
        o = d / abs(d)
    s = principal_sqrt(o)
    p_a = OrientedPoint(z, s)
    p_b = OrientedPoint(z, 1j * s)
    f_a = contour_observable(graph, points + [p_a], restrictions, monodromy, cap)
    f_b = 0.0
    if z in graph.edges:
        f_b = contour_observable(graph, points + [p_b], restrictions, monodromy, cap)
    return (1j * f_a + f_b) / s


def restricted_partition_function(
    graph: DomainGraph, restrictions: dict, monodromy: bool = False, cap: int = 30
) -> float:
    """Z^{restricted}: loop configurations filtered by edge presence."""
    cover = DoubleCover(graph) if monodromy else None
    z = 0.0
    for cfg in enumerate_contours(graph, (), cap=cap):
        ok = all((m in cfg.edges) == present for m, present in restrictions.items())
        if not ok:
            continue
        w = ALPHA ** len(cfg.edges)
        if cover is not None:
            w *= _loop_sign(graph, cover, cfg.edges)
        z += w
    return z


def fused_energy_product_fusion_path(
    graph: DomainGraph,
    edges: list[Edge],
    monodromy: bool = False,
    fusion_constants: list[float] | None = None,
    cap: int = 30,
) -> float:
    """E[prod eps(e_i)] (or the s_a-weighted ratio) via the inductive fusion
    of restricted partition functions.

    Expands F^{[e_1..e_m]} = sum over agree/disagree states with the fusion
    constant subtraction, then multiplies by (-2)^m.
    """
    if fusion_constants is None:
        fusion_constants = [FUSION_C] * len(edges)
    z0 = partition_function(graph, monodromy=monodromy, cap=cap)
    mediums = [e.medial for e in edges]

    def fused(prefix: dict, k: int) -> float:
        if k == len(mediums):
            return restricted_partition_function(
                graph, prefix, monodromy=monodromy, cap=cap
            ) / z0
        with_absent = dict(prefix)
        with_absent[mediums[k]] = False
        return fused(with_absent, k + 1) - fusion_constants[k] * fused(prefix, k + 1)

    return (-2.0) ** len(mediums) * fused({}, 0)


# ---- fixture helpers -------------------------------------------------------

def save_golden(path, values: dict) -> None:
    doc = {"version": 1, "values": values}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def load_golden(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    return doc["values"]
