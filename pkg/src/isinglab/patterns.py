"""Reconstruction of spin-pattern probabilities from energy products.

A base diagram is a set of edges near the marked face; a spin-symmetric
pattern fixes which of them separate opposite spins, and a spin-sensitive
pattern additionally fixes the spin at the marked face.  Probabilities are
linear in the energy products over subsets of a spanning edge set, through
an explicitly invertible pair of matrices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .constants import BETA_C, MU
from .errors import (
    BoundaryTooClose,
    DegenerateMagnetization,
    Disconnected,
    TooLarge,
)
from .lattice import (
    DIAGRAM_PRESETS,
    DomainGraph,
    Point,
    diagram_faces,
    embed_diagram,
    is_face,
)


@dataclass(frozen=True)
class BaseDiagram:
    """Edge set in the unit lattice near the marked face.

    ``offsets`` are edge midpoints relative to the marked face (odd/odd
    integer pairs in half-mesh units); the marked face sits at the origin.
    """

    offsets: tuple[Point, ...]

    @classmethod
    def preset(cls, name: str) -> "BaseDiagram":
        return cls(offsets=DIAGRAM_PRESETS[name])

    @property
    def faces(self) -> set[Point]:
        return diagram_faces(self.offsets)

    def edge_between(self, f: Point, g: Point) -> Point | None:
        dx, dy = g[0] - f[0], g[1] - f[1]
        if abs(dx) == 2 and abs(dy) == 2:
            return (f[0] + dx // 2, f[1] + dy // 2)
        return None

    def face_adjacency(self, edges: set[Point] | None = None):
        """faces adjacent through the given edge set (default: all offsets)."""
        edges = set(self.offsets) if edges is None else edges
        adj: dict[Point, list[tuple[Point, Point]]] = {f: [] for f in self.faces}
        for f, g in itertools.combinations(self.faces, 2):
            m = self.edge_between(f, g)
            if m is not None and m in edges:
                adj[f].append((g, m))
                adj[g].append((f, m))
        return adj

    def is_connected(self) -> bool:
        adj = self.face_adjacency()
        faces = self.faces
        seen, stack = set(), [next(iter(faces))]
        while stack:
            f = stack.pop()
            if f in seen:
                continue
            seen.add(f)
            stack.extend(g for g, _ in adj[f])
        return len(seen) == len(faces)


@dataclass
class SpanningEdgeSet:
    """Spanning set of separating edges: |edges| = |faces| - 1, with spin
    reconstruction paths from the root face."""

    diagram: BaseDiagram
    edges: tuple[Point, ...]          # fixed order; pattern bit i <-> edges[i]
    root: Point
    parent: dict                      # face -> (parent face, crossing edge index)

    @property
    def n(self) -> int:
        return len(self.edges)

    def spins_from_bits(self, bits: int) -> dict[Point, int]:
        """The (root = +1 representative) spin pattern with B'_i = -1 iff
        bit i of ``bits`` is set."""
        spins = {self.root: 1}
        order = sorted(self.parent, key=lambda f: len(self._chain(f)))
        for f in order:
            p, k = self.parent[f]
            sep = (bits >> k) & 1
            spins[f] = -spins[p] if sep else spins[p]
        return spins

    def _chain(self, f):
        out = []
        while f != self.root:
            p, k = self.parent[f]
            out.append(k)
            f = p
        return out

    def bits_from_spins(self, spins: dict[Point, int]) -> int:
        bits = 0
        for k, m in enumerate(self.edges):
            f, g = _edge_faces(m)
            if spins[f] != spins[g]:
                bits |= 1 << k
        return bits


def _edge_faces(m: Point) -> tuple[Point, Point]:
    for dx, dy in ((1, 1), (1, -1)):
        f, g = (m[0] + dx, m[1] + dy), (m[0] - dx, m[1] - dy)
        if is_face(f):
            return f, g
    raise ValueError(f"{m} is not an edge midpoint")


def spanning_set(diagram: BaseDiagram) -> SpanningEdgeSet:
    """Breadth-first spanning set over the diagram's face complex.

    Starts at the marked face (or the smallest face if the marked face is
    not in the diagram); every first-discovery crossing edge joins the
    spanning set.  Any edge separating two diagram faces is eligible.
    """
    faces = diagram.faces
    if not faces:
        raise Disconnected("empty diagram")
    all_edges = {
        diagram.edge_between(f, g)
        for f, g in itertools.combinations(faces, 2)
        if diagram.edge_between(f, g) is not None
    }
    adj = diagram.face_adjacency(all_edges)
    root = (0, 0) if (0, 0) in faces else min(faces)
    span: list[Point] = []
    parent: dict = {}
    seen = {root}
    queue = [root]
    while queue:
        f = queue.pop(0)
        for g, m in sorted(adj[f], key=lambda t: t[1]):
            if g in seen:
                continue
            seen.add(g)
            parent[g] = (f, len(span))
            span.append(m)
            queue.append(g)
    if len(seen) != len(faces):
        raise Disconnected("diagram face set is not connected")
    return SpanningEdgeSet(diagram=diagram, edges=tuple(span), root=root, parent=parent)


def pattern_bits(diagram: BaseDiagram, span: SpanningEdgeSet, separating) -> int:
    """Index of the spin-symmetric pattern given the separating subset of
    the diagram's edges."""
    if not diagram.is_connected():
        raise Disconnected("pattern reconstruction needs a connected diagram")
    sep = set(separating)
    spins = {span.root: 1}
    adj = diagram.face_adjacency()
    stack = [span.root]
    seen = {span.root}
    while stack:
        f = stack.pop()
        for g, m in adj[f]:
            if g in seen:
                continue
            seen.add(g)
            spins[g] = -spins[f] if m in sep else spins[f]
            stack.append(g)
    bits = span.bits_from_spins(spins)
    # consistency: the reconstructed spins must reproduce the full pattern
    for m in diagram.offsets:
        f, g = _edge_faces(m)
        if (spins[f] != spins[g]) != (m in sep):
            raise ValueError(f"inconsistent pattern: edge {m}")
    return bits


# ---- Appendix-style transfer matrices ---------------------------------------

def ep_pe_matrices(n: int, cap: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """(EP, PE) with EP[d, b] = prod_{i: D_i=-1}(mu - B_i) and
    PE[b, d] = (-1)^{#(D_i B_i = -1)} prod_{i: D_i=+1}(mu + B_i).

    Index bit i set means component i equals -1.  EP maps probability
    vectors to energy vectors; PE/2^n inverts it.
    """
    if n > cap:
        raise TooLarge(f"n={n} exceeds the dense matrix cap {cap}")
    size = 1 << n
    ep = np.ones((size, size))
    pe = np.ones((size, size))
    for d in range(size):
        for b in range(size):
            vep = 1.0
            vpe = 1.0
            minus = 0
            for i in range(n):
                di = -1 if (d >> i) & 1 else 1
                bi = -1 if (b >> i) & 1 else 1
                if di == -1:
                    vep *= MU - bi
                else:
                    vpe *= MU + bi
                if di * bi == -1:
                    minus += 1
            ep[d, b] = vep
            pe[b, d] = vpe * (-1.0) ** minus
    return ep, pe


def probabilities_from_energies(energies: np.ndarray, pe: np.ndarray) -> np.ndarray:
    """P = PE @ E / 2^n."""
    n = int(round(math.log2(len(energies))))
    return (pe @ np.asarray(energies)) / (1 << n)


def sensitive_split(
    energies: np.ndarray,
    energies_sigma: np.ndarray,
    m_a: float,
    pe: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Sensitive probability vectors (P_{B,+}, P_{B,-}).

    ``energies_sigma`` holds E[s_a * prod eps]; the split is
    P_{(B,+/-)} = (PE @ (E +/- E_sigma)) / 2^{n+1}.  ``m_a`` is E[s_a],
    used only for validation.
    """
    if abs(m_a) >= 1:
        raise DegenerateMagnetization(f"|E[s_a]| = {abs(m_a)} >= 1")
    n = int(round(math.log2(len(energies))))
    plus = (pe @ (np.asarray(energies) + np.asarray(energies_sigma))) / (1 << (n + 1))
    minus = (pe @ (np.asarray(energies) - np.asarray(energies_sigma))) / (1 << (n + 1))
    return plus, minus


# ---- the full pipeline -------------------------------------------------------

def magnetization(graph: DomainGraph, cache: dict | None = None) -> float:
    """E[s_a] at the marked face, from exact spinor ratios.

    Telescopes the two-step magnetization ratios along the positive real
    axis until a fixed boundary face is reached; each ratio is one linear
    solve, so the result is deterministic and solver-exact.
    """
    from .dca import BVPSpec, solve_riemann_bvp
    from .lattice import DomainSpec, discretize

    prod = 1.0
    k = 0
    g = graph
    while True:
        if cache is not None and ("m_ratio", k) in cache:
            r, has_next = cache[("m_ratio", k)]
        else:
            spec_k = DomainSpec(
                graph.spec.shape,
                graph.spec.center - complex(2 * k * graph.delta),
                graph.spec.size,
                0j,
            )
            gk = discretize(spec_k, graph.delta) if k else graph
            # north value -i at the source corner is the contour
            # normalization; the ratio E[s_{a+2d}]/E[s_a] is then the
            # field value at the corner a + 3d/2
            f = solve_riemann_bvp(
                BVPSpec(graph=gk, monodromy=True, corner_source=(1, 0),
                        normalization=((1, 0), -1.0))
            )
            r = f.values[(3, 0)].real
            has_next = (4, 0) in gk.faces
            if cache is not None:
                cache[("m_ratio", k)] = (r, has_next)
        prod *= r
        if not has_next:
            return 1.0 / prod
        k += 1


def energies_vector(
    graph: DomainGraph,
    span: SpanningEdgeSet,
    mode: str = "pfaffian",
    monodromy: bool = False,
    center: Point = (0, 0),
    exact_cap: int = 24,
    kernel=None,
):
    """E(D) for every D in {-1,1}^{B'}: the energy product over the edges
    with D_i = -1 (bit set), optionally with the s_a insertion.

    With monodromy the entries are E[s_a prod eps]/E[s_a].
    """
    from .observables import ObservableKernel, fused_energy_product
    from .oracle import ExactMeasure

    offs = [(m[0] + center[0], m[1] + center[1]) for m in span.edges]
    edges = [graph.edges[m] for m in offs]
    n = span.n
    out = np.zeros(1 << n)
    if mode == "pfaffian":
        if kernel is None:
            kernel = ObservableKernel(graph, monodromy=monodromy)
        for d in range(1 << n):
            sel = [edges[i] for i in range(n) if (d >> i) & 1]
            out[d] = fused_energy_product(kernel, sel)
    elif mode == "exact-oracle":
        meas = ExactMeasure(graph, cap=exact_cap)
        sf = graph.marked_face if monodromy else None
        denom = meas.spin_product([graph.marked_face]) if monodromy else 1.0
        for d in range(1 << n):
            sel = [edges[i] for i in range(n) if (d >> i) & 1]
            out[d] = meas.energy_product(sel, sigma_face=sf) / denom
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return out


def pattern_distribution(
    graph: DomainGraph,
    diagram: BaseDiagram,
    mode: str = "pfaffian",
    sensitive: bool = False,
    m_a: float | None = None,
    center: Point = (0, 0),
    exact_cap: int = 24,
):
    """Full pattern distribution of the embedded diagram.

    Returns a dict with the spanning set, the symmetric probability vector
    and, if ``sensitive``, the (plus, minus) vectors; indexing follows the
    spanning-set bit order.
    """
    offs = tuple((m[0] + center[0], m[1] + center[1]) for m in diagram.offsets)
    if center == (0, 0):
        embed_diagram(graph, tuple(diagram.offsets))
    for m in offs:
        if m not in graph.edges or not graph.edges[m].interior:
            raise BoundaryTooClose(f"diagram edge at {m} not interior")
    span = spanning_set(diagram)
    _, pe = ep_pe_matrices(span.n)
    energies = energies_vector(graph, span, mode=mode, center=center, exact_cap=exact_cap)
    probs = probabilities_from_energies(energies, pe)
    result = {"span": span, "symmetric": probs, "energies": energies}
    if sensitive:
        if center != (0, 0):
            raise ValueError("sensitive patterns must be centered at the marked face")
        if m_a is None:
            if mode == "exact-oracle":
                from .oracle import ExactMeasure

                m_a = ExactMeasure(graph, cap=exact_cap).spin_product(
                    [graph.marked_face]
                )
            else:
                m_a = magnetization(graph)
        ratios = energies_vector(
            graph, span, mode=mode, monodromy=True, center=center, exact_cap=exact_cap
        )
        plus, minus = sensitive_split(energies, m_a * ratios, m_a, pe)
        result.update({"plus": plus, "minus": minus, "m_a": m_a})
    return result


def pattern_probability(
    graph: DomainGraph,
    diagram: BaseDiagram,
    separating,
    sigma_a: int | None = None,
    mode: str = "pfaffian",
    exact_cap: int = 24,
) -> float:
    """Probability of one spin-symmetric or spin-sensitive pattern."""
    dist = pattern_distribution(
        graph, diagram, mode=mode, sensitive=sigma_a is not None, exact_cap=exact_cap
    )
    bits = pattern_bits(diagram, dist["span"], separating)
    if sigma_a is None:
        return float(dist["symmetric"][bits])
    return float(dist["plus"][bits] if sigma_a > 0 else dist["minus"][bits])


# ---- flip rate ----------------------------------------------------------------

def heat_bath_flip_probability(k_separating: int) -> float:
    """Flip probability of the center spin when k of the four surrounding
    edges separate opposite spins (neighbour agreement 4 - 2k)."""
    s = 4 - 2 * k_separating
    return 1.0 / (1.0 + math.exp(2.0 * BETA_C * s))


def flip_rate(
    graph: DomainGraph,
    x: Point,
    cross_probs: np.ndarray | None = None,
    mode: str = "pfaffian",
    exact_cap: int = 24,
) -> float:
    """Equilibrium heat-bath flip rate at the face x.

    The rate is the pattern-probability average of the heat-bath flip
    probability over the five-spin neighbourhood, a spin-symmetric
    functional of the cross-diagram distribution at x.
    """
    diagram = BaseDiagram.preset("cross")
    if cross_probs is None:
        for m in diagram.offsets:
            mm = (m[0] + x[0], m[1] + x[1])
            if mm not in graph.edges or not graph.edges[mm].interior:
                raise BoundaryTooClose(f"face {x} too close to the boundary")
        dist = pattern_distribution(graph, diagram, mode=mode, center=x, exact_cap=exact_cap)
        cross_probs = dist["symmetric"]
    rate = 0.0
    for bits in range(len(cross_probs)):
        k = bin(bits).count("1")
        rate += float(cross_probs[bits]) * heat_bath_flip_probability(k)
    return rate
