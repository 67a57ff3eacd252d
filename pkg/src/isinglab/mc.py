"""Glauber heat-bath Monte Carlo at the critical temperature.

Faces map to a square array through the (1+i)-basis; plus boundary
conditions enter as frozen +1 cells around the interior mask.  Production
sampling uses simultaneous heat-bath updates on the two checkerboard
colors (each color update is an exact Gibbs kernel, so the equilibrium
measure is the Ising measure); the single-site random-scan kernel is kept
for small-domain stationarity tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import BETA_C
from .lattice import DomainGraph, Point


def face_to_mn(p: Point) -> tuple[int, int]:
    return ((p[0] + p[1]) // 4, (p[1] - p[0]) // 4)


def mn_to_face(m: int, n: int) -> Point:
    return (2 * (m - n), 2 * (m + n))


@dataclass
class FaceGrid:
    """Interior faces embedded in a padded rectangular array."""

    graph: DomainGraph
    offset: tuple[int, int]
    mask: np.ndarray          # interior cells, shape (M, N)

    @classmethod
    def from_graph(cls, graph: DomainGraph) -> "FaceGrid":
        mns = [face_to_mn(f) for f in graph.faces]
        m0 = min(m for m, _ in mns) - 1
        n0 = min(n for _, n in mns) - 1
        M = max(m for m, _ in mns) - m0 + 3
        N = max(n for _, n in mns) - n0 + 3
        mask = np.zeros((M, N), dtype=bool)
        for m, n in mns:
            mask[m - m0, n - n0] = True
        return cls(graph=graph, offset=(m0, n0), mask=mask)

    def index(self, p: Point) -> tuple[int, int]:
        m, n = face_to_mn(p)
        return (m - self.offset[0], n - self.offset[1])


class GlauberSampler:
    """Checkerboard heat-bath chains with frozen plus boundary."""

    def __init__(self, graph: DomainGraph, seed: int = 0, chains: int = 1):
        self.grid = FaceGrid.from_graph(graph)
        self.rng = np.random.default_rng(seed)
        self.chains = chains
        M, N = self.grid.mask.shape
        self.spins = np.ones((chains, M, N), dtype=np.int8)
        self.mask = self.grid.mask
        self.color = np.zeros_like(self.mask, dtype=bool)
        mm, nn = np.meshgrid(
            np.arange(M), np.arange(N), indexing="ij"
        )
        self.color = (mm + nn) % 2 == 0
        self._pflip = {
            s: 1.0 / (1.0 + math.exp(-2.0 * BETA_C * s)) for s in (-4, -2, 0, 2, 4)
        }

    def neighbour_sum(self) -> np.ndarray:
        s = self.spins
        out = np.zeros_like(s, dtype=np.int8)
        out[:, 1:, :] += s[:, :-1, :]
        out[:, :-1, :] += s[:, 1:, :]
        out[:, :, 1:] += s[:, :, :-1]
        out[:, :, :-1] += s[:, :, 1:]
        return out

    def sweep(self, n: int = 1) -> None:
        for _ in range(n):
            for color in (self.color, ~self.color):
                upd = self.mask & color
                ns = self.neighbour_sum()
                p_plus = 1.0 / (1.0 + np.exp(-2.0 * BETA_C * ns[:, upd]))
                r = self.rng.random(p_plus.shape)
                self.spins[:, upd] = np.where(r < p_plus, 1, -1).astype(np.int8)

    # ---- estimator helpers ------------------------------------------------

    def spin_at(self, face: Point) -> np.ndarray:
        i, j = self.grid.index(face)
        return self.spins[:, i, j].astype(float)

    def conditional_spin_at(self, face: Point) -> np.ndarray:
        """Rao-Blackwellized spin: tanh(beta * neighbour sum)."""
        i, j = self.grid.index(face)
        ns = (
            self.spins[:, i - 1, j]
            + self.spins[:, i + 1, j]
            + self.spins[:, i, j - 1]
            + self.spins[:, i, j + 1]
        )
        return np.tanh(BETA_C * ns.astype(float))

    def flip_probability_at(self, face: Point) -> np.ndarray:
        i, j = self.grid.index(face)
        ns = (
            self.spins[:, i - 1, j]
            + self.spins[:, i + 1, j]
            + self.spins[:, i, j - 1]
            + self.spins[:, i, j + 1]
        ).astype(float)
        return 1.0 / (1.0 + np.exp(2.0 * BETA_C * self.spins[:, i, j] * ns))

    def pattern_bits_at(self, center: Point, span) -> np.ndarray:
        """Spanning-set pattern index of the cross/diagram at ``center``."""
        bits = np.zeros(self.chains, dtype=np.int64)
        for k, medial in enumerate(span.edges):
            mm = (medial[0] + center[0], medial[1] + center[1])
            f, g = self.graph_edge_faces(mm)
            si = self._face_spin(f)
            sj = self._face_spin(g)
            bits |= ((si != sj).astype(np.int64)) << k
        return bits

    def graph_edge_faces(self, medial: Point):
        e = self.grid.graph.edges[medial]
        return e.faces

    def _face_spin(self, face: Point) -> np.ndarray:
        if face in self.grid.graph.faces:
            i, j = self.grid.index(face)
            return self.spins[:, i, j]
        return np.ones(self.chains, dtype=np.int8)


def batch_stats(samples: np.ndarray, n_batches: int = 32) -> tuple[float, float]:
    """Mean and batch-means standard error over (samples, chains) data."""
    flat = np.asarray(samples, dtype=float)
    if flat.ndim == 1:
        flat = flat[:, None]
    n = flat.shape[0]
    nb = min(n_batches, n)
    cut = (n // nb) * nb
    batches = flat[:cut].reshape(nb, cut // nb, -1).mean(axis=(1, 2))
    mean = float(flat.mean())
    stderr = float(batches.std(ddof=1) / math.sqrt(nb)) if nb > 1 else float("inf")
    return mean, stderr


def glauber_run(
    graph: DomainGraph,
    steps: int,
    seed: int,
    estimators: dict,
    burn_in: int | None = None,
    chains: int = 8,
    thin: int = 1,
) -> dict:
    """Run Glauber chains and report estimator means with standard errors.

    ``estimators`` maps names to callables sampler -> (chains,) array.
    ``steps`` counts measurement sweeps (after burn-in); results are
    deterministic for a fixed seed.
    """
    if burn_in is None:
        burn_in = max(200, steps // 5)
    if steps <= 0:
        raise ValueError("zero measurement steps: estimate undefined")
    sampler = GlauberSampler(graph, seed=seed, chains=chains)
    sampler.sweep(burn_in)
    traces = {name: [] for name in estimators}
    for _ in range(steps // thin):
        sampler.sweep(thin)
        for name, fn in estimators.items():
            traces[name].append(fn(sampler))
    out = {}
    for name, rows in traces.items():
        arr = np.asarray(rows)
        mean, err = batch_stats(arr)
        out[name] = {"mean": mean, "stderr": err, "steps": steps, "seed": seed}
    return out


def results_to_csv(results: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write("estimator,mean,stderr,steps,seed\n")
        for name, r in sorted(results.items()):
            fh.write(f"{name},{r['mean']!r},{r['stderr']!r},{r['steps']},{r['seed']}\n")


# ---- single-site kernel for exactness tests --------------------------------

def single_site_transition_matrix(graph: DomainGraph) -> np.ndarray:
    """Random-scan heat-bath transition matrix on the full state space.

    Exponential in the face count; used to check stationarity/detailed
    balance against the exact measure on tiny domains.
    """
    faces = sorted(graph.faces)
    n = len(faces)
    if n > 12:
        raise ValueError("state space too large")
    index = {f: i for i, f in enumerate(faces)}
    neigh = []
    for f in faces:
        ns = []
        for d in ((2, 2), (2, -2), (-2, 2), (-2, -2)):
            g = (f[0] + d[0], f[1] + d[1])
            ns.append(index.get(g, -1))
        neigh.append(ns)
    size = 1 << n
    P = np.zeros((size, size))
    for state in range(size):
        spins = [1 if (state >> i) & 1 else -1 for i in range(n)]
        for i in range(n):
            s_nb = sum(spins[j] if j >= 0 else 1 for j in neigh[i])
            p_plus = 1.0 / (1.0 + math.exp(-2.0 * BETA_C * s_nb))
            up = state | (1 << i)
            down = state & ~(1 << i)
            P[state, up] += p_plus / n
            P[state, down] += (1.0 - p_plus) / n
    return P


def exact_distribution(graph: DomainGraph) -> np.ndarray:
    """Boltzmann distribution over bit-indexed states (small domains)."""
    from .oracle import ExactMeasure

    meas = ExactMeasure(graph, cap=12)
    n = meas.n
    w = np.zeros(1 << n)
    for state in range(1 << n):
        spins = np.array([1 if (state >> i) & 1 else -1 for i in range(n)], dtype=np.int8)
        energy = 0.0
        for i, j in meas.edge_pairs:
            si = spins[i] if i >= 0 else 1
            sj = spins[j] if j >= 0 else 1
            energy -= si * sj
        w[state] = math.exp(-BETA_C * energy)
    return w / w.sum()
