"""Numerical verification harness for the conformal-invariance predictions.

Mesh sweeps of pattern probabilities on disks, infinite-volume limits from
growing squares, exponent fits of the renormalized corrections, and the
near-ramification expansion coefficient of the domain spinor.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FitUnstable,
    InsufficientPoints,
    NotConverging,
    PointOutside,
)
from .lattice import DomainSpec, DomainGraph, discretize
from .patterns import BaseDiagram, pattern_distribution, spanning_set


def max_threads() -> int:
    try:
        return max(1, int(os.environ.get("ISING_LAB_THREADS", "1")))
    except ValueError:
        return 1


def conformal_radius_disk(a: complex, center: complex, radius: float) -> float:
    """rad(a, disk) = (R^2 - |a - c|^2)/R."""
    d = abs(a - center)
    if d >= radius:
        raise PointOutside(f"{a} not inside the disk")
    return (radius * radius - d * d) / radius


@dataclass
class ExperimentSpec:
    """One mesh sweep: a disk, a diagram, a pattern, a delta schedule."""

    center: complex = 0j
    radius: float = 1.0
    marked_point: complex = 0j
    diagram: str = "edge"
    pattern_bits: int = 1
    sigma_a: int | None = None
    delta0: float = 0.25
    levels: int = 5
    seed: int = 0

    @property
    def deltas(self) -> list[float]:
        return [self.delta0 / 2**k for k in range(self.levels)]

    @classmethod
    def from_config(cls, path) -> "ExperimentSpec":
        kv = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                k, _, v = line.partition("=")
                kv[k.strip()] = v.strip()
        spec = cls()
        if "center" in kv:
            re_, im_ = (float(t) for t in kv["center"].split(","))
            spec.center = complex(re_, im_)
        if "radius" in kv:
            spec.radius = float(kv["radius"])
        if "marked_point" in kv:
            re_, im_ = (float(t) for t in kv["marked_point"].split(","))
            spec.marked_point = complex(re_, im_)
        if "diagram" in kv:
            spec.diagram = kv["diagram"]
        if "pattern_bits" in kv:
            spec.pattern_bits = int(kv["pattern_bits"])
        if "sigma_a" in kv and kv["sigma_a"] not in ("", "none"):
            spec.sigma_a = int(kv["sigma_a"])
        if "delta0" in kv:
            spec.delta0 = float(kv["delta0"])
        if "levels" in kv:
            spec.levels = int(kv["levels"])
        if "seed" in kv:
            spec.seed = int(kv["seed"])
        return spec


# ---- infinite-volume limits ---------------------------------------------------

def infinite_volume_extrapolate(values, sizes, order: int = 1):
    """Richardson extrapolation in 1/L^order with a last-increment error bar.

    Raises NotConverging when the increments of the first extrapolation
    column fail to shrink.
    """
    if len(values) < 3:
        raise InsufficientPoints("need at least 3 sizes")
    xs = [1.0 / s**order for s in sizes]
    col = list(values)
    first = None
    for level in range(1, len(xs)):
        new = []
        for k in range(len(col) - 1):
            x0, x1 = xs[k], xs[k + level]
            new.append((col[k + 1] * x0 - col[k] * x1) / (x0 - x1))
        if first is None:
            first = new
        col = new
    inc = [abs(first[k + 1] - first[k]) for k in range(len(first) - 1)]
    if len(inc) >= 2 and inc[-1] > 4.0 * inc[-2] and inc[-1] > 1e-12:
        raise NotConverging(f"increments grow: {inc}")
    err = abs(col[0] - first[-1]) if first else float("nan")
    return col[0], err


_SQUARE_SIZES = (8, 16, 32, 64)


def _square_graph(half_faces: int) -> DomainGraph:
    side = (2 * half_faces + 1) * math.sqrt(2.0) * 0.5
    return discretize(DomainSpec("square", 0j, side * 1.001, 0j), 1.0)


def infinite_volume_pattern(
    diagram: BaseDiagram, sizes=_SQUARE_SIZES, sensitive: bool = False
):
    """P over the pattern vector in the full-plane limit, via growing squares.

    Returns (vector, error bar).  The sensitive full-plane distribution is
    half the symmetric one (the infinite-volume magnetization vanishes).
    """
    rows = []
    for L in sizes:
        g = _square_graph(L)
        dist = pattern_distribution(g, diagram, mode="pfaffian")
        rows.append(dist["symmetric"])
    rows = np.asarray(rows)
    out = np.zeros(rows.shape[1])
    err = 0.0
    for j in range(rows.shape[1]):
        v, e = infinite_volume_extrapolate(list(rows[:, j]), list(sizes))
        out[j] = v
        err = max(err, e)
    if sensitive:
        return out / 2.0, err / 2.0
    return out, err


def infinite_volume_energy(sizes=(8, 16, 32, 64)):
    """Center pair correlation E[ss'] on growing squares, extrapolated.

    Doubling sizes keep the boundary alignment coherent, so the leading
    1/L correction cancels cleanly.
    """
    from .observables import ObservableKernel

    vals = []
    for L in sizes:
        g = _square_graph(L)
        ker = ObservableKernel(g)
        vals.append(ker.pair_correlation(g.edges[(1, 1)]))
    lim, err = infinite_volume_extrapolate(vals, list(sizes))
    return lim, err, vals


# ---- sweeps -------------------------------------------------------------------

@dataclass
class SweepResult:
    spec: ExperimentSpec
    deltas: list[float]
    probabilities: list[float]
    p_infinity: float
    p_infinity_err: float
    alpha: float

    @property
    def renormalized(self) -> list[float]:
        return [
            (p - self.p_infinity) / d**self.alpha
            for p, d in zip(self.probabilities, self.deltas)
        ]

    def rows(self):
        return [
            {
                "delta": d,
                "probability": p,
                "p_infinity": self.p_infinity,
                "renormalized": r,
            }
            for d, p, r in zip(self.deltas, self.probabilities, self.renormalized)
        ]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("# isinglab sweep v1\n")
            fh.write("delta,probability,p_infinity,renormalized\n")
            for row in self.rows():
                fh.write(
                    f"{row['delta']!r},{row['probability']!r},"
                    f"{row['p_infinity']!r},{row['renormalized']!r}\n"
                )


def run_sweep(spec: ExperimentSpec, p_infinity: tuple | None = None) -> SweepResult:
    """Deterministic mesh sweep of one pattern probability on one disk."""
    diagram = BaseDiagram.preset(spec.diagram)
    sensitive = spec.sigma_a is not None
    if p_infinity is None:
        vec, err = infinite_volume_pattern(diagram, sensitive=sensitive)
        p_inf, p_err = float(vec[spec.pattern_bits]), err
    else:
        p_inf, p_err = p_infinity

    def one(delta: float) -> float:
        g = discretize(
            DomainSpec("disk", spec.center, spec.radius, spec.marked_point), delta
        )
        dist = pattern_distribution(g, diagram, mode="pfaffian", sensitive=sensitive)
        if sensitive:
            key = "plus" if spec.sigma_a > 0 else "minus"
            return float(dist[key][spec.pattern_bits])
        return float(dist["symmetric"][spec.pattern_bits])

    nthreads = max_threads()
    if nthreads > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            probs = list(pool.map(one, spec.deltas))
    else:
        probs = [one(d) for d in spec.deltas]
    alpha = 0.125 if sensitive else 1.0
    return SweepResult(
        spec=spec,
        deltas=list(spec.deltas),
        probabilities=probs,
        p_infinity=p_inf,
        p_infinity_err=p_err,
        alpha=alpha,
    )


@dataclass
class FitResult:
    alpha: float
    amplitude: float
    residuals: list[float]
    loo_spread: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "alpha": self.alpha,
                "amplitude": self.amplitude,
                "residuals": self.residuals,
                "loo_spread": self.loo_spread,
            }
        )


def fit_exponent(deltas, differences) -> FitResult:
    """Least-squares slope of log|difference| against log delta."""
    if len(deltas) < 4:
        raise InsufficientPoints("need at least 4 mesh points")
    xs = np.log(np.asarray(deltas, dtype=float))
    ys = np.log(np.abs(np.asarray(differences, dtype=float)))
    if not np.all(np.isfinite(ys)):
        raise FitUnstable("zero difference in the sweep")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = list(ys - (slope * xs + intercept))
    loo = []
    for k in range(len(xs)):
        keep = [i for i in range(len(xs)) if i != k]
        s, _ = np.polyfit(xs[keep], ys[keep], 1)
        loo.append(s)
    return FitResult(
        alpha=float(slope),
        amplitude=float(math.exp(intercept)),
        residuals=[float(r) for r in resid],
        loo_spread=float(max(loo) - min(loo)),
    )


def predict_correction(radii, amplitudes, alpha: float) -> list[float]:
    """Corrections scale like rad^{-alpha}: predicted amplitude ratios."""
    base = amplitudes[0] * radii[0] ** alpha
    return [base * r**-alpha for r in radii]


# ---- near-ramification expansion coefficient -----------------------------------

def domain_one_point_spinor(graph: DomainGraph):
    """Contour-normalized one-point spinor of the domain (one solve)."""
    from .dca import BVPSpec, solve_riemann_bvp

    return solve_riemann_bvp(
        BVPSpec(
            graph=graph,
            monodromy=True,
            corner_source=(1, 0),
            normalization=((1, 0), -1.0),
        )
    )


def estimate_A_coefficient(
    graph: DomainGraph,
    r_min: int = 5,
    r_max: int = 13,
) -> tuple[complex, float]:
    """Fit the sqrt-term coefficient of the one-point spinor near the mark.

    The difference between the domain spinor and its full-plane limit is
    fitted against (2 Re A) G + (2 Im A) G~ on an annulus of lattice
    offsets; returns (A, fit residual).  A scales like one over length.
    """
    from .slitplane import build_g_spinors, build_one_point_spinor

    f = domain_one_point_spinor(graph)
    hc = build_one_point_spinor(r_max + 2)
    g, gt = build_g_spinors(r_max + 2)
    from .lattice import CORNER_TAU2, corner_type, is_corner, project_tau2
    from .slitplane import vartheta

    rows = []
    rhs = []
    delta = graph.delta
    th = vartheta(delta)
    for p, v in hc.values.items():
        r = math.hypot(p[0], p[1])
        if not (r_min <= r <= r_max) or p not in f.values:
            continue
        diff = f.values[p] - v
        gv = 2.0 * delta * g.values[p]
        gtv = 2.0 * delta * gt.values[p]
        # two extra columns absorb the (z-a)^{3/2} expansion term so it
        # does not contaminate the sqrt coefficient; projected onto the
        # corner line when p is a corner
        z32 = th * (complex(p[0], p[1]) * delta / 2.0) ** 1.5
        if is_corner(p):
            t2 = CORNER_TAU2[corner_type(p)]
            c1 = project_tau2(z32, t2)
            c2 = project_tau2(1j * z32, t2)
        else:
            c1, c2 = z32, 1j * z32
        rows.append([gv.real, gtv.real, c1.real, c2.real])
        rows.append([gv.imag, gtv.imag, c1.imag, c2.imag])
        rhs.extend([diff.real, diff.imag])
    A = np.asarray(rows)
    b = np.asarray(rhs)
    if len(b) < 12:
        raise FitUnstable("not enough annulus points")
    sol, res, rank, sv = np.linalg.lstsq(A, b, rcond=None)
    if rank < 4 or sv[-1] < 1e-10 * sv[0]:
        raise FitUnstable("degenerate design matrix")
    resid = float(np.max(np.abs(A @ sol - b)))
    return complex(sol[0], sol[1]), resid


def a_coefficient_disk_exact(a: complex, center: complex, radius: float) -> complex:
    """Closed form for the disk: conj(a - c) / (4 (R^2 - |a - c|^2))."""
    w = a - center
    return np.conj(w) / (4.0 * (radius * radius - abs(w) ** 2))


def spinor_residual_decay(
    center: complex,
    radius: float,
    deltas,
    window: int = 4,
    coeff: complex | None = None,
):
    """Near-mark discrepancy after removing the fitted sqrt-correction.

    Returns (deltas, D-values) with
    D(delta) = max over the window of |H_domain - H_fullplane - correction|.
    """
    from .slitplane import build_g_spinors, build_one_point_spinor

    hc = build_one_point_spinor(window + 4)
    g, gt = build_g_spinors(window + 4)
    if coeff is None:
        g_fit = discretize(DomainSpec("disk", center, radius, 0j), min(deltas))
        coeff, _ = estimate_A_coefficient(g_fit)
    out = []
    for delta in deltas:
        gd = discretize(DomainSpec("disk", center, radius, 0j), delta)
        f = domain_one_point_spinor(gd)
        worst = 0.0
        for p, v in hc.values.items():
            if max(abs(p[0]), abs(p[1])) > window or p not in f.values:
                continue
            corr = 2.0 * delta * (
                coeff.real * g.values[p] + coeff.imag * gt.values[p]
            )
            worst = max(worst, abs(f.values[p] - v - corr))
        out.append(worst)
    return list(deltas), out, coeff
