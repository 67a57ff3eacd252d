"""Slit-plane harmonic measure and explicit full-plane spinors.

Everything here lives in lattice units (mesh 1) in the half-unit integer
coordinates of `lattice`, anchored at the ramification face.  The discrete
harmonic measure of the slit plane has a closed Fourier form whose on-axis
values obey an exact rational recursion; the full-plane one-point spinor,
its primitive-like partners, and the two-point spinors along the axis are
assembled from shifted copies of it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import zeta as hurwitz_zeta

from .constants import TOL_SERIES
from .errors import QuadratureNotConverged, SeriesNotConverged, UnsupportedPosition
from .lattice import Point, corner_type, is_corner, is_medial

# ---- closed form and recursion ----------------------------------------------

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(n: int):
    if n not in _GL_CACHE:
        x, w = leggauss(n)
        half = math.sqrt(math.pi / 2.0)
        _GL_CACHE[n] = (0.5 * half * (x + 1.0), 0.5 * half * w)
    return _GL_CACHE[n]


def _quad_batch(s_values: np.ndarray, k: int, n_nodes: int | None = None) -> np.ndarray:
    """H0(s + ik) for an array of integers s, one quadrature pass.

    The integral over (0, pi) is split at pi/2 with a square-root
    substitution at both singular endpoints; the node count scales with
    the oscillation frequency.
    """
    if n_nodes is None:
        smax = int(np.max(np.abs(s_values))) if len(s_values) else 0
        n_nodes = max(300, 2 * smax + 200)
    u, w = _gl_nodes(n_nodes)
    out = np.zeros(len(s_values))
    for flip in (False, True):
        theta = math.pi - u * u if flip else u * u
        base = (np.cos(theta) / (1.0 + np.abs(np.sin(theta)))) ** abs(k)
        base = base / np.sqrt(1.0 - np.exp(-2j * theta)) * (2.0 * u * w)
        phases = np.exp(-1j * np.outer(np.asarray(s_values, dtype=float), theta))
        out += np.real(phases @ base)
    return out / math.pi


@lru_cache(maxsize=None)
def hm_axis(j: int) -> float:
    """On-axis harmonic measure hm(2 j delta), exact rational recursion."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    v = 1.0
    for i in range(j):
        v *= (i + 0.5) / (i + 1.0)
    return v


@lru_cache(maxsize=None)
def hm_closed_form(s: int, k: int, n_nodes: int = 280) -> float:
    """H0(s + ik): slit-plane harmonic measure in Fourier form.

    Boundary structure: value 1 at the origin, 0 on the rest of the slit
    (positive even s); the free on-axis values sit at negative even s.
    Vanishes identically when s + k is odd.
    """
    k = abs(k)
    if (s + k) % 2:
        return 0.0
    if k == 0:
        if s > 0 or s % 2:
            return 0.0
        return hm_axis(-s // 2)
    v1 = _quad_batch(np.array([s]), k, n_nodes)[0]
    v2 = _quad_batch(np.array([s]), k, n_nodes + 80)[0]
    if abs(v1 - v2) > 1e-11:
        raise QuadratureNotConverged(f"H0({s}+{k}i): {v1} vs {v2}")
    return v2


def hm_recursion(s: int) -> float:
    """On-axis sequence by the exact ratio recursion (s >= 0 steps)."""
    return hm_axis(s)


@lru_cache(maxsize=None)
def hm_shifted(m: int, s: int, k: int) -> float:
    """Harmonic measure with boundary value 1 at slit site 2m, 0 elsewhere.

    H_m(z) = H_{m-1}(z - 2) - H_{m-1}(-2) H_0(z).
    """
    if m == 0:
        return hm_closed_form(s, k)
    return hm_shifted(m - 1, s - 2, k) - hm_shifted(m - 1, -2, 0) * hm_closed_form(s, k)


def vartheta(delta: float) -> float:
    """Normalization factor: the one-point spinor's value one unit to the
    right of its normalization corner, hm(2 delta floor(1/(2 delta)))."""
    return hm_axis(int(math.floor(1.0 / (2.0 * delta))))


# ---- the full-plane one-point spinor ------------------------------------------

def one_point_value(p: Point) -> complex:
    """Canonical-sheet value of the full-plane one-point spinor at a corner.

    The spinor ramifies at the face at the origin and has its singular
    corner at (1, 0); the normalization corner (3, 0) carries value 1.
    At the singular corner the returned value is the north side (-i); the
    south side is +i.
    """
    x, y = p
    t = corner_type(p)
    if t == "1":
        return complex(hm_closed_form((3 - x) // 2, abs(y) // 2))
    if t == "i":
        sgn = 1.0 if y >= 0 else -1.0
        return -1j * sgn * hm_closed_form((x - 1) // 2, abs(y) // 2)
    raise UnsupportedPosition(f"{p} is not an axis-type corner")


def one_point_pole_values() -> tuple[complex, complex]:
    """(north, south) one-sided values at the singular corner (1, 0)."""
    return (-1j, 1j)


@dataclass
class FullPlaneSpinor:
    """Windowed values of a full-plane spinor on the canonical sheet."""

    kind: str
    values: dict[Point, complex] = field(default_factory=dict)
    pole: Point | None = None
    pole_north: complex = 0j
    pole_south: complex = 0j

    def value(self, p: Point, sheet: int = 1) -> complex:
        v = self.values[p]
        return v if sheet == 1 else -v


def _axis_corner_window(radius: int):
    out = []
    for x in range(-radius, radius + 1):
        for y in range(-radius, radius + 1):
            if (x + y) % 2 and x % 2 == 1:
                out.append((x, y))
    return out


def build_one_point_spinor(radius: int) -> FullPlaneSpinor:
    """One-point spinor values on corners and medials within the window.

    In lattice units; physical values at mesh delta are identical (the
    spinor is normalized at the corner a + 3 delta/2).
    """
    if radius < 4:
        raise UnsupportedPosition("radius too small")
    sp = FullPlaneSpinor(kind="one-point", pole=(1, 0), pole_north=-1j, pole_south=1j)
    for c in _axis_corner_window(radius):
        sp.values[c] = one_point_value(c)
    _extend_to_medials(sp, radius)
    return sp


def _cut_sign(c: Point, m: Point) -> float:
    """Sheet sign of the corner-medial adjacency across the cut y=0-, x<0."""
    yp, yq = c[1], m[1]
    if min(yp, yq) > -1 or max(yp, yq) < 0:
        return 1.0
    num = c[0] * yq - m[0] * yp
    den = yq - yp
    if num == 0:
        return 1.0
    return -1.0 if (num < 0) == (den > 0) else 1.0


def _extend_to_medials(sp: FullPlaneSpinor, radius: int) -> None:
    from .lattice import CORNER_TAU2, project_tau2

    for x in range(-radius + 1, radius):
        for y in range(-radius + 1, radius):
            if x % 2 == 0 or y % 2 == 0:
                continue
            cn, cs = (x, y + 1), (x, y - 1)
            c1, ci = (cn, cs) if corner_type(cn) == "1" else (cs, cn)
            if c1 not in sp.values or ci not in sp.values:
                continue
            s1 = _cut_sign(c1, (x, y))
            si = _cut_sign(ci, (x, y))
            vi = sp.values[ci]
            if sp.pole is not None and ci == sp.pole:
                vi = sp.pole_north if y > sp.pole[1] else sp.pole_south
                si = 1.0
            if sp.pole is not None and c1 == sp.pole:
                raise UnsupportedPosition("pole on the type-1 sublattice")
            sp.values[(x, y)] = s1 * sp.values[c1] + 1.0 * si * vi
    # diagonal-type corners by projection
    from .lattice import CORNER_TAU2 as T2

    for x in range(-radius + 1, radius):
        for y in range(-radius + 1, radius):
            if (x + y) % 2 == 0 or x % 2 == 1:
                continue
            t2 = T2[corner_type((x, y))]
            for m in ((x + 1, y), (x - 1, y)):
                if m in sp.values:
                    s = _cut_sign((x, y), m)
                    sp.values[(x, y)] = s * project_tau2(sp.values[m], t2)
                    break


# ---- G and G-tilde -------------------------------------------------------------

_JACOBI_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _jacobi_nodes(n: int):
    """Nodes/weights for int_0^1 f(t) t^{-1/2} dt."""
    if n not in _JACOBI_CACHE:
        from scipy.special import roots_jacobi

        x, w = roots_jacobi(n, 0.0, -0.5)
        # map from (-1,1) with weight (1+x)^{-1/2} to (0,1) with t^{-1/2}
        t = 0.5 * (x + 1.0)
        ww = w * 0.5**0.5
        _JACOBI_CACHE[n] = (t, ww)
    return _JACOBI_CACHE[n]


def _series_sum_fp(s0: int, k: int, n: int = 150) -> float:
    """sum_{j>=0} H0(s0 + 2j + ik) as a finite-part Fourier integral.

    Summing the geometric shift inside the integral gives
    (1/pi) Re F.P. int_0^pi C^{|k|} e^{-i s0 t} (1 - e^{-2it})^{-3/2} dt;
    the finite part at both square-root-cubed endpoints matches the Abel
    regularization of the convergent sum.  The subtracted integrand is
    analytic, so Gauss-Jacobi quadrature converges spectrally.
    """
    k = abs(k)
    if (s0 + k) % 2:
        return 0.0
    if k == 0:
        j_max = max(0, (-s0) // 2 + 1)
        return float(sum(hm_closed_form(s0 + 2 * j, 0) for j in range(j_max + 1)))
    c = math.pi / 2.0
    total = 0.0 + 0.0j

    def base(theta):
        return (
            (np.cos(theta) / (1.0 + np.abs(np.sin(theta)))) ** k
            * np.exp(-1j * s0 * theta)
            * (1.0 - np.exp(-2j * theta) + 0j) ** -1.5
        )

    for end in (0.0, math.pi):
        if end == 0.0:
            g = lambda tau: base(tau) * (tau + 0j) ** 1.5
            g0 = (2j) ** -1.5
        else:
            g = lambda tau: base(math.pi - tau) * (tau + 0j) ** 1.5
            g0 = ((-1.0) ** (k + s0)) * (-2j) ** -1.5
        t, w = _jacobi_nodes(n)
        tau = c * t
        h = (g(tau) - g0) / tau
        # int_0^c h(tau) tau^{-1/2} dtau  (tau = c t scales weight by sqrt(c))
        total += math.sqrt(c) * np.sum(h * w)
        total += g0 * (-2.0 / math.sqrt(c))
    return float(total.real) / math.pi


def _tail_completed_sum(s0: int, k: int, terms: int = 150) -> float:
    """sum_{j>=0} H0(s0 + 2j + ik) with an asymptotic tail completion.

    The summand decays like (s0+2j)^{-3/2} at fixed k (the arguments march
    into the slit side); the tail beyond the computed head is summed with
    Hurwitz-zeta weights after a three-coefficient asymptotic fit.
    """
    if (s0 + k) % 2:
        return 0.0
    if k == 0:
        # only finitely many nonzero terms (the free axis side)
        j_max = max(0, (-s0) // 2 + 1)
        return float(sum(hm_closed_form(s0 + 2 * j, 0) for j in range(j_max + 1)))
    js = np.arange(terms)
    ss = s0 + 2 * js
    vals = _quad_batch(ss, k)
    head = float(vals.sum())
    # asymptotic tail: v(x) ~ (C + D/x + E/x^2) x^{-3/2}, fitted at three
    # well-separated probes so quadrature noise is not amplified
    x_last = int(ss[-1])

    def probe(x: int) -> int:
        return x + (x + k) % 2

    xs = np.array([x_last, probe(2 * x_last), probe(4 * x_last)], dtype=float)
    pv = np.array(
        [float(vals[-1])]
        + [_quad_batch(np.array([int(x)]), k)[0] for x in xs[1:]]
    )
    coef = np.linalg.solve(np.vander(1.0 / xs, 3, increasing=True), pv * xs**1.5)
    C, D, E = coef
    t = [float(hurwitz_zeta(1.5 + i, (x_last + 2) / 2.0)) * 2.0 ** -(1.5 + i)
         for i in range(3)]
    tail = C * t[0] + D * t[1] + E * t[2]
    x_chk = probe(3 * x_last)
    v_chk = _quad_batch(np.array([x_chk]), k)[0]
    fit_chk = (C + D / x_chk + E / x_chk**2) * x_chk**-1.5
    if abs(v_chk - fit_chk) > 1000 * TOL_SERIES:
        raise SeriesNotConverged(f"tail fit error {abs(v_chk - fit_chk)}")
    return head + tail


@lru_cache(maxsize=None)
def _u_series(x: int, y: int) -> float:
    """sum_j u(x - 4j, y): type-1 values marching into the left slit."""
    return _series_sum_fp((3 - x) // 2, abs(y) // 2)


@lru_cache(maxsize=None)
def _w_series(x: int, y: int, skip_first: bool) -> float:
    """sum_j |w|(x + 4j, y): type-i magnitudes marching into the right slit."""
    s0 = (x - 1) // 2 + (2 if skip_first else 0)
    return _series_sum_fp(s0, abs(y) // 2)


def g_spinor_value(p: Point) -> complex:
    """G at a corner (lattice units; physical value is delta times this).

    G's axis-type values are the discrete primitives of the one-point
    spinor along the axis direction; the scaling limit of delta^{-1}
    vartheta^{-1} G delta is sqrt(z - a).
    """
    x, y = p
    t = corner_type(p)
    if t == "1":
        return complex(_u_series(x, y))
    if t == "i":
        sgn = 1.0 if y >= 0 else -1.0
        return -1.0 * (-1j * sgn * _w_series(x, y, True))
    raise UnsupportedPosition(f"{p} is not an axis-type corner")


def g_tilde_value(p: Point) -> complex:
    """G-tilde at a corner; scaling limit i sqrt(z - a)."""
    x, y = p
    t = corner_type(p)
    if t == "1":
        # -i times the one-point spinor's type-i values at x+2+4j
        sgn = 1.0 if y >= 0 else -1.0
        return -1j * (-1j * sgn * _w_series(x + 2, y, False))
    if t == "i":
        return 1j * _u_series(x - 2, y)
    raise UnsupportedPosition(f"{p} is not an axis-type corner")


def build_g_spinors(radius: int) -> tuple[FullPlaneSpinor, FullPlaneSpinor]:
    g = FullPlaneSpinor(kind="G")
    gt = FullPlaneSpinor(kind="G-tilde")
    for c in _axis_corner_window(radius):
        g.values[c] = g_spinor_value(c)
        gt.values[c] = g_tilde_value(c)
    _extend_to_medials(g, radius)
    _extend_to_medials(gt, radius)
    return g, gt


# ---- two-point spinors along the axis ------------------------------------------

@lru_cache(maxsize=None)
def _axis_spinor_u(m: int, x: int, y: int) -> float:
    """Type-1 values of the two-point spinor with source at (1 + 4m, 0).

    The source-shift recursion subtracts the one-point spinor weighted by
    the shifted measure's value two steps left of the ramification.
    """
    if m == 0:
        return hm_closed_form((3 - x) // 2, abs(y) // 2)
    gamma = hm_shifted(m - 1, -2, 0)
    return _axis_spinor_u(m - 1, x - 4, y) - gamma * _axis_spinor_u(0, x, y)


def two_point_axis_spinor(x0: int, radius: int) -> FullPlaneSpinor:
    """Full-plane two-point spinor H_x for an axis corner source x = (x0, 0).

    Supported sources are the type-i corners on the positive axis (x0 = 1
    mod 4, x0 >= 1); the one-point spinor is the x0 = 1 member.  Both
    corner sublattices come from the shifted slit measures through the
    source-shift recursion; other positions raise UnsupportedPosition.
    """
    if x0 % 4 != 1 or x0 < 1:
        raise UnsupportedPosition(
            "only positive-axis type-i sources are constructed explicitly"
        )
    m = (x0 - 1) // 4
    sp = FullPlaneSpinor(
        kind=f"two-point[{x0}]", pole=(x0, 0), pole_north=-1j, pole_south=1j
    )
    for c in _axis_corner_window(radius):
        x, y = c
        if corner_type(c) == "i":
            sgn = 1.0 if y >= 0 else -1.0
            sp.values[c] = -1j * sgn * hm_shifted(m, (x - 1) // 2, abs(y) // 2)
        else:
            sp.values[c] = complex(_axis_spinor_u(m, x, y))
    _extend_to_medials(sp, radius)
    return sp
