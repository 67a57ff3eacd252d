"""Command-line front end.

Every run writes its artifacts (CSV/JSON) with the fully resolved
configuration recorded in the output, and is byte-reproducible for a
fixed command line and seed.  Exit codes: 0 success, 2 validation error,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import errors
from .lattice import DIAGRAM_PRESETS, DomainSpec, discretize


def _parse_domain(text: str) -> DomainSpec:
    """disk:re,im,R or square:re,im,half_side (marked point at the origin
    unless a fourth/fifth field gives it)."""
    shape, _, rest = text.partition(":")
    parts = [float(t) for t in rest.split(",")] if rest else []
    if shape not in ("disk", "square") or len(parts) < 3:
        raise errors.IsingLabError(f"bad domain spec {text!r}")
    marked = complex(parts[3], parts[4]) if len(parts) >= 5 else 0j
    return DomainSpec(shape, complex(parts[0], parts[1]), parts[2], marked)


def _parse_diagram(text: str):
    from .patterns import BaseDiagram

    if text in DIAGRAM_PRESETS:
        return BaseDiagram.preset(text)
    offsets = []
    for chunk in text.split(";"):
        x, y = (int(t) for t in chunk.split(","))
        offsets.append((x, y))
    return BaseDiagram(offsets=tuple(offsets))


def _write(out, text: str) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_discretize(args) -> int:
    spec = _parse_domain(args.domain)
    g = discretize(spec, args.delta)
    _write(args.out, g.to_json() + "\n")
    return 0


def cmd_exact(args) -> int:
    from .oracle import ExactMeasure

    spec = _parse_domain(args.domain)
    g = discretize(spec, args.delta)
    meas = ExactMeasure(g, cap=args.cap)
    doc = {
        "command": "exact",
        "domain": args.domain,
        "delta": args.delta,
        "faces": len(g.faces),
        "Z": meas.Z,
        "magnetization": meas.spin_product([g.marked_face]),
    }
    _write(args.out, json.dumps(doc, indent=1) + "\n")
    return 0


def cmd_hm(args) -> int:
    from .slitplane import hm_closed_form, hm_recursion

    if args.k == 0 and args.s >= 0:
        value = hm_recursion(args.s)
    else:
        value = hm_closed_form(args.s, args.k)
    _write(args.out, f"{value!r}\n")
    return 0


def cmd_observable(args) -> int:
    from .lattice import OrientedPoint, principal_sqrt, edge_direction
    from .observables import ObservableKernel

    spec = _parse_domain(args.domain)
    g = discretize(spec, args.delta)
    src = tuple(int(t) for t in args.source.split(","))
    if src not in g.edges:
        raise errors.IsingLabError(f"{src} is not a medial vertex")
    ker = ObservableKernel(g, monodromy=args.monodromy)
    p = OrientedPoint(src, principal_sqrt(edge_direction(g.edges[src])))
    field = ker.field_values(p)
    lines = ["# isinglab observable v1", "x,y,re,im"]
    for q in sorted(field.values):
        v = field.values[q]
        lines.append(f"{q[0]},{q[1]},{v.real!r},{v.imag!r}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_pattern_prob(args) -> int:
    from .patterns import pattern_distribution

    spec = _parse_domain(args.domain)
    g = discretize(spec, args.delta)
    diagram = _parse_diagram(args.diagram)
    sensitive = args.sigma_a is not None
    dist = pattern_distribution(
        g, diagram, mode=args.mode, sensitive=sensitive, exact_cap=args.cap
    )
    lines = [
        "# isinglab pattern-prob v1 "
        + json.dumps(
            {
                "domain": args.domain,
                "delta": args.delta,
                "diagram": args.diagram,
                "mode": args.mode,
                "sigma_a": args.sigma_a,
            }
        ),
        "pattern_bits,sigma_a,probability",
    ]
    n = dist["span"].n
    for bits in range(1 << n):
        if sensitive:
            key = "plus" if args.sigma_a > 0 else "minus"
            lines.append(f"{bits},{args.sigma_a:+d},{float(dist[key][bits])!r}")
        else:
            lines.append(f"{bits},0,{float(dist['symmetric'][bits])!r}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_sweep(args) -> int:
    from .convergence import ExperimentSpec, fit_exponent, run_sweep

    spec = ExperimentSpec.from_config(args.config)
    res = run_sweep(spec)
    diffs = [p - res.p_infinity for p in res.probabilities]
    fit = fit_exponent(res.deltas, diffs)
    base = args.out or "sweep"
    res.to_csv(base + ".csv")
    summary = {
        "config": vars(spec) | {"center": str(spec.center), "marked_point": str(spec.marked_point)},
        "p_infinity": res.p_infinity,
        "p_infinity_err": res.p_infinity_err,
        "alpha_fit": fit.alpha,
        "amplitude": fit.amplitude,
        "loo_spread": fit.loo_spread,
        "expected_alpha": res.alpha,
        "pass": abs(fit.alpha - res.alpha) < (0.1 if res.alpha == 1.0 else 0.02),
    }
    with open(base + ".json", "w") as fh:
        json.dump(summary, fh, indent=1)
    return 0 if summary["pass"] else 3


def cmd_mc(args) -> int:
    from .mc import glauber_run, results_to_csv

    spec = _parse_domain(args.domain)
    g = discretize(spec, args.delta)
    est = {
        "magnetization": lambda s: s.spin_at(g.marked_face),
        "magnetization_rb": lambda s: s.conditional_spin_at(g.marked_face),
        "flip_rate": lambda s: s.flip_probability_at(g.marked_face),
    }
    res = glauber_run(g, steps=args.steps, seed=args.seed, estimators=est)
    if args.out:
        results_to_csv(res, args.out)
    else:
        for name, r in sorted(res.items()):
            print(f"{name}: {r['mean']!r} +- {r['stderr']!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="isinglab",
        description="Critical planar Ising spin-pattern laboratory",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discretize", help="build a domain graph and emit JSON")
    p.add_argument("--domain", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("exact", help="brute-force partition function and magnetization")
    p.add_argument("--domain", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--cap", type=int, default=24)
    p.add_argument("--out")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("hm", help="slit-plane harmonic measure value")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hm)

    p = sub.add_parser("observable", help="two-point observable field as CSV")
    p.add_argument("--domain", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--source", required=True, help="medial vertex x,y")
    p.add_argument("--monodromy", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_observable)

    p = sub.add_parser("pattern-prob", help="full pattern distribution as CSV")
    p.add_argument("--domain", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--diagram", default="cross")
    p.add_argument("--sigma-a", dest="sigma_a", type=int, choices=(-1, 1))
    p.add_argument("--mode", choices=("pfaffian", "exact-oracle"), default="pfaffian")
    p.add_argument("--cap", type=int, default=24)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pattern_prob)

    p = sub.add_parser("sweep", help="mesh sweep with exponent fit")
    p.add_argument("--config", required=True, help="key=value config file")
    p.add_argument("--out", help="output basename (.csv/.json)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc", help="Glauber Monte Carlo estimators")
    p.add_argument("--domain", required=True)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (errors.NotConverged, errors.NotConverging, errors.SeriesNotConverged,
            errors.QuadratureNotConverged, errors.ResidualTooLarge) as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 3
    except (errors.IsingLabError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
