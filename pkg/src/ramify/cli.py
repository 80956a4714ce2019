"""Command-line surface: check, plan, path, geodesic, verify, reproduce-figures.

Exit codes: 0 exact success, 2 heuristic success, 3 usage errors, 4 input or
runtime errors, 5 verification failures. Identical inputs, seed, and flags
produce byte-identical JSON, CSV, and SVG outputs.
"""

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from . import curves as cv
from . import graphs as gr
from . import measures as ms
from . import quasimetric as qm
from . import svg as svgmod
from . import topology as tp
from . import verify as vf
from .rng import SplitMix64, random_points

EXIT_EXACT = 0
EXIT_HEURISTIC = 2
EXIT_USAGE = 3
EXIT_ERROR = 4
EXIT_FAILED = 5


@dataclass
class RunConfig:
    alpha: float = 0.5
    mode: str = "exact"
    enum_cap: int = ms.ENUM_CAP
    exact_cap: int = tp.EXACT_CAP
    seed: int = 0
    out: str = "."


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _dump_json(doc, path):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _config(args):
    return RunConfig(
        alpha=getattr(args, "alpha", 0.5),
        mode=getattr(args, "mode", "exact"),
        enum_cap=getattr(args, "cap", None) or ms.ENUM_CAP,
        exact_cap=getattr(args, "cap", None) or tp.EXACT_CAP,
        seed=getattr(args, "seed", 0) or 0,
        out=getattr(args, "out", None) or ".",
    )


def cmd_check(args):
    q = qm.load_table(args.table)
    violations = qm.check_axioms(q)
    report = {"points": q.n, "violations": [
        {"condition": v["condition"], "where": list(v["where"]),
         "message": v["message"]} for v in violations
    ]}
    if not violations:
        full = qm.relaxation_report(q, n_max=args.n_max)
        d, is_metric = qm.induced_pseudometric(q)
        report.update({
            "sigma": float(full.sigma),
            "witness": list(full.witness_triple) if full.witness_triple else None,
            "sigma_n": [[n, float(s)] for n, s in full.sigma_n],
            "sigma_infinity_estimate": float(full.sigma_infinity_estimate),
            "is_ideal_up_to": full.is_ideal_up_to,
            "induced_pseudometric": [[float(x) for x in row] for row in d],
            "is_metric": is_metric,
        })
    _dump_json(report, args.out)
    return EXIT_EXACT


def cmd_plan(args):
    cfg = _config(args)
    a = ms.load_measure(args.source)
    b = ms.load_measure(args.target)
    res = ms.j_alpha(a, b, cfg.alpha, method=args.method, cap=cfg.enum_cap)
    doc = ms.plan_to_json(res.plan)
    doc["alpha"] = cfg.alpha
    doc["cost"] = res.value
    doc["exact"] = res.exact
    if res.interior_probe_improved is not None:
        doc["interior_probe_improved"] = res.interior_probe_improved
    _dump_json(doc, args.out)
    return EXIT_EXACT if res.exact else EXIT_HEURISTIC


def cmd_path(args):
    cfg = _config(args)
    a = ms.load_measure(args.source)
    b = ms.load_measure(args.target)
    res = tp.optimize_topology(a, b, cfg.alpha, mode=cfg.mode, cap=cfg.exact_cap)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = gr.graph_to_json(res.graph)
    doc["alpha"] = cfg.alpha
    doc["cost"] = res.value
    doc["exact"] = res.exact
    _dump_json(doc, outdir / "path.json")
    (outdir / "path.svg").write_text(svgmod.render_graph(res.graph, cfg.alpha))
    print(f"cost {res.value!r} ({'exact' if res.exact else 'heuristic'}); "
          f"wrote {outdir / 'path.json'} and {outdir / 'path.svg'}")
    return EXIT_EXACT if res.exact else EXIT_HEURISTIC


def cmd_geodesic(args):
    cfg = _config(args)
    g = gr.load_graph(args.graph)
    curve = cv.path_to_curve(g, cfg.alpha)
    arc = cv.arc_reparametrize(curve, cfg.alpha)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    doc = cv.curve_to_json(arc)
    doc["alpha"] = cfg.alpha
    doc["length"] = cv.curve_length(arc, cfg.alpha)
    doc["graph_cost"] = gr.m_alpha(g, cfg.alpha)
    deviation = None
    if args.samples > 0:
        deviation = cv.geodesic_check(
            arc, cfg.alpha, samples=args.samples, seed=cfg.seed,
            cap=cfg.exact_cap,
        )
        doc["geodesic_deviation"] = deviation
        doc["deviation_samples"] = args.samples
        doc["seed"] = cfg.seed
    _dump_json(doc, outdir / "curve.json")
    (outdir / "curve.svg").write_text(
        svgmod.render_curve_animation(arc, cfg.alpha))
    if args.frames:
        ts = [float(t) for t in args.frames.split(",")]
        lo, hi = arc.domain
        snaps = cv.frames(arc, [lo + t * (hi - lo) for t in ts])
        _dump_json(snaps, outdir / "frames.json")
    if deviation is not None:
        print(f"geodesic deviation {deviation!r} over {args.samples} samples")
    return EXIT_EXACT


def cmd_verify(args):
    try:
        result = vf.run_suite(args.suite, args.seed)
    except KeyError as e:
        sys.stderr.write(f"error: {e.args[0]}\n")
        return EXIT_USAGE
    for label, ok, detail in result.checks:
        status = "PASS" if ok else "FAIL"
        extra = f"  [{detail}]" if detail else ""
        print(f"{status}  {result.name}: {label}{extra}")
    return EXIT_EXACT if result.ok else EXIT_FAILED


def cmd_reproduce_figures(args):
    cfg = _config(args)
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    failures = []

    def run_case(tag, points, alpha, n):
        masses = [1.0 / n] * (n - 1)
        masses.append(1.0 - sum(masses))
        a = ms.measure_from_weights(points, masses)
        b = ms.dirac((0.0, 0.0))
        res = tp.optimize_topology(a, b, alpha, mode="heuristic")
        plan_value = ms.j_alpha(a, b, alpha, method="descent").value
        branch = sum(1 for v, p in res.graph.vertices
                     if p not in {q for q, _ in a.atoms}
                     and p != (0.0, 0.0))
        name = f"figure_{tag}.svg"
        (outdir / name).write_text(svgmod.render_graph(res.graph, alpha))
        rows.append({
            "figure": name, "alpha": alpha, "points": n,
            "heuristic_cost": repr(res.value), "plan_cost": repr(plan_value),
            "branch_vertices": branch,
        })
        if alpha < 1.0 and res.value > plan_value + 1e-9:
            failures.append(f"{name}: cost {res.value} above plan {plan_value}")
        return branch

    rng = SplitMix64(cfg.seed)
    square = random_points(rng, 50, ((0.0, 1.0), (0.0, 1.0)))
    branching = {}
    for alpha in (1.0, 0.75, 0.5, 0.25):
        tag = f"a{int(round(alpha * 100)):03d}_50pts"
        branching[alpha] = run_case(tag, square, alpha, 50)
    wide = random_points(rng, 100, ((-2.5, 2.5), (0.0, 1.0)))
    run_case("a085_100pts", wide, 0.85, 100)

    for alpha in (0.5, 0.25):
        if branching[alpha] < 1:
            failures.append(f"no branching at alpha={alpha}")

    with open(outdir / "costs.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=[
            "figure", "alpha", "points", "heuristic_cost", "plan_cost",
            "branch_vertices",
        ])
        writer.writeheader()
        writer.writerows(rows)
    for row in rows:
        print(f"{row['figure']}: alpha={row['alpha']} cost={row['heuristic_cost']} "
              f"branch_vertices={row['branch_vertices']}")
    if failures:
        for f in failures:
            print(f"FAIL {f}", file=sys.stderr)
        return EXIT_FAILED
    print(f"wrote 5 figures and {outdir / 'costs.csv'} (seed {cfg.seed})")
    return EXIT_HEURISTIC


def build_parser():
    p = Parser(prog="ramify",
               description="Quasimetric relaxation analysis and branched "
                           "transport between atomic measures.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="axiom and relaxation report for a distance table")
    c.add_argument("table", help="JSON {labels, table} or CSV with a header row")
    c.add_argument("--n-max", type=int, default=None)
    c.add_argument("--out", default=None, help="report path (default stdout)")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("plan", help="optimal transport plan between two measures")
    c.add_argument("source")
    c.add_argument("target")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--method", choices=("auto", "enumerate", "descent"),
                   default="auto")
    c.add_argument("--cap", type=int, default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_plan)

    c = sub.add_parser("path", help="optimal branched transport path")
    c.add_argument("source")
    c.add_argument("target")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
    c.add_argument("--cap", type=int, default=None)
    c.add_argument("--out", default=".")
    c.set_defaults(func=cmd_path)

    c = sub.add_parser("geodesic", help="measure-space geodesic curve of a path")
    c.add_argument("graph")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--samples", type=int, default=50)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--cap", type=int, default=None)
    c.add_argument("--frames", default=None,
                   help="comma-separated relative times for snapshot export")
    c.add_argument("--out", default=".")
    c.set_defaults(func=cmd_geodesic)

    c = sub.add_parser("verify", help="run a named property suite")
    c.add_argument("suite", help=f"one of {', '.join(sorted(vf.SUITES))}")
    c.add_argument("--seed", type=int, required=True)
    c.set_defaults(func=cmd_verify)

    c = sub.add_parser("reproduce-figures",
                       help="render the random-square branched networks")
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--out", default="figures")
    c.set_defaults(func=cmd_reproduce_figures)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except (qm.MalformedTable, qm.AxiomInconsistency, ms.UnsupportedExponent,
            ms.EnumerationCapExceeded, tp.ExactCapExceeded, gr.CycleError,
            gr.UnknownVertex, ValueError, OSError, json.JSONDecodeError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
