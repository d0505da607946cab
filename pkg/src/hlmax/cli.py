"""Command-line front end.

Every subcommand prints a human-readable summary and can optionally write a
JSON report with --out.  Exit codes: 0 = all gating checks passed, 1 = a
gating check failed, 2 = error (bad arguments, unsatisfiable request).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import gridops, lattice, multipliers, search, suite
from .bodies import (isotropic_position, make_ball, parse_body_spec,
                     sigma_invariant)
from .config import load_config
from .reports import margins_to_csv


def _write_json(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, default=str)
        fh.write("\n")


def _finish(args, reports, payload=None, force_code=None):
    """Common tail: print margins, write --out, return an exit code."""
    ok = all(r.passed for r in reports if r.gating)
    for rep in reports:
        print(rep.summary_line())
    if args.out:
        if payload is None:
            payload = {"schema": 1, "reports": [r.to_dict() for r in reports]}
        _write_json(payload, args.out)
        if args.margins_csv:
            margins_to_csv(reports, args.margins_csv)
        print(f"wrote {args.out}")
    if force_code is not None:
        return force_code
    return 0 if ok else 1


def cmd_body(args, cfg):
    body = parse_body_spec(args.spec, args.dim)
    iso = isotropic_position(body, seed=args.seed, n=args.samples,
                             method=args.method)
    print(f"body {body.tag()}  volume={body.volume_exact if body.volume_exact else 'mc'}")
    route = "exact" if iso.exact else "monte-carlo"
    print(f"isotropic position ({route}): L = {iso.L:.6f}"
          + ("" if iso.exact else f" +- {iso.L_std_error:.2g}"))
    with np.printoptions(precision=4, suppress=True):
        print("whitening transform:\n" + str(iso.transform))
    reports = [] if iso.report is None else [iso.report]
    if args.sigma:
        sig, rep = sigma_invariant(iso, seed=args.seed, n=args.samples)
        print(f"max central section estimate: sigma = {sig.sigma:.4f} "
              f"(bracket {sig.sigma / iso.L:.3f} x L)")
        reports.append(rep)
    payload = {"schema": 1, "body": body.tag(), "L": iso.L,
               "L_std_error": iso.L_std_error, "exact_route": iso.exact,
               "transform": iso.transform.tolist(),
               "reports": [r.to_dict() for r in reports]}
    return _finish(args, reports, payload)


def cmd_multiplier_check(args, cfg):
    body = parse_body_spec(args.spec, args.dim)
    iso = isotropic_position(body, seed=args.seed, n=args.samples)
    rep = multipliers.check_multiplier_bounds(
        iso, seed=args.seed, n_xi=args.n_xi, n=args.samples,
        constant=args.constant)
    return _finish(args, [rep])


def cmd_discrete_multiplier(args, cfg):
    body = parse_body_spec(args.spec, args.dim)
    xi = np.array([float(v) for v in args.xi.split(",")])
    if xi.shape != (args.dim,):
        print(f"error: expected {args.dim} comma-separated frequency components",
              file=sys.stderr)
        return 2
    val, count = multipliers.discrete_multiplier(
        body, float(args.t), xi, point_cap=cfg["sampling"]["point_cap"])
    print(f"normalized exponential sum over {count} lattice points at t={args.t:g}:")
    print(f"  value = {val.real:+.8f} {val.imag:+.8f}i   |value| = {abs(val):.8f}")
    if args.dirichlet:
        ref = multipliers.dirichlet_product(float(args.t), xi)
        print(f"  cube reference (product of Dirichlet kernels) = {ref.real:+.8f}")
    if args.out:
        _write_json({"schema": 1, "body": body.tag(), "t": args.t,
                     "xi": xi.tolist(), "value": [val.real, val.imag],
                     "points": count}, args.out)
    return 0


def cmd_grid_maximal(args, cfg):
    body = parse_body_spec(args.spec, args.dim)
    if args.input:
        f = gridops.GridFunction.read_json(args.input)
    else:
        def smooth_field(x):
            sq = np.sum(x * x, axis=-1)
            return np.exp(-sq / 2.0) * (1.0 + 0.2 * np.cos(3.0 * np.sum(x, axis=-1)))

        f = gridops.grid_function(args.dim, args.box, args.spacing,
                                  smooth_field, boundary=args.boundary)
    n0 = int(math.ceil(math.log2(args.t_min)))
    n1 = int(math.floor(math.log2(args.t_max)))
    scales = [t for t in gridops.dyadic_scales(n0, n1)
              if 2 * f.spacing <= t <= f.box / 4.0]
    if not scales:
        print("error: no admissible dyadic scales in [t_min, t_max] for this "
              "grid (need 2h <= t <= box/4)", file=sys.stderr)
        return 2
    out = gridops.maximal(f, body, scales)
    print(f"maximal function over {len(scales)} dyadic scales in "
          f"[{args.t_min:g}, {args.t_max:g}] on a {'x'.join(map(str, f.values.shape))} grid")
    print(f"  max = {np.max(out.values):.6f}  mean = {np.mean(out.values):.6f}")
    if args.out:
        out.write_json(args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_lattice_count(args, cfg):
    body = parse_body_spec(args.spec, args.dim)
    count = lattice.lattice_count(body, float(args.t),
                                  cap=cfg["sampling"]["point_cap"])
    print(f"{count} lattice points in {body.tag()} scaled by t={args.t:g}")
    if args.compare_volume:
        vol = body.volume_exact
        if vol is not None:
            v = vol * float(args.t) ** args.dim
            print(f"  continuum volume {v:.4f}, ratio {count / v:.4f}")
    if args.out:
        _write_json({"schema": 1, "body": body.tag(), "t": args.t,
                     "count": count}, args.out)
    return 0


def cmd_lemma_check(args, cfg):
    reports = []
    if args.lemma in ("count-upper", "all"):
        reports.append(lattice.lemma_count_upper_check(args.dim, float(args.t)))
    if args.lemma in ("halfspace", "all"):
        reports.append(lattice.halfspace_tail_check(args.dim, args.s,
                                                    seed=args.seed))
    if args.lemma in ("cell-decay", "all"):
        reports.append(lattice.cell_intersection_decay_check(
            args.dim, float(args.t), float(args.decay_t), seed=args.seed))
    if args.lemma in ("reverse-count", "all"):
        reports.append(lattice.reverse_count_check(args.dim, float(args.t)))
    if args.lemma in ("chain", "all"):
        reports.append(lattice.comparison_chain_check(args.dim, float(args.t),
                                                      seed=args.seed))
    if not reports:
        print(f"error: unknown lemma {args.lemma!r}", file=sys.stderr)
        return 2
    return _finish(args, reports)


def cmd_norm_search(args, cfg):
    spec = {"space": "lattice", "body": args.spec, "dim": args.dim,
            "t_set": {"kind": args.t_set, "t_max": args.t_max}}
    if args.p == "weak1":
        est = search.estimate_weak11_lower_bound(spec, budget=args.budget,
                                                 seed=args.seed,
                                                 cap=cfg["sampling"]["point_cap"])
    else:
        est = search.estimate_lp_lower_bound(spec, float(args.p),
                                             budget=args.budget, seed=args.seed,
                                             cap=cfg["sampling"]["point_cap"])
    gap = abs(search.recompute_lower_bound(est, cap=cfg["sampling"]["point_cap"])
              - est.lower_bound)
    est.recompute_gap = gap
    print(f"lower bound for p={args.p}: {est.lower_bound:.6f} "
          f"(witness atoms {len(est.witness['positions'])}, recompute gap {gap:.2e})")
    if args.out:
        est.write_json(args.out)
        print(f"wrote {args.out}")
    return 0 if gap < 1e-8 else 1


def cmd_suite(args, cfg):
    code, bundle = suite.run_suite(args.which, cfg, out_prefix=args.out_prefix)
    n_pass = sum(1 for r in bundle["results"] if r["passed"])
    print(f"suite '{args.which}': {n_pass}/{len(bundle['results'])} criteria passed, "
          f"exit code {code}")
    return code


def cmd_plot_data(args, cfg):
    with open(args.bundle) as fh:
        bundle = json.load(fh)
    n = suite.emit_plot_data(bundle, args.kind, args.out)
    print(f"wrote {n} rows of series {args.kind!r} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hlmax",
        description="Averaging and maximal operators over convex symmetric "
                    "bodies: estimators, exact lattice routines, and the "
                    "gating check suite.")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--config", default=None, help="TOML config file")
    p.add_argument("--threads", type=int, default=None,
                   help="cap BLAS threads (best effort)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("spec", help="body spec, e.g. cube, ball, qball:1.5, "
                                         "ellipsoid:auto, ellipsoid:1,2,4, "
                                         "linear:matrix.txt")
            sp.add_argument("--dim", type=int, default=2)
        sp.add_argument("--out", default=None, help="write a JSON report here")
        sp.add_argument("--margins-csv", default=None,
                        help="also write margins as CSV (needs --out)")

    sp = sub.add_parser("body", help="normalize a body to isotropic position")
    common(sp)
    sp.add_argument("--samples", type=int, default=200000)
    sp.add_argument("--method", choices=("auto", "mc"), default="auto")
    sp.add_argument("--sigma", action="store_true",
                    help="also estimate the maximal central section")
    sp.set_defaults(fn=cmd_body)

    sp = sub.add_parser("multiplier-check",
                        help="sample the averaging symbol and test its bounds")
    common(sp)
    sp.add_argument("--samples", type=int, default=20000)
    sp.add_argument("--n-xi", type=int, default=400)
    sp.add_argument("--constant", type=float,
                    default=multipliers.MULTIPLIER_CONSTANT)
    sp.set_defaults(fn=cmd_multiplier_check)

    sp = sub.add_parser("discrete-multiplier",
                        help="exact normalized exponential sum at one frequency")
    common(sp)
    sp.add_argument("--t", type=float, required=True, help="scale")
    sp.add_argument("--xi", required=True, help="comma-separated frequency")
    sp.add_argument("--dirichlet", action="store_true",
                    help="print the cube Dirichlet-product reference")
    sp.set_defaults(fn=cmd_discrete_multiplier)

    sp = sub.add_parser("grid-maximal",
                        help="dyadic maximal function of a sampled grid function")
    common(sp)
    sp.add_argument("--input", default=None,
                    help="grid function JSON (default: built-in smooth test field)")
    sp.add_argument("--box", type=float, default=8.0)
    sp.add_argument("--spacing", type=float, default=1.0 / 16)
    sp.add_argument("--t-min", type=float, default=0.25)
    sp.add_argument("--t-max", type=float, default=2.0)
    sp.add_argument("--boundary", choices=("periodic", "zero"),
                    default="periodic")
    sp.set_defaults(fn=cmd_grid_maximal)

    sp = sub.add_parser("lattice-count", help="exact lattice point count")
    common(sp)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--compare-volume", action="store_true")
    sp.set_defaults(fn=cmd_lattice_count)

    sp = sub.add_parser("lemma-check", help="run one counting lemma check")
    sp.add_argument("lemma", choices=("count-upper", "halfspace", "cell-decay",
                                      "reverse-count", "chain", "all"))
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--t", type=float, default=10.0,
                    help="radius / scale parameter")
    sp.add_argument("--s", type=float, default=0.5,
                    help="half-space offset (halfspace lemma)")
    sp.add_argument("--decay-t", type=float, default=2.0,
                    help="oscillation parameter of the cell-decay lemma")
    sp.add_argument("--out", default=None)
    sp.add_argument("--margins-csv", default=None)
    sp.set_defaults(fn=cmd_lemma_check)

    sp = sub.add_parser("norm-search",
                        help="randomized lower bound for a maximal operator norm")
    common(sp)
    sp.add_argument("--p", default="2", help="exponent, or 'weak1'")
    sp.add_argument("--t-set", choices=("gauge", "euclidean", "integer"),
                    default="gauge")
    sp.add_argument("--t-max", type=float, default=4.0)
    sp.add_argument("--budget", type=int, default=300)
    sp.set_defaults(fn=cmd_norm_search)

    sp = sub.add_parser("suite", help="run the gating criterion suite")
    sp.add_argument("which", nargs="?", default="all",
                    choices=sorted(suite.SUITES))
    sp.add_argument("--out-prefix", default=None,
                    help="write <prefix>.json and <prefix>.margins.csv")
    sp.set_defaults(fn=cmd_suite)

    sp = sub.add_parser("plot-data",
                        help="extract a trend series from a suite bundle")
    sp.add_argument("bundle", help="suite JSON bundle")
    sp.add_argument("kind", help="series name prefix, e.g. lp_lower, ratio")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_plot_data)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            import os

            os.environ[var] = str(args.threads)
    try:
        cfg = load_config(args.config)
    except Exception as exc:  # bad TOML or unknown keys
        print(f"error loading config: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["seed"] = args.seed
    if getattr(args, "seed", None) is None:
        args.seed = cfg["seed"]
    try:
        return args.fn(args, cfg)
    except (ValueError, FileNotFoundError, lattice.CapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
