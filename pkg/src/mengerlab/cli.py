"""Command-line interface: ``mengerlab <subcommand> [options]``.

Exit codes: 0 on success, 1 on usage errors (usage on stderr), 2 on
computation errors (JSON record ``{"error", "message"}`` on stderr).
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import harness
from .beta import ScaleGrid, beta_table
from .construction import (
    StoppingParams,
    build_graph,
    build_stopping_state,
    check_whitney,
    coverage_report,
    whitney_decompose,
)
from .curvature import LocalRegion, curvature_exact, curvature_local, curvature_mc
from .errors import BadParams, MengerLabError
from .integrands import IntegrandKind, symmetrize
from .measure import GENERATOR_KINDS, Ball, generate, read_csv, write_csv


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _dump_json(obj, path):
    text = json.dumps(obj, indent=2, allow_nan=False, default=_json_default)
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_rows(path, header, rows):
    fh, close = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    finally:
        if close:
            fh.close()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _load(args):
    if not os.path.isfile(args.input):
        raise UsageError(f"input file {args.input!r} does not exist")
    return read_csv(args.input, intrinsic_dim=args.n)


def _kind(args, n):
    kind = IntegrandKind(args.integrand, n, args.p)
    return symmetrize(kind) if getattr(args, "symmetrize", False) else kind


def _key_value(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    try:
        v = json.loads(v)
    except json.JSONDecodeError:
        pass
    return k, v


# ----------------------------------------------------------------------
# subcommands


def cmd_generate(args):
    params = dict(args.param or [])
    for key in ("depth", "n_points", "ambient", "n", "lipschitz", "noise", "side", "length"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    mu = generate(args.kind, params, seed=args.seed)
    if args.output in (None, "-"):
        header = [f"x{i}" for i in range(mu.N)] + ["w"]
        _write_rows(None, header, np.column_stack([mu.points, mu.weights]).tolist())
    else:
        write_csv(args.output, mu)
    return 0


def cmd_beta(args):
    mu = _load(args)
    grid = ScaleGrid.parse(args.scales)
    if args.all_points:
        ids = range(mu.size)
    elif args.x_index is not None:
        if not 0 <= args.x_index < mu.size:
            raise BadParams(f"x-index {args.x_index} outside 0..{mu.size - 1}")
        ids = [args.x_index]
    else:
        raise UsageError("beta: one of --x-index or --all-points is required")
    rows = []
    for i in ids:
        for t, b, d, dt, ind in beta_table(mu, mu.points[i], grid, args.k, args.p, args.lam, args.k0):
            rows.append((i, t, b, d, dt, ind))
    _write_rows(args.output, ["point_id", "t", "beta", "delta", "delta_tilde", "indicator"], rows)
    return 0


def cmd_curvature(args):
    mu = _load(args)
    kind = _kind(args, mu.n)
    if args.local:
        try:
            xid, t, kappa = args.local.split(":")
            xid, t, kappa = int(xid), float(t), float(kappa)
        except ValueError as exc:
            raise UsageError("--local expects x_id:t:kappa") from exc
        if not 0 <= xid < mu.size:
            raise BadParams(f"point id {xid} outside 0..{mu.size - 1}")
        val = curvature_local(mu, kind, LocalRegion(mu.points[xid], t, kappa), threads=args.threads)
        out = {"value": val, "stderr": 0.0, "method": "local", "tuples": None}
    elif args.mc:
        out = curvature_mc(mu, kind, samples=args.samples, seed=args.seed, threads=args.threads).to_dict()
    else:
        out = curvature_exact(mu, kind, threads=args.threads).to_dict()
    _dump_json(out, args.output)
    return 0


def cmd_verify(args):
    exp = args.experiment
    if exp == "contrast":
        if args.config:
            with open(args.config) as fh:
                cfg = json.load(fh)
        else:
            cfg = {
                "measures": {
                    "segment": {"kind": "segment", "n_points": 256},
                    "cantor": {"kind": "four_corner_cantor", "depth": 4},
                },
                "method": "mc",
                "samples": args.samples,
            }
        cfg.setdefault("seed", args.seed)
        cfg.setdefault("threads", args.threads)
        rep = harness.contrast_experiment(cfg)
        rep.setdefault("lhs", None)
        rep.setdefault("rhs", None)
        rep.setdefault("empirical_C", None)
        _dump_json(rep, args.output)
        return 0
    if args.input is None:
        raise UsageError(f"verify --experiment {exp} needs --input")
    mu = _load(args)
    if not 0 <= args.x_index < mu.size:
        raise BadParams(f"x-index {args.x_index} outside 0..{mu.size - 1}")
    if exp == "pointwise":
        x = mu.points[args.x_index]
        rep = harness.verify_pointwise_bound(mu, args.integrand, args.p, x, args.t, args.k, args.k1, args.lam)
        out = rep.to_dict()
    elif exp == "global":
        grid = ScaleGrid.parse(args.scales) if args.scales else None
        rep = harness.verify_global_bound(mu, args.integrand, args.p, args.k, args.k0, args.lam, grid,
                                          threads=args.threads)
        out = rep.to_dict()
    else:
        out = harness.simplex_search_check(mu, Ball(mu.points[args.x_index], args.t), args.lam)
        out.setdefault("lhs", None)
        out.setdefault("rhs", None)
        out.setdefault("empirical_C", None)
        out.setdefault("tables", [])
    _dump_json(out, args.output)
    return 0


def _state(args):
    mu = _load(args)
    scales = None
    if args.scales:
        scales = ScaleGrid.parse(args.scales).values()
    params = StoppingParams(epsilon=args.epsilon, alpha=args.alpha, k=args.k,
                            lambda_delta=args.lam, scales=scales, threads=args.threads)
    return mu, build_stopping_state(mu, params)


def cmd_construct(args):
    mu, st = _state(args)
    cubes = whitney_decompose(st)
    graph = build_graph(st, cubes)
    chk = check_whitney(st, cubes)
    state = st.to_dict()
    state["whitney"] = {
        "cubes": [q.to_dict() for q in cubes],
        "bound_violations": chk.bound_violations,
        "comparability_violations": chk.comparability_violations,
        "neighbour_count_violations": chk.neighbour_count_violations,
        "max_neighbours": chk.max_neighbours,
    }
    state["graph"] = {
        "balls": [
            {"center": b.ball.center.tolist(), "radius": b.ball.radius, "point_id": b.point_index,
             "inflated": b.inflated}
            for b in graph.balls
        ],
        "lipschitz_estimate": graph.lipschitz_estimate(seed=args.seed),
        "z_lipschitz": graph.z_lipschitz(),
        "coverage": coverage_report(None, graph, args.tol).to_dict(),
    }
    if args.output_state:
        _dump_json(state, args.output_state)
    else:
        _dump_json(st.summary() | {"cubes": len(cubes)}, None)
    if args.output_graph:
        rows = graph.export_grid(args.grid_points)
        n = st.n
        header = [f"u{i}" for i in range(n)] + [f"A{i}" for i in range(rows.shape[1] - n)]
        _write_rows(args.output_graph, header, rows.tolist())
    return 0


def cmd_classify(args):
    mu, st = _state(args)
    rows = []
    for i in range(mu.size):
        s = st.s_min[i]
        rows.append((i, str(st.labels[i]), float(st.h[i]), float(st.d[i]),
                     float(s) if math.isfinite(s) else "inf"))
    _write_rows(args.output, ["point_id", "label", "h", "d", "s_min"], rows)
    return 0


# ----------------------------------------------------------------------
# parser


def _add_input(p, required=True):
    p.add_argument("--input", required=required, help="point CSV (x0,...,x{N-1}[,w])")
    p.add_argument("--n", type=int, default=1, help="intrinsic dimension n (default 1)")


def _add_integrand(p):
    p.add_argument("--integrand", default="k1", type=str.upper,
                   choices=["K1", "K2", "K3", "K4", "K5", "K6"])
    p.add_argument("--p", type=float, default=None, help="exponent (default: scale-invariant one)")


def _add_stopping(p):
    _add_input(p)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--k", type=float, default=4.0)
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="density threshold (default: built-in formula)")
    p.add_argument("--scales", default=None, help="min:max:count in normalized units")
    p.add_argument("--output", default=None)


def build_parser():
    ap = _Parser(prog="mengerlab", description="Menger curvature and beta-number toolkit")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads (default: $MENGERLAB_THREADS or 1)")
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("generate", parents=[common], help="write a generated measure as CSV")
    g.add_argument("--kind", required=True, choices=GENERATOR_KINDS)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--depth", type=int)
    g.add_argument("--n-points", dest="n_points", type=int)
    g.add_argument("--ambient", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--lipschitz", type=float)
    g.add_argument("--noise", type=float)
    g.add_argument("--side", type=float)
    g.add_argument("--length", type=float)
    g.add_argument("--param", action="append", type=_key_value, help="extra key=value parameter")
    g.add_argument("--output", default=None)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("beta", parents=[common], help="beta numbers over a scale grid")
    _add_input(b)
    sel = b.add_mutually_exclusive_group()
    sel.add_argument("--x-index", type=int)
    sel.add_argument("--all-points", action="store_true")
    b.add_argument("--scales", required=True, help="min:max:count")
    b.add_argument("--k", type=float, default=4.0)
    b.add_argument("--p", type=float, default=2.0)
    b.add_argument("--lambda", dest="lam", type=float, default=0.01)
    b.add_argument("--k0", type=float, default=2.0)
    b.add_argument("--output", default=None)
    b.set_defaults(func=cmd_beta)

    c = sub.add_parser("curvature", parents=[common], help="integral Menger curvature")
    _add_input(c)
    _add_integrand(c)
    c.add_argument("--symmetrize", action="store_true")
    mode = c.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--mc", action="store_true")
    mode.add_argument("--local", help="x_id:t:kappa")
    c.add_argument("--samples", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output", default=None)
    c.set_defaults(func=cmd_curvature)

    v = sub.add_parser("verify", parents=[common], help="inequality experiments")
    v.add_argument("--experiment", required=True, choices=["pointwise", "global", "contrast", "simplex"])
    _add_input(v, required=False)
    _add_integrand(v)
    v.add_argument("--x-index", type=int, default=0)
    v.add_argument("--t", type=float, default=0.25)
    v.add_argument("--k", type=float, default=4.0)
    v.add_argument("--k0", type=float, default=2.0)
    v.add_argument("--k1", type=float, default=8.0)
    v.add_argument("--lambda", dest="lam", type=float, default=0.01)
    v.add_argument("--scales", default=None, help="min:max:count")
    v.add_argument("--config", default=None, help="JSON config for the contrast experiment")
    v.add_argument("--samples", type=int, default=100_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--output", default=None)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("construct", parents=[common], help="stopping-time construction and graph map")
    _add_stopping(s)
    s.add_argument("--output-state", default=None)
    s.add_argument("--output-graph", default=None)
    s.add_argument("--grid-points", type=int, default=400)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_construct)

    k = sub.add_parser("classify", parents=[common], help="per-point partition labels")
    _add_stopping(k)
    k.set_defaults(func=cmd_classify)
    return ap


def run(argv=None):
    """Run the CLI and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except MengerLabError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 2
    except (OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
