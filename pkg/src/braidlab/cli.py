"""Command-line front end.

Every subcommand writes a table (CSV with a header row) or flat JSON
objects to ``--out`` or stdout.  Exit status: 0 on success, 1 on usage
errors, 2 on numerical failures (bracketing, convergence, structure).
"""

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import csbridge, de, harness, layers, scde
from .codec import FlowSizeDist, encode, read_counters, read_flows, sample_flow_sizes, write_counters, write_flows
from .decode import bp_decode, maxwell_decode, peel_decode
from .errors import BraidlabError, ParameterError
from .graphs import EnsembleParams, ScParams, load_graph, sample_coupled_graph, sample_graph, save_graph

SIG = 12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else ("inf" if math.isinf(v) else f"{float(v):.{SIG}g}")
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isnan(v) or math.isinf(v) else float(f"{v:.{SIG}g}")
    return v


def emit(rows, args):
    """Write a list of flat dicts as CSV or JSON."""
    if args.format == "json":
        objs = [{k: _json_value(v) for k, v in r.items()} for r in rows]
        text = json.dumps(objs[0] if len(objs) == 1 else objs, indent=1) + "\n"
    else:
        buf = io.StringIO()
        if rows:
            wr = csv.writer(buf, lineterminator="\n")
            wr.writerow(rows[0].keys())
            for r in rows:
                wr.writerow([_fmt(v) for v in r.values()])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grid(spec, default_n, lo=0.0, hi=1.0, include_lo=False):
    """``--grid`` is either a point count or a comma-separated list of values."""
    if spec is None:
        spec = str(default_n)
    if "," in spec:
        return [float(t) for t in spec.split(",") if t.strip()]
    n = int(spec)
    if n < 1:
        raise UsageError("--grid must be a positive count or a list of values")
    pts = np.linspace(lo, hi, n + (0 if include_lo else 1))
    return (pts if include_lo else pts[1:]).tolist()


def _need(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m for m in missing))


def _gamma(args):
    if args.gamma is not None:
        return args.gamma
    if args.beta is not None:
        return args.k / args.beta
    raise UsageError("give --gamma or --beta")


def _warn_above_one(value, what):
    if value > 1:
        print(f"warning: {what} = {value:.6g} exceeds 1", file=sys.stderr)


# -- subcommands -------------------------------------------------------------

def cmd_gen_graph(args):
    _need(args, "k", "m0")
    seed = args.seed or 0
    if args.N is not None:
        _need(args, "w")
        kappa = max(1, args.m0 // args.N)
        g = sample_coupled_graph(args.k, _gamma(args), ScParams(args.N, args.w, kappa), seed)
    elif args.beta is not None:
        g = sample_graph(EnsembleParams.from_beta(args.k, args.beta, args.m0), seed)
    else:
        g = sample_graph(EnsembleParams.from_gamma(args.k, _gamma(args), args.m0), seed)
    if not args.out:
        raise UsageError("gen-graph needs --out")
    save_graph(g, args.out, seed=seed)
    print(f"m0={g.m0} m1={g.m1} k={g.k} seed={seed}", file=sys.stderr)


def cmd_encode(args):
    _need(args, "graph")
    g = load_graph(args.graph)
    if args.flows:
        flows = read_flows(args.flows)
    else:
        _need(args, "alpha")
        flows = sample_flow_sizes(FlowSizeDist.power_law(args.alpha), g.m0, args.seed or 0)
        if args.flows_out:
            write_flows(args.flows_out, flows)
    enc = encode(g, flows, args.depth)
    if not args.out:
        raise UsageError("encode needs --out")
    write_counters(args.out, enc.mod)


def cmd_decode(args):
    _need(args, "graph", "counters")
    g = load_graph(args.graph)
    vals = read_counters(args.counters)
    if args.decoder == "bp":
        r = bp_decode(g, vals, args.fmin, args.lmax)
        est, ok = r.estimates, r.converged
    elif args.decoder == "peel":
        r = peel_decode(g, vals, args.fmin, args.lmax)
        est, ok = r.estimates, r.peeled
    else:
        r = maxwell_decode(g, vals, args.fmin, args.seed or 0, args.lmax)
        est = r.estimates
        ok = np.ones(g.m0, bool) if r.status == "unique" else r.known
        print(f"status={r.status}", file=sys.stderr)
    emit([{"flow_id": f, "size": int(est[f]), "decoded": bool(ok[f])} for f in range(g.m0)], args)


def _dist_from_json(d):
    if d is None:
        return FlowSizeDist.power_law(1.5)
    if "alpha" in d:
        return FlowSizeDist.power_law(d["alpha"])
    if "pmf" in d:
        return FlowSizeDist.explicit({int(s): p for s, p in d["pmf"].items()})
    raise UsageError("dist must have 'alpha' or 'pmf'")


def cmd_simulate(args):
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
    for key in ("k", "gamma", "beta", "m0", "trials", "seed", "N", "w", "decoder"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    if args.gamma is not None:
        cfg.pop("beta", None)
    if args.beta is not None:
        cfg.pop("gamma", None)
    if args.lmax is not None:
        cfg["l_max"] = args.lmax
    if args.alpha is not None:
        cfg["dist"] = {"alpha": args.alpha}
    dist = _dist_from_json(cfg.pop("dist", None))
    try:
        conf = harness.SimConfig(dist=dist, **cfg)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    threads = args.threads
    if args.grid:
        rows = harness.ser_sweep(conf, _grid(args.grid, 1), threads)
        out = [{"beta": b, "ser": s, "ci_lo": lo, "ci_hi": hi, "trials": t, "seed": conf.seed} for b, s, lo, hi, t in rows]
    else:
        r = harness.run_ser(conf, threads)
        out = [{"beta": conf.beta if conf.beta is not None else conf.k / conf.gamma, "ser": r.ser,
                "ci_lo": r.ci_lo, "ci_hi": r.ci_hi, "trials": r.trials, "seed": conf.seed}]
    emit(out, args)


def cmd_threshold(args):
    _need(args, "k")
    tol = args.tol or 1e-6
    if args.mode == "beta":
        _need(args, "eps")
        v = de.beta_bp(args.k, args.eps, tol=tol)
        emit([{"quantity": "beta_bp", "value": v, "k": args.k, "eps": args.eps, "tol": tol}], args)
    else:
        g = _gamma(args)
        v = de.eps_bp(args.k, g, tol=tol)
        _warn_above_one(v, "eps_bp")
        emit([{"quantity": "eps_bp", "value": v, "k": args.k, "gamma": g, "tol": tol}], args)


def cmd_cthreshold(args):
    _need(args, "k", "N", "w")
    tol = args.tol or 1e-5
    if args.mode == "beta":
        _need(args, "eps")
        f = scde.modified_beta_threshold if args.modified else scde.beta_bp_coupled
        v = f(args.k, args.eps, args.N, args.w, tol=tol)
        rows = [{"quantity": "beta_bp_coupled", "value": v},
                {"quantity": "beta_c", "value": scde.beta_c(args.k, args.k / v, args.N, args.w)}]
    else:
        g = _gamma(args)
        f = scde.modified_eps_threshold if args.modified else scde.eps_bp_coupled
        v = f(args.k, g, args.N, args.w, tol=tol)
        _warn_above_one(v, "eps_bp_coupled")
        rows = [{"quantity": "eps_bp_coupled", "value": v}]
    for r in rows:
        r.update({"k": args.k, "N": args.N, "w": args.w, "tol": tol, "modified": bool(args.modified)})
    emit(rows, args)


def cmd_exit(args):
    _need(args, "k")
    g = _gamma(args)
    pts = de.ebp_exit_curve(args.k, g, _grid(args.grid, 200, include_lo=True))
    emit([{"x": p.x, "eps": p.eps, "h": p.h} for p in pts], args)


def cmd_cexit(args):
    _need(args, "k", "N", "w")
    g = _gamma(args)
    top = float(de.eps_of_x(1.0, args.k, g))
    eps_grid = _grid(args.grid, 50, 0.0, min(top, 4.0))
    rows = scde.coupled_exit_curve(args.k, g, args.N, args.w, eps_grid)
    emit([{"eps_param": a, "eps": b, "h": c} for a, b, c in rows], args)


def cmd_area(args):
    _need(args, "k")
    g = _gamma(args)
    a = de.area_threshold(args.k, g)
    _warn_above_one(a.eps_bar, "eps_bar")
    p = de.potential_threshold(args.k, g)
    direct, rhs = de.ebp_area(args.k, g)
    emit([{"quantity": "eps_bar", "value": a.eps_bar}, {"quantity": "x_star", "value": a.x_star},
          {"quantity": "potential_threshold", "value": p}, {"quantity": "ebp_area_direct", "value": direct},
          {"quantity": "ebp_area_closed_form", "value": rhs}], args)


def cmd_residual(args):
    _need(args, "k")
    g = _gamma(args)
    eps = args.eps if args.eps is not None else de.area_threshold(args.k, g).eps_bar
    rc = de.residual_ebp_curve(args.k, g, eps, _grid(args.grid, 100))
    if args.curve:
        emit([{"z": z, "eps": e, "h": h} for z, e, h in zip(rc.z, rc.eps, rc.h)], args)
    else:
        emit([{"quantity": "x", "value": rc.x}, {"quantity": "eps", "value": eps},
              {"quantity": "area", "value": rc.area}, {"quantity": "area_closed_form", "value": rc.area_closed_form}], args)


def cmd_maxde(args):
    _need(args, "k", "eps")
    g = _gamma(args)
    s = de.maxwell_de(args.k, g, args.eps, args.delta, tol=args.tol or 1e-13)
    lb = de.maxwell_exit_lower_bound(args.k, g, args.eps)
    emit([{"x0": s.x0, "xstar": s.xstar, "xg": s.xg, "delta": s.delta, "exit_lower_bound": lb}], args)


def cmd_rate(args):
    _need(args, "k", "N", "w")
    g = _gamma(args)
    emit([{"quantity": "design_rate", "value": scde.design_rate(args.k, g, args.N, args.w, args.depth or 1)},
          {"quantity": "beta_c", "value": scde.beta_c(args.k, g, args.N, args.w)},
          {"quantity": "beta", "value": args.k / g}], args)


def cmd_multilayer(args):
    _need(args, "spec", "alpha")
    with open(args.spec) as fh:
        spec = json.load(fh)
    if not isinstance(spec, list) or not spec:
        raise UsageError("layer spec must be a non-empty JSON list of {k, gamma, d}")
    ks = [int(s["k"]) for s in spec]
    gs = [float(s["gamma"]) for s in spec]
    ds = [int(s["d"]) for s in spec]
    N, w = args.N or 1, args.w or 1
    r = layers.multilayer_threshold(ks, gs, N, w, FlowSizeDist.power_law(args.alpha), ds, tol=args.tol or 1e-5)
    rows = [{"layer": 1, "eps_bp": r.layer_thresholds[0], "induced_eps": 2.0 ** -args.alpha, "satisfied": True}]
    for l, (th, ei, ok) in enumerate(zip(r.layer_thresholds[1:], r.induced_eps, r.satisfied), start=2):
        rows.append({"layer": l, "eps_bp": th, "induced_eps": ei, "satisfied": ok})
    for row in rows:
        row["threshold"] = r.threshold
    emit(rows, args)


def cmd_cs_phase(args):
    _need(args, "k", "N", "w")
    taus = _grid(args.grid, 9, 0.0, 0.5) if args.grid else [0.05, 0.1, 0.2]
    taus = [t for t in taus if 0 < t < 1]
    pts = csbridge.phase_transition(args.k, args.N, args.w, taus, tol=args.tol or 1e-4)
    dt = csbridge.read_dt_curve(args.dt) if args.dt else None
    rows = []
    for p in pts:
        row = {"tau": p.tau, "beta_th": p.beta_th, "sparse_bound": csbridge.sparse_bound(p.tau),
               "dense_bound": csbridge.dense_bound(p.tau)}
        if dt is not None:
            row["dt"] = dt(p.tau)
        if p.error:
            print(f"tau={p.tau}: {p.error}", file=sys.stderr)
        rows.append(row)
    emit(rows, args)


COMMANDS = {
    "gen-graph": (cmd_gen_graph, "sample an uncoupled or coupled graph (JSON)"),
    "encode": (cmd_encode, "compute counter values for flow sizes"),
    "decode": (cmd_decode, "decode counters with bp, peel or maxwell"),
    "simulate": (cmd_simulate, "Monte Carlo symbol error rate"),
    "threshold": (cmd_threshold, "uncoupled BP threshold (eps or beta)"),
    "cthreshold": (cmd_cthreshold, "coupled BP threshold (eps or beta)"),
    "exit": (cmd_exit, "EBP EXIT curve points"),
    "cexit": (cmd_cexit, "coupled EBP EXIT curve (midpoint)"),
    "area": (cmd_area, "area and potential thresholds"),
    "residual": (cmd_residual, "residual-graph EBP curve area"),
    "maxde": (cmd_maxde, "Maxwell DE fixed point and EXIT lower bound"),
    "rate": (cmd_rate, "design rate of the coupled ensemble"),
    "multilayer": (cmd_multilayer, "layer-by-layer multilayer threshold"),
    "cs-phase": (cmd_cs_phase, "compressed-sensing phase transition"),
}


def build_parser():
    p = _Parser(prog="braidlab", description="Counter braid analysis and simulation.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--k", type=int)
        s.add_argument("--gamma", type=float)
        s.add_argument("--beta", type=float)
        s.add_argument("--eps", type=float)
        s.add_argument("--alpha", type=float)
        s.add_argument("--N", type=int)
        s.add_argument("--w", type=int)
        s.add_argument("--m0", type=int)
        s.add_argument("--trials", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--grid")
        s.add_argument("--out")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--threads", type=int, default=int(os.environ.get("BRAIDLAB_THREADS", "1")))
        s.add_argument("--lmax", type=int, default=None if name == "simulate" else 1000)
        s.add_argument("--decoder", choices=harness.DECODERS, default=None if name == "simulate" else "bp")
        if name in ("gen-graph", "encode", "decode"):
            s.add_argument("--graph")
        if name in ("encode",):
            s.add_argument("--flows")
            s.add_argument("--flows-out")
        if name in ("encode", "rate"):
            s.add_argument("--depth", type=int)
        if name == "decode":
            s.add_argument("--counters")
            s.add_argument("--fmin", type=int, default=0)
        if name == "simulate":
            s.add_argument("--config")
        if name in ("threshold", "cthreshold"):
            s.add_argument("--mode", choices=("eps", "beta"), default="eps")
        if name == "cthreshold":
            s.add_argument("--modified", action="store_true")
        if name == "residual":
            s.add_argument("--curve", action="store_true")
        if name == "maxde":
            s.add_argument("--delta", type=float, default=0.0)
        if name == "multilayer":
            s.add_argument("--spec")
        if name == "cs-phase":
            s.add_argument("--dt")
    return p


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return 1
        COMMANDS[args.command][0](args)
        return 0
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (ParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BraidlabError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
