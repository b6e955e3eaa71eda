"""Command-line front end: ``ppszlab <command> [flags]``.

Every output embeds the validated run configuration, the seed and the package
version. The thread count is excluded from the embedded configuration because
outputs are identical for every thread count.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _jsonable(o):
    if is_dataclass(o):
        return _jsonable(asdict(o))
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple, set, frozenset)):
        items = sorted(o) if isinstance(o, (set, frozenset)) else o
        return [_jsonable(v) for v in items]
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, np.generic):
        return o.item()
    return o


def _config(args) -> dict:
    skip = {"func", "threads", "output"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _envelope(args, result) -> dict:
    return {"config": _config(args), "seed": getattr(args, "seed", None), "version": __version__, "result": result}


def _emit(args, text: str) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, result) -> None:
    _emit(args, json.dumps(_jsonable(_envelope(args, result)), indent=2, sort_keys=True) + "\n")


def _emit_csv(args, header, rows) -> None:
    buf = io.StringIO()
    buf.write(f"# {json.dumps(_jsonable({'config': _config(args), 'seed': getattr(args, 'seed', None), 'version': __version__}), sort_keys=True)}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    _emit(args, buf.getvalue())


def _load(path: str, normalize: bool = True):
    from .formula import normalize_all_ones, parse_dimacs

    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    F = parse_dimacs(p.read_bytes())
    return normalize_all_ones(F) if normalize else F


def _sampler(args, labels=None):
    from .dist import UniformSampler, UnivariateSampler, get_gamma

    if args.gamma == "uniform" or args.epsilon == 0:
        return UniformSampler()
    return UnivariateSampler(get_gamma(args.gamma), args.epsilon, labels)


# ------------------------------------------------------------------ commands

def cmd_gen(args):
    from .formula import generate_unique_instance, write_dimacs

    g = generate_unique_instance(args.n, args.k, args.density, args.seed)
    if args.format == "json":
        _emit_json(args, {"n": g.formula.n, "k": g.formula.k, "attempts": g.attempts,
                          "clauses": [list(c) for c in g.formula.clauses], "unique_solution": [1] * g.formula.n})
    else:
        _emit(args, write_dimacs(g.formula, [f"ppszlab {__version__}", f"seed {args.seed}"]))
    return EXIT_OK


def cmd_solve(args):
    from .ppsz import success_probability_mc

    F = _load(args.file)
    est = success_probability_mc(F, args.w, _sampler(args), args.trials, args.seed, args.threads)
    _emit_json(args, {"n": F.n, "success_mean": est.mean, "stderr": est.stderr, "trials": est.trials,
                      "forced_mean": est.forced_mean})
    return EXIT_OK


def cmd_forced(args):
    from .ppsz import forced_vector, permutation_from_placement, trial_rng

    F = _load(args.file)
    labels = list(range(1, F.n + 1))
    sampler = _sampler(args)
    counts = np.zeros(F.n)
    totals = []
    for i in range(args.trials):
        order = permutation_from_placement(sampler.sample(trial_rng(args.seed, i), labels), labels)
        fv = np.array(forced_vector(F, order, args.w), dtype=float)
        counts += fv
        totals.append(fv.sum())
    freq = counts / args.trials
    if args.format == "csv":
        _emit_csv(args, ["var", "forced_frequency"], [[v, f"{f:.6f}"] for v, f in zip(labels, freq)])
    else:
        _emit_json(args, {"n": F.n, "trials": args.trials, "forced_frequency": dict(zip(labels, freq.tolist())),
                          "mean_forced": float(np.mean(totals))})
    return EXIT_OK


def cmd_imply(args):
    from .implication import w_implies

    F = _load(args.file, normalize=False)
    ans = w_implies(F, args.w, args.x, args.b, method=args.method, cap=None)
    _emit_json(args, {"implies": ans})
    return EXIT_OK


def cmd_cct(args):
    from .cct import build_cct, mark_canonical

    F = _load(args.file)
    T = mark_canonical(build_cct(F, args.x, args.height), F)
    if args.format == "dot":
        _emit(args, f"// {json.dumps(_jsonable({'config': _config(args), 'version': __version__}), sort_keys=True)}\n"
              + T.to_dot())
    else:
        _emit_json(args, {"nodes": json.loads(T.to_json()), "size": len(T), "height": T.height})
    return EXIT_OK


def cmd_cutprob(args):
    from .cct import build_cct, complete_tree, cut_probability_mc, mark_canonical
    from .gw import q as gw_q

    if args.file:
        F = _load(args.file)
        T = mark_canonical(build_cct(F, args.x, args.height), F)
        ref = None
    else:
        T = complete_tree(args.k, args.height)
        ref = gw_q(args.k, args.r)
    est = cut_probability_mc(T, _sampler(args), args.r, args.trials, args.seed, weak=args.weak)
    _emit_json(args, {"cut_probability": est.mean, "stderr": est.stderr, "trials": est.trials,
                      "tree_size": len(T), "q_reference": ref})
    return EXIT_OK


def cmd_gw(args):
    from .gw import p, q, s

    if args.grid < 2:
        raise UsageError("--grid must be >= 2")
    rs = np.linspace(0.0, 1.0, args.grid)
    rows = [[f"{r:.10g}", f"{q(args.k, float(r)):.12g}", f"{p(args.k, float(r)):.12g}"] for r in rs]
    if args.format == "json":
        _emit_json(args, {"s": s(args.k), "table": [{"r": float(a), "Q": float(b), "P": float(c)} for a, b, c in rows]})
    else:
        _emit_csv(args, ["r", "Q", "P"], rows)
    return EXIT_OK


def cmd_dist(args):
    from .dist import GraphShape, get_gamma, kl_graph, kl_univariate, moments, validate_graph, validate_univariate

    spec = get_gamma(args.gamma)
    validate_univariate(spec, args.epsilon)
    out = {"moments": moments(spec), "kl_univariate": kl_univariate(spec, args.epsilon)}
    if args.shape:
        kind, _, t = args.shape.partition(":")
        if kind not in ("path", "cycle") or not t.isdigit():
            raise UsageError("--shape must be path:T or cycle:T")
        G = GraphShape.path(int(t)) if kind == "path" else GraphShape.cycle(int(t))
        validate_graph(G, spec, args.epsilon)
        out["kl_graph_bits"] = kl_graph(G, spec, args.epsilon, "moment")
    _emit_json(args, out)
    return EXIT_OK


def cmd_structure(args):
    from .structure import structure_report

    F = _load(args.file)
    rep = structure_report(F, args.kprime, args.thr, args.height)
    _emit_json(args, rep)
    return EXIT_OK if all(rep.checks.values()) else EXIT_FAIL


def cmd_audit(args):
    from .audit import run_audit

    if not args.all and not args.ids:
        raise UsageError("audit needs --all or --ids")
    try:
        rep = run_audit("all" if args.all else args.ids.split(","))
    except KeyError as e:
        raise UsageError(str(e)) from None
    if args.format == "table":
        _emit(args, rep.table() + "\n")
    else:
        _emit_json(args, rep.to_dict())
    return EXIT_OK if rep.ok else EXIT_FAIL


# ------------------------------------------------------------------ parser

def _pos_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _prob(s):
    v = float(s)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ppszlab", description="PPSZ analysis toolkit.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt=("json",), trials=None):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=_pos_int, default=1)
        p.add_argument("--format", choices=fmt, default=fmt[0])
        p.add_argument("-o", "--output")
        if trials is not None:
            p.add_argument("--trials", type=_pos_int, default=trials)

    def biased(p):
        p.add_argument("--gamma", default="uniform", help="'uniform' or a registered gamma name")
        p.add_argument("--epsilon", type=float, default=0.0)

    p = sub.add_parser("gen", help="generate a uniquely satisfiable instance")
    p.add_argument("--n", type=_pos_int, required=True)
    p.add_argument("--k", type=_pos_int, default=3)
    p.add_argument("--density", type=float, default=5.0)
    common(p, ("dimacs", "json"))
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="Monte Carlo PPSZ success probability")
    p.add_argument("file")
    p.add_argument("--w", type=_pos_int, default=3)
    biased(p)
    common(p, trials=1000)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("forced", help="per-variable Forced frequencies over sampled orders")
    p.add_argument("file")
    p.add_argument("--w", type=_pos_int, default=3)
    biased(p)
    common(p, ("json", "csv"), trials=200)
    p.set_defaults(func=cmd_forced)

    p = sub.add_parser("imply", help="w-implication query")
    p.add_argument("file")
    p.add_argument("--x", type=_pos_int, required=True)
    p.add_argument("--b", type=int, choices=(0, 1), default=1)
    p.add_argument("--w", type=_pos_int, default=3)
    p.add_argument("--method", choices=("guided", "connected", "exhaustive"), default="guided")
    common(p)
    p.set_defaults(func=cmd_imply)

    p = sub.add_parser("cct", help="build a critical clause tree")
    p.add_argument("file")
    p.add_argument("--x", type=_pos_int, required=True)
    p.add_argument("--height", type=int, default=3)
    common(p, ("json", "dot"))
    p.set_defaults(func=cmd_cct)

    p = sub.add_parser("cutprob", help="Monte Carlo cut probability")
    p.add_argument("file", nargs="?")
    p.add_argument("--x", type=_pos_int, default=1)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--height", type=int, default=8)
    p.add_argument("--r", type=_prob, default=0.25)
    p.add_argument("--weak", action="store_true")
    biased(p)
    common(p, trials=10_000)
    p.set_defaults(func=cmd_cutprob)

    p = sub.add_parser("gw", help="tables of Q_r and P_r")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--grid", type=int, default=101)
    common(p, ("csv", "json"))
    p.set_defaults(func=cmd_gw)

    p = sub.add_parser("dist", help="moments and KL reports of a bias law")
    p.add_argument("--gamma", default="main")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--shape", help="path:T or cycle:T")
    common(p)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("structure", help="critical clause graph and sibling graph report")
    p.add_argument("file")
    p.add_argument("--thr", type=float, default=1 / 4678)
    p.add_argument("--kprime", type=_pos_int, default=3)
    p.add_argument("--height", type=int, default=6)
    common(p)
    p.set_defaults(func=cmd_structure)

    p = sub.add_parser("audit", help="constants audit")
    p.add_argument("--all", action="store_true")
    p.add_argument("--ids", help="comma-separated entry ids")
    common(p, ("json", "table"))
    p.set_defaults(func=cmd_audit)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"ppszlab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as e:
        print(f"ppszlab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as e:
        print(f"ppszlab: check failed: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
