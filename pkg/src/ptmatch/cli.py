"""Command-line front end.

Subcommands cover the full workflow: generate benchmark instances, dump
signatures, build candidate matrices, extract and refine matchings, run
the whole pipeline, sweep parameter grids, render figures from sweep
output, and run structural diagnostics.

Global flags may appear before the subcommand or after it; a key=value
config file can supply any flag's value, and explicit flags win.  Exit
codes: 0 success, 2 parameter error, 3 I/O or data-format error.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .comparison import comparison_matrix
from .errors import DataFormatError, ParameterError
from .fileio import (
    INSTANCE_FILE,
    read_config,
    read_edge_list,
    read_instance,
    read_matching,
    write_candidate_rows,
    write_instance,
    write_matching,
    write_provenance,
    write_signature_dump,
)
from .model import (
    STREAM_INDEX_SET,
    STREAM_PARENT,
    ModelParams,
    Permutation,
    estimate_edge_probability,
    named_stream,
    overlap_fraction,
    sample_instance,
    sample_pair_graph,
)
from .pipeline import PipelineParams, default_slack, default_width, match_almost_exact, match_exact
from .refinement import RefineParams, default_epsilon, refine_matching
from .signatures import SignatureEngine, default_depth
from .sweep import SweepSpec, run_sweep
from .validation import (
    TypicalityParams,
    class_overlap_stats,
    class_size_bound_rate,
    typicality_report,
)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"expected a boolean, got {text!r}")


def _list_of(converter):
    def parse(text: str):
        items = [t for t in text.split(",") if t.strip()]
        if not items:
            raise ParameterError("expected a comma-separated list")
        return tuple(converter(t.strip()) for t in items)

    return parse


_list_int = _list_of(int)
_list_float = _list_of(float)


def _add_global_flags(parser, root: bool) -> None:
    kw = {} if root else {"default": argparse.SUPPRESS}
    parser.add_argument("--seed", type=int, help="base RNG seed",
                        **({"default": 0} if root else kw))
    parser.add_argument("--threads", type=int, help="worker count",
                        **({"default": 1} if root else kw))
    parser.add_argument("--out", type=str, help="output path", **kw)
    parser.add_argument("--config", type=str, help="key=value defaults file", **kw)


def _resolve_p(args, *graphs) -> float:
    if getattr(args, "p", None) is not None:
        return args.p
    if getattr(args, "estimate_p", False):
        if len(graphs) == 2:
            return estimate_edge_probability(graphs[0], graphs[1])
        g = graphs[0]
        pairs = g.n * (g.n - 1) // 2
        return g.edge_count / pairs if pairs else 0.0
    raise ParameterError("p is required unless --estimate-p is given")


def _load_truth(path) -> Permutation:
    import json

    if os.path.isdir(path):
        path = os.path.join(path, INSTANCE_FILE)
    try:
        with open(path, "r", encoding="ascii") as fh:
            payload = json.load(fh)
        return Permutation(np.array(payload["permutation"], dtype=np.int64))
    except (json.JSONDecodeError, KeyError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"{path}: cannot read truth permutation ({exc})") from exc


def _pipeline_params(args, p, estimate_p: bool = False) -> PipelineParams:
    return PipelineParams(
        p=p,
        m=getattr(args, "m", None),
        w=getattr(args, "w", None),
        slack=getattr(args, "slack", None),
        epsilon=getattr(args, "epsilon", None),
        rounds=getattr(args, "rounds", None),
        seed=args.seed,
        estimate_p=estimate_p,
        refine_policy=getattr(args, "policy", "extend"),
        threads=args.threads,
    )


def _report_truth(matching, truth_path) -> None:
    truth = _load_truth(truth_path)
    ov = overlap_fraction(matching.assign, truth)
    wrong = int((matching.assign != truth.forward).sum())
    print(f"overlap {ov:.6f} mismatches {wrong}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> None:
    params = ModelParams(n=args.n, p=args.p, alpha=args.alpha)
    perm = Permutation(np.arange(args.n, dtype=np.int64)) if args.identity_perm else None
    instance = sample_instance(params, args.seed, perm=perm)
    paths = write_instance(args.out or ".", instance)
    print(f"wrote {paths['instance']} {paths['obs']} {paths['ref']}")


def cmd_signatures(args) -> None:
    g = read_edge_list(args.graph)
    p = _resolve_p(args, g)
    m = args.m if args.m is not None else default_depth(g.n)
    roots = args.roots if args.roots is not None else tuple(range(g.n))
    for r in roots:
        if not 0 <= r < g.n:
            raise ParameterError(f"root {r} out of range")
    engine = SignatureEngine(g, g.n, p, m)
    out = args.out or "signatures.txt"
    write_signature_dump(out, ((r, engine.signature(r)) for r in roots))
    print(f"wrote {out} ({len(roots)} vertices, depth {m})")


def _comparison_from_args(args, g_obs, g_ref):
    p = _resolve_p(args, g_obs, g_ref)
    n = g_obs.n
    m = args.m if args.m is not None else default_depth(n)
    w = args.w if args.w is not None else default_width(n)
    w = min(w, 1 << (m - 1))
    slack = args.slack if args.slack is not None else default_slack(n)
    stream = named_stream(args.seed, STREAM_INDEX_SET)
    stats: dict = {}
    matrix, index_set = comparison_matrix(
        g_obs, g_ref, n, p, m, w, slack, stream, stats_out=stats)
    return matrix, index_set, stats


def cmd_compare(args) -> None:
    g_obs = read_edge_list(args.g_pi)
    g_ref = read_edge_list(args.g_prime)
    matrix, index_set, stats = _comparison_from_args(args, g_obs, g_ref)
    out = args.out or "candidates.txt"
    write_candidate_rows(matrix, out)
    mean_row = matrix.nnz() / matrix.n if matrix.n else 0.0
    print(f"wrote {out} (2w={2 * index_set.w} keys, clamped={index_set.clamped}, "
          f"mean row weight {mean_row:.3f}, "
          f"empty-support rows {stats.get('empty_rows', 0)} "
          f"cols {stats.get('empty_cols', 0)})")


def _run_matcher(args, exact: bool) -> None:
    g_obs = read_edge_list(args.g_pi)
    g_ref = read_edge_list(args.g_prime)
    p = None if args.estimate_p else _resolve_p(args, g_obs, g_ref)
    params = _pipeline_params(args, p, estimate_p=args.estimate_p)
    runner = match_exact if exact else match_almost_exact
    matching, prov = runner(g_obs, g_ref, params)
    out = args.out or "matching.txt"
    write_matching(matching, out)
    write_provenance(out + ".provenance", prov)
    print(f"wrote {out} and {out}.provenance "
          f"(candidates {prov.candidate_entries}, peeled {prov.peeled})")
    if args.truth:
        _report_truth(matching, args.truth)


def cmd_match(args) -> None:
    _run_matcher(args, exact=False)


def cmd_run(args) -> None:
    _run_matcher(args, exact=True)


def cmd_refine(args) -> None:
    g_obs = read_edge_list(args.g_pi)
    g_ref = read_edge_list(args.g_prime)
    initial = read_matching(args.matching)
    if initial.n != g_obs.n:
        raise ParameterError("matching size does not match graphs")
    p = _resolve_p(args, g_obs, g_ref)
    epsilon = args.epsilon if args.epsilon is not None else default_epsilon(g_obs.n, p)
    params = RefineParams(n=g_obs.n, p=p, epsilon=epsilon, rounds=args.rounds)
    truth = _load_truth(args.truth) if args.truth else None

    def report(info) -> None:
        line = f"round {info.round_index}: assigned {info.assigned}"
        if truth is not None:
            wrong = int((info.matching.assign != truth.forward).sum())
            line += f" mismatches {wrong}"
        print(line)

    refined = refine_matching(g_obs, g_ref, initial, params,
                              policy=args.policy, on_round=report)
    out = args.out or "matching_refined.txt"
    write_matching(refined, out)
    print(f"wrote {out}")
    if truth is not None:
        print(f"final mismatches {int((refined.assign != truth.forward).sum())}")


def cmd_sweep(args) -> None:
    spec = SweepSpec(
        ns=args.ns,
        np_mults=args.np_mults,
        alphas=args.alphas,
        ms=args.ms if args.ms is not None else (None,),
        ws=args.ws if args.ws is not None else (None,),
        slacks=args.slacks if args.slacks is not None else (None,),
        epsilons=args.epsilons if args.epsilons is not None else (None,),
        trials=args.trials,
        base_seed=args.base_seed if args.base_seed is not None else args.seed,
    )
    out = args.out or "sweep.csv"
    rows = run_sweep(spec, out, threads=args.threads)
    failed = sum(1 for r in rows if r.get("error"))
    print(f"wrote {out} ({len(rows)} rows, {failed} with errors)")


def cmd_diagnose(args) -> None:
    if args.instance:
        instance = read_instance(args.instance)
    else:
        if args.n is None or args.p is None:
            raise ParameterError("diagnose needs --instance or --n plus --p")
        mp = ModelParams(n=args.n, p=args.p, alpha=args.alpha)
        instance = sample_instance(mp, args.seed)
    mp = instance.params
    parent = sample_pair_graph(mp.n, mp.q, named_stream(instance.seed, STREAM_PARENT))
    tp = TypicalityParams(m=args.m, kappa=args.kappa,
                          degree_factor=args.degree_factor,
                          deviation=args.deviation)
    vertices = np.arange(mp.n if args.limit is None else min(args.limit, mp.n))
    report = typicality_report(parent, tp, mp.n, mp.q, vertices=vertices)
    out = args.out or "diagnostics.csv"
    names = ["tree", "degree_cap", "sphere_growth",
             "high_degree_mass", "upward_band", "downward_band"]
    typical = report.typical_mask()
    with open(out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex"] + names + ["typical"])
        for k, v in enumerate(report.vertices):
            flags = [getattr(report, nm)[k] for nm in names]
            writer.writerow([int(v)] + ["true" if f else "false" for f in flags]
                            + ["true" if typical[k] else "false"])
    print(f"wrote {out}")
    print(f"fraction typical {report.fraction_typical:.4f} "
          f"over {len(report.vertices)} vertices")
    obeying, tested = class_size_bound_rate(
        instance.g_ref, mp.n, mp.p, args.m, vertices=vertices)
    rate = obeying / tested if tested else float("nan")
    print(f"class-size bound rate {rate:.4f} ({obeying}/{tested} tree-ball vertices)")
    stats = class_overlap_stats(instance, args.m, args.kappa, vertices=vertices)
    good, eligible = stats.rate_above_reference(tree_only=True)
    print(f"min class overlap median {stats.median_min_overlap():.2f} "
          f"reference {stats.reference:.2f} "
          f"tree-ball vertices at/above reference {good}/{eligible}")


def cmd_report(args) -> None:
    from .report import render_report

    paths = render_report(args.csv, args.out)
    for path in paths:
        print(f"wrote {path}")


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ptmatch",
        description="Recover the hidden vertex correspondence between two "
                    "correlated random graphs.")
    _add_global_flags(parser, root=True)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        _add_global_flags(sp, root=False)
        sp.set_defaults(func=func)
        return sp

    sp = command("generate", cmd_generate, "sample a correlated instance")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--identity-perm", action="store_true",
                    help="fix the hidden relabeling to the identity")

    sp = command("signatures", cmd_signatures, "dump partition-tree signatures")
    sp.add_argument("graph", help="edge-list file")
    sp.add_argument("--p", type=float)
    sp.add_argument("--estimate-p", action="store_true")
    sp.add_argument("--m", type=int)
    sp.add_argument("--roots", type=_list_int, help="comma-separated vertex ids")

    def matcher_flags(sp, with_refine):
        sp.add_argument("g_pi", help="shuffled child edge list")
        sp.add_argument("g_prime", help="reference child edge list")
        sp.add_argument("--p", type=float)
        sp.add_argument("--estimate-p", action="store_true")
        sp.add_argument("--m", type=int)
        sp.add_argument("--w", type=int)
        sp.add_argument("--slack", type=float)
        if with_refine:
            sp.add_argument("--epsilon", type=float)
            sp.add_argument("--rounds", type=int)
            sp.add_argument("--policy", choices=("extend", "keep"), default="extend")
        sp.add_argument("--truth", type=str,
                        help="instance.json (or its directory) with the hidden truth")

    sp = command("compare", cmd_compare, "emit the candidate matrix")
    matcher_flags(sp, with_refine=False)

    sp = command("match", cmd_match, "compare and greedily peel a matching")
    matcher_flags(sp, with_refine=False)

    sp = command("run", cmd_run, "full pipeline: compare, peel, refine")
    matcher_flags(sp, with_refine=True)

    sp = command("refine", cmd_refine, "refine an existing matching")
    sp.add_argument("g_pi")
    sp.add_argument("g_prime")
    sp.add_argument("matching", help="matching file to start from")
    sp.add_argument("--p", type=float)
    sp.add_argument("--estimate-p", action="store_true")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--rounds", type=int)
    sp.add_argument("--policy", choices=("extend", "keep"), default="extend")
    sp.add_argument("--truth", type=str)

    sp = command("sweep", cmd_sweep, "run a parameter grid")
    sp.add_argument("--ns", type=_list_int, required=True)
    sp.add_argument("--np-mults", type=_list_float, required=True,
                    help="mean degree as multiples of ln n")
    sp.add_argument("--alphas", type=_list_float, required=True)
    sp.add_argument("--ms", type=_list_int)
    sp.add_argument("--ws", type=_list_int)
    sp.add_argument("--slacks", type=_list_float)
    sp.add_argument("--epsilons", type=_list_float)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--base-seed", type=int)

    sp = command("diagnose", cmd_diagnose, "per-vertex structural diagnostics")
    sp.add_argument("--instance", type=str, help="directory written by generate")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--m", type=int, default=2)
    sp.add_argument("--kappa", type=float, default=0.3)
    sp.add_argument("--degree-factor", type=float, default=10.0)
    sp.add_argument("--deviation", type=float, default=0.1)
    sp.add_argument("--limit", type=int, help="diagnose only the first L vertices")

    sp = command("report", cmd_report, "render figures from a sweep CSV")
    sp.add_argument("csv", help="sweep CSV file")

    return parser


def _collect_converters(parser) -> dict:
    converters: dict = {}
    stack = [parser]
    while stack:
        current = stack.pop()
        for action in current._actions:
            if isinstance(action, argparse._SubParsersAction):
                stack.extend(action.choices.values())
                continue
            if not action.option_strings or action.dest in ("help", "config"):
                continue
            if action.nargs == 0:
                converters[action.dest] = _parse_bool
            else:
                converters[action.dest] = action.type or str
    return converters


def _prescan_config(argv) -> str | None:
    for k, token in enumerate(argv):
        if token == "--config":
            if k + 1 >= len(argv):
                raise ParameterError("--config needs a path")
            return argv[k + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def _install_defaults(parser, part) -> None:
    if not part:
        return
    parser.set_defaults(**part)
    for action in parser._actions:
        if action.dest in part:
            action.required = False


def apply_config(parser, path) -> None:
    """Install config values as parser defaults; typed flags still win.

    Subparsers parse into a fresh namespace and copy it over the root one,
    so a value for a subcommand flag has to be installed on the subparser
    that owns it.  Flags that exist on the root parser (the global ones)
    are installed only there, otherwise the config would override a global
    flag typed before the subcommand.
    """
    converters = _collect_converters(parser)
    values = read_config(path, allowed=converters)
    converted = {k: converters[k](v) for k, v in values.items()}
    root_dests = {a.dest for a in parser._actions}
    _install_defaults(parser, {k: v for k, v in converted.items() if k in root_dests})
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sp in action.choices.values():
                dests = {a.dest for a in sp._actions} - root_dests
                _install_defaults(
                    sp, {k: v for k, v in converted.items() if k in dests})


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        config_path = _prescan_config(argv)
        if config_path is not None:
            apply_config(parser, config_path)
        args = parser.parse_args(argv)
        args.func(args)
        return 0
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
