"""Command-line interface.

Exit codes: 0 success, 1 data or model error, 2 bad flags, 3 order cap exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .aldag import dependence_subtree, subtree_to_dot, to_dot, tree_to_aldag
from .dataset import discretize_numeric_columns, load_csv
from .errors import AldagError, TooManyOrdersError
from .graphs import DEFAULT_ORDER_CAP
from .learner import ALL_ORDERS_LIMIT, Strategy, learn, lv_pipeline
from .sim import ESTIMATORS, SimConfig, results_to_csv, run_grid, timings_to_csv
from .stagedtree import dumps, tree_to_dict

STRATEGIES = ("cmi", "ord1", "ord2", "ord3", "all", "lv")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _write_manifest(path, command, argv, args, inputs, started):
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        "seed": getattr(args, "seed", None),
        "inputs": inputs,
        "version": __version__,
        "wall_time": round(time.perf_counter() - started, 6),
    }
    Path(path).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _parse_order(text: str, names) -> tuple[int, ...]:
    items = [s.strip() for s in text.split(",")]
    index = {n: j for j, n in enumerate(names)}
    order = []
    for item in items:
        if item in index:
            order.append(index[item])
        elif item.isdigit() and 1 <= int(item) <= len(names):
            order.append(int(item) - 1)
        else:
            raise ValueError(f"unknown variable {item!r} in --order")
    if sorted(order) != list(range(len(names))):
        raise ValueError("--order must list every variable exactly once")
    return tuple(order)


def cmd_learn(args, parser, argv) -> int:
    started = time.perf_counter()
    data = load_csv(args.data, delimiter=args.delimiter, has_header=not args.no_header)
    if args.bins is not None:
        data = discretize_numeric_columns(data, args.bins)
    names = data.names
    if args.strategy == "lv":
        if args.order:
            parser.error("--order only applies to --strategy cmi")
        result = lv_pipeline(data, args.k)
    else:
        fixed = None
        if args.order:
            if args.strategy != "cmi":
                parser.error("--order only applies to --strategy cmi")
            try:
                fixed = _parse_order(args.order, names)
            except ValueError as exc:
                parser.error(str(exc))
        strategy = Strategy(
            args.strategy, args.k, fixed_order=fixed, alpha=args.alpha,
            max_sepset=args.max_sepset, order_cap=args.order_cap, all_limit=args.all_limit,
        )
        result = learn(data, strategy, jobs=args.jobs)

    aldag = tree_to_aldag(result.tree, names)
    counts = aldag.label_counts()
    n_total, n_nontotal = aldag.total_nontotal()
    pos = {v: k for k, v in enumerate(aldag.order)}
    model = tree_to_dict(
        result.tree, result.fit, names,
        levels_names=[list(v.levels) for v in data.variables],
        n=data.n_rows,
        strategy=args.strategy,
        k=args.k,
        bic=result.bic,
        orders_evaluated=result.orders_evaluated,
        aldag_edges=[
            {"from": j, "to": i, "label": aldag.labels[(j, i)].value}
            for j, i in sorted(aldag.dag.edges, key=lambda e: (pos[e[0]], pos[e[1]]))
        ],
    )
    Path(args.out).write_text(dumps(model), encoding="utf-8")
    if args.dot:
        Path(args.dot).write_text(to_dot(aldag), encoding="utf-8")
    if args.subtree:
        if args.subtree not in names:
            print(f"error: unknown variable {args.subtree!r} for --subtree", file=sys.stderr)
            return 1
        sub = dependence_subtree(result.tree, names.index(args.subtree))
        target = args.subtree_out or str(Path(args.out).with_suffix("")) + f".{args.subtree}.subtree.dot"
        Path(target).write_text(
            subtree_to_dot(sub, names, [v.levels for v in data.variables]), encoding="utf-8"
        )

    print(f"strategy: {args.strategy}  k: {args.k}")
    print(f"BIC: {result.bic!r}")
    print("order: " + " ".join(names[v] for v in result.order_used))
    print(f"orders evaluated: {result.orders_evaluated}")
    print(f"edges (total, non-total): ({n_total}, {n_nontotal})")
    print("labels: " + " ".join(f"{k}={v}" for k, v in counts.items()))
    _write_manifest(args.out + ".manifest.json", "learn", argv, args,
                    {str(args.data): _sha256(args.data)}, started)
    return 0


def cmd_simulate(args, parser, argv) -> int:
    started = time.perf_counter()
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()]
    unknown = [e for e in estimators if e not in ESTIMATORS]
    if unknown or not estimators:
        parser.error(f"unknown estimators {unknown}; choose from {', '.join(ESTIMATORS)}")
    try:
        grid = [
            SimConfig(p, k, t, n, reps=args.reps, seed=args.seed,
                      cards=(args.card,) * p)
            for p in args.p for k in args.k for t in args.t for n in args.n
        ]
    except ValueError as exc:
        parser.error(str(exc))
    rows = run_grid(grid, estimators, k_learn=args.k_learn, jobs=args.jobs)
    Path(args.out).write_text(results_to_csv(rows), encoding="utf-8")
    Path(args.out + ".timing.csv").write_text(timings_to_csv(rows), encoding="utf-8")
    failed = sum(1 for r in rows if r["status"] != "ok")
    print(f"{len(rows)} rows written to {args.out} ({failed} failed)")
    _write_manifest(args.out + ".manifest.json", "simulate", argv, args, {}, started)
    return 0


def cmd_replay(args, parser, argv) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    for path, digest in manifest.get("inputs", {}).items():
        if not Path(path).exists() or _sha256(path) != digest:
            print(f"error: input {path} is missing or changed since the run", file=sys.stderr)
            return 1
    return main(manifest["argv"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aldaglearn",
        description="Learn sparse staged trees and asymmetry-labeled DAGs from categorical data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a model from a CSV file")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, required=True, help="maximum number of parents")
    p.add_argument("--strategy", choices=STRATEGIES, required=True)
    p.add_argument("--order", help="comma-separated variable names (cmi only)")
    p.add_argument("--bins", type=int, help="equal-frequency bins for numeric columns")
    p.add_argument("--alpha", type=float, default=0.05, help="PC significance level")
    p.add_argument("--max-sepset", type=int, default=3)
    p.add_argument("--order-cap", type=int, default=DEFAULT_ORDER_CAP)
    p.add_argument("--all-limit", type=int, default=ALL_ORDERS_LIMIT,
                   help="largest p accepted by --strategy all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--dot", help="ALDAG DOT path")
    p.add_argument("--subtree", help="variable whose dependence subtree is drawn")
    p.add_argument("--subtree-out", help="dependence subtree DOT path")
    p.set_defaults(func=cmd_learn)

    s = sub.add_parser("simulate", help="run the simulation grid")
    s.add_argument("--p", type=_int_list, required=True)
    s.add_argument("--k", type=_int_list, required=True)
    s.add_argument("--t", type=_int_list, required=True)
    s.add_argument("--n", type=_int_list, required=True)
    s.add_argument("--reps", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--card", type=int, default=2, help="cardinality of every variable")
    s.add_argument("--k-learn", type=_int_list, help="learning k values (default: the config's k)")
    s.add_argument("--estimators", default="dag,lv,cmi,ord1,ord2,ord3,all")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser, argv)
    except TooManyOrdersError as exc:
        print(f"error: {exc} (cap {exc.cap})", file=sys.stderr)
        return 3
    except (AldagError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
