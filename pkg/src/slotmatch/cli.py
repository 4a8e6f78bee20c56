"""``slotmatch`` command line.

Every subcommand also reads a flat ``key=value`` file through ``--config``;
flags given on the command line win over the file. Exit status is 0 on
success, 1 when ``verify`` finds violations, 2 on invalid input and 3 on
any other failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .baselines import BaselineKind, allocate_baseline, oracle_optimal
from .bench import METHODS, ExperimentConfig, sweep
from .data import SlotId, check_horizon, generate_synthetic, load_dataset, make_inventory, write_dataset
from .exceptions import ConfigurationError, ContractError, SizeError, ValidationError
from .graph import WeightedBipartiteGraph, build_graph, prune
from .influence import InfluenceEngine
from .instances import random_pruned_graph
from .matcher import approximation_report, ombm_allocate, verify_lemmas
from .selection import SelectionResult, stochastic_greedy_select

logger = logging.getLogger("slotmatch")

EXIT_OK, EXIT_CHECKS_FAILED, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


def read_config(path):
    """Parse ``key=value`` lines; ``#`` starts a comment, dashes become underscores."""
    values = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{n}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _ints(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _words(text):
    return [v.strip().lower() for v in str(text).split(",") if v.strip()]


def _horizon(text):
    parts = _ints(text)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("horizon must be T1,T2,DELTA")
    return check_horizon(parts)


def _bound(text):
    return "auto" if str(text) == "auto" else int(text)


def _optional_int(text):
    return None if str(text).lower() in ("", "none") else int(text)


def _data_args(p):
    p.add_argument("--data", required=True, help="directory holding trajectories.csv, billboards.csv, affinities.csv")
    p.add_argument("--horizon", type=_horizon, default="0,86400,3600", help="T1,T2,DELTA in seconds")
    p.add_argument("--lambda", dest="radius", type=float, default=None, help="exposure radius in meters")


def build_parser():
    parser = argparse.ArgumentParser(prog="slotmatch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic dataset")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--billboards", type=int, default=50)
    p.add_argument("--tags", type=int, default=10)
    p.add_argument("--horizon", type=_horizon, default="0,86400,3600")
    p.add_argument("--dominant-tag", type=_optional_int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("select", help="stochastic greedy slot and tag selection")
    _data_args(p)
    p.add_argument("--k", type=int, default=300)
    p.add_argument("--l", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="selection.json")

    p = sub.add_parser("graph", help="build the tag-slot bipartite graph for a selection")
    _data_args(p)
    p.add_argument("--selection", required=True)
    p.add_argument("--theta", type=float, default=None, help="prune before writing (default: write the complete graph)")
    p.add_argument("--out", default="graph.json")

    p = sub.add_parser("allocate", help="prune a graph and run OMBM")
    p.add_argument("--graph", required=True)
    p.add_argument("--theta", type=float, default=-1.0)
    p.add_argument("--bound-default", type=_bound, default="auto")
    p.add_argument("--out", default="allocation.json")

    p = sub.add_parser("baseline", help="prune a graph and run a baseline allocator")
    p.add_argument("--graph", required=True)
    p.add_argument("--method", type=str.lower, choices=[k.value for k in BaselineKind], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta", type=float, default=-1.0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("bench", help="parameter sweep over every method")
    p.add_argument("--data", default=None, help="dataset directory (default: synthetic)")
    p.add_argument("--synthetic-seed", type=int, default=42)
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--billboards", type=int, default=50)
    p.add_argument("--tags", type=int, default=10)
    p.add_argument("--dominant-tag", type=_optional_int, default=None)
    p.add_argument("--horizon", type=_horizon, default="0,86400,3600")
    p.add_argument("--k", type=_ints, default="10,20,30")
    p.add_argument("--l", type=_ints, default="10")
    p.add_argument("--theta", type=_floats, default="-1")
    p.add_argument("--epsilon", type=_floats, default="0.01")
    p.add_argument("--lambda", dest="radius", type=_floats, default="100")
    p.add_argument("--methods", type=_words, default=",".join(METHODS))
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bound-default", type=_bound, default="auto")
    p.add_argument("--out", default="out")
    p.add_argument("--run-id", default="run")

    p = sub.add_parser("verify", help="check matcher guarantees on random small instances")
    p.add_argument("--instances", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-slots", type=int, default=8)
    p.add_argument("--max-tags", type=int, default=4)
    p.add_argument("--max-users", type=int, default=6)
    p.add_argument("--out", default=None)

    for action in sub.choices.values():
        action.add_argument("--config", default=None, help="flat key=value file of flag defaults")
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = read_config(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        alias = {"lambda": "radius", "bound_default": "bound_default"}
        unknown = [k for k in values if alias.get(k, k) not in known]
        if unknown:
            raise ConfigurationError(f"unknown config keys for {args.command!r}: {unknown}")
        subparser.set_defaults(**{alias.get(k, k): v for k, v in values.items()})
        args = parser.parse_args(argv)
    return args


def _engine(args, radius):
    dataset = load_dataset(args.data)
    inventory = make_inventory(dataset, args.horizon, radius)
    return InfluenceEngine.from_inventory(inventory, dataset.affinities)


def _write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_gen(args):
    dataset = generate_synthetic(
        args.seed, args.users, args.billboards, args.tags, horizon=args.horizon, dominant_tag=args.dominant_tag
    )
    write_dataset(args.out, dataset)
    print(f"wrote {len(dataset.trajectories)} trajectory rows, {len(dataset.billboards)} billboards, "
          f"{len(dataset.affinities)} affinities to {args.out}")


def cmd_select(args):
    radius = 100.0 if args.radius is None else args.radius
    engine = _engine(args, radius)
    result = stochastic_greedy_select(engine, args.k, args.l, args.epsilon, args.seed)
    payload = result.to_dict()
    payload["params"] = {
        "k": args.k, "l": args.l, "epsilon": args.epsilon, "seed": args.seed,
        "lambda": radius, "horizon": list(args.horizon),
    }
    _write(args.out, json.dumps(payload, indent=2) + "\n")
    print(f"selected {len(result.slots)} slots and {len(result.tags)} tags, influence {result.influence:.6f}")


def cmd_graph(args):
    payload = json.loads(Path(args.selection).read_text(encoding="utf-8"))
    radius = args.radius if args.radius is not None else payload.get("params", {}).get("lambda", 100.0)
    selection = SelectionResult.from_dict(payload, slot_parser=SlotId.parse)
    graph = build_graph(selection, _engine(args, radius))
    if args.theta is not None:
        graph = prune(graph, args.theta)
    graph.save(args.out)
    print(f"graph: {graph.n_tags} tags x {graph.n_slots} slots, {graph.n_edges} edges, "
          f"mu={graph.stats['mu']:.6f} sigma={graph.stats['sigma']:.6f}")


def cmd_allocate(args):
    graph = prune(WeightedBipartiteGraph.load(args.graph), args.theta)
    alloc = ombm_allocate(graph, args.bound_default)
    alloc.save(args.out, graph)
    print(f"ombm: {alloc.matched_slots} slots matched to {alloc.matched_tags} tags")


def cmd_baseline(args):
    graph = prune(WeightedBipartiteGraph.load(args.graph), args.theta)
    alloc = allocate_baseline(args.method, graph, seed=args.seed)
    out = args.out or f"allocation-{args.method}.json"
    alloc.save(out, graph)
    print(f"{args.method}: {alloc.matched_slots} slots matched to {alloc.matched_tags} tags")


def cmd_bench(args):
    config = ExperimentConfig(
        data=args.data,
        synthetic_seed=args.synthetic_seed,
        synthetic_users=args.users,
        synthetic_billboards=args.billboards,
        synthetic_tags=args.tags,
        dominant_tag=args.dominant_tag,
        horizon=tuple(args.horizon),
        k=args.k,
        l=args.l,
        theta=args.theta,
        epsilon=args.epsilon,
        radius=args.radius,
        methods=args.methods,
        repetitions=args.repetitions,
        seed=args.seed,
        bounds=args.bound_default,
    )
    run_dir = Path(args.out) / args.run_id
    report = sweep(config, out_dir=run_dir)
    print(f"{len(report.rows)} rows, {len(report.failures)} failed cells -> {run_dir}")
    return EXIT_RUNTIME if report.failures and not report.rows else EXIT_OK


def run_verify(instances, seed=0, max_slots=8, max_tags=4, max_users=6):
    """Matcher guarantee and ratio checks on random pruned graphs; returns a JSON-able dict."""
    rows = []
    for i in range(instances):
        _, graph, theta = random_pruned_graph(seed + i, max_slots, max_tags, max_users)
        alloc = ombm_allocate(graph)
        oracle = oracle_optimal(graph, alloc.bounds, return_result=True)
        lemmas = verify_lemmas(alloc, graph, oracle)
        approx = approximation_report(alloc, oracle.allocation, graph)
        rows.append({
            "instance": seed + i,
            "theta": theta,
            "n_slots": graph.n_slots,
            "n_tags": graph.n_tags,
            "slot_uniqueness": lemmas.slot_uniqueness,
            "bound_respect": lemmas.bound_respect,
            "quota_filled": lemmas.quota_filled,
            "dominating_in_optimum": lemmas.dominating_in_optimum,
            "ratio": approx.ratio,
            "ratio_bound": approx.bound,
            "ratio_holds": approx.holds,
            "violations": lemmas.violations,
        })
    ratios = np.array([r["ratio"] for r in rows])
    summary = {
        "instances": instances,
        "slot_uniqueness_violations": sum(not r["slot_uniqueness"] for r in rows),
        "bound_violations": sum(not r["bound_respect"] for r in rows),
        "quota_fill_violations": sum(r["quota_filled"] is False for r in rows),
        "dominating_edge_violations": sum(not r["dominating_in_optimum"] for r in rows),
        "ratio_bound_violations": sum(not r["ratio_holds"] for r in rows),
        "ratio_quantiles": {
            str(q): float(np.quantile(ratios, q)) for q in (0.0, 0.5, 0.9, 0.99, 1.0)
        } if rows else {},
    }
    return {"summary": summary, "instances": rows}


def cmd_verify(args):
    result = run_verify(args.instances, args.seed, args.max_slots, args.max_tags, args.max_users)
    if args.out:
        _write(args.out, json.dumps(result, indent=2) + "\n")
    summary = result["summary"]
    for key, value in summary.items():
        print(f"{key}: {value}")
    failed = any(v for k, v in summary.items() if k.endswith("violations"))
    return EXIT_CHECKS_FAILED if failed else EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "select": cmd_select,
    "graph": cmd_graph,
    "allocate": cmd_allocate,
    "baseline": cmd_baseline,
    "bench": cmd_bench,
    "verify": cmd_verify,
}


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    except (ConfigurationError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args) or EXIT_OK
    except (ConfigurationError, ValidationError, ContractError, SizeError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        logger.debug("unhandled", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
