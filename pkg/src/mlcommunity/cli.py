"""Command-line interface.

Subcommands: ``generate``, ``detect``, ``estimate-k``, ``experiment`` and
``ingest``. Every flag can also be given in a ``key = value`` config file
passed with ``--config``; flags on the command line win.

Exit codes: 0 on success, 1 on usage errors, 2 on data or algorithm errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .detectors import Algorithm, run
from .exceptions import DegenerateInputError, EdgeListParseError, UnsupportedKError
from .experiments import ExperimentSpec, run_experiment
from .ingest import (
    build_threshold_multilayer,
    load_edge_list,
    load_returns_panel,
    preprocess,
    write_edge_list,
    write_node_map,
)
from .model import sample_network, simulation_params
from .modularity import estimate_k
from .spectral import KMeansOptions

log = logging.getLogger("mlcommunity")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_").lower()] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, config: dict) -> None:
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, value in config.items():
        action = actions.get(key)
        if action is None or key in ("command", "config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            low = value.lower()
            if low not in _TRUE | _FALSE:
                raise UsageError(f"config key {key!r} expects a boolean, got {value!r}")
            flag = low in _TRUE
            defaults[key] = flag if isinstance(action, argparse._StoreTrueAction) else not flag
        elif action.nargs in ("+", "*"):
            defaults[key] = [action.type(v) if action.type else v for v in value.replace(",", " ").split()]
        else:
            defaults[key] = value
    # values supplied by the file satisfy required flags
    for action in parser._actions:
        if action.dest in defaults:
            action.required = False
    for group in parser._mutually_exclusive_groups:
        if any(a.dest in defaults for a in group._group_actions):
            group.required = False
    parser.set_defaults(**defaults)


def _kmeans_args(p):
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--iters", type=int, default=100, help="Lloyd iterations per k-means run")
    p.add_argument("--restarts", type=int, default=10, help="k-means++ restarts")


def _detect_args(p, estimate_default=False):
    p.add_argument("--input", required=True, type=Path, help="edge list 'layer u v [weight]'")
    p.add_argument("--layer-last", action="store_true", help="columns are 'u v layer [weight]'")
    p.add_argument("--algo", default="ndsosa", help="nsoa, ndsosa, nsosa, sum, sosdebias, snsoa or sndsosa")
    p.add_argument("--k", type=int, help="number of communities")
    if not estimate_default:
        p.add_argument("--estimate-k", action="store_true", help="pick K by maximizing averaged modularity")
    p.add_argument("--kmin", type=int, default=1)
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--lcc", action="store_true", help="restrict to the largest connected component first")
    p.add_argument("--out-dir", type=Path, default=Path("."))
    _kmeans_args(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlcommunity", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", type=Path, help="key = value file mirroring the flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="sample a network from the degree-corrected block model")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--l", type=int, required=True, dest="l")
    g.add_argument("--rho", type=float, default=1.0)
    g.add_argument("--assortative", action="store_true", help="set every B_l diagonal to 1")
    g.add_argument("--no-self-loops", action="store_true")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", type=Path, default=Path("."))

    _detect_args(sub.add_parser("detect", help="detect communities in an edge-list network"))
    _detect_args(sub.add_parser("estimate-k", help="sweep K and report averaged modularity"), estimate_default=True)

    e = sub.add_parser("experiment", help="run one of the simulation experiments 1-6")
    e.add_argument("--id", type=int, required=True, choices=range(1, 7))
    e.add_argument("--preset", choices=("full", "desk"), default="desk")
    e.add_argument("--trials", type=int)
    e.add_argument("--n", type=int)
    e.add_argument("--l", type=int, dest="l")
    e.add_argument("--k", type=int)
    e.add_argument("--rho", type=float)
    e.add_argument("--grid", type=float, nargs="+", help="values of the varied parameter")
    e.add_argument("--algos", nargs="+", help="algorithms to run")
    e.add_argument("--no-estimate-k", action="store_true")
    e.add_argument("--kmax", type=int, default=10)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--no-timing", action="store_true", help="leave elapsed_s empty so outputs are reproducible byte for byte")
    e.add_argument("--out-dir", type=Path, default=Path("results"))
    _kmeans_args(e)

    i = sub.add_parser("ingest", help="preprocess an edge list or build a correlation-threshold network")
    src = i.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="edge list 'layer u v [weight]'")
    src.add_argument("--returns", type=Path, help="CSV with header asset_id,t1,...,tT")
    i.add_argument("--thresholds", type=float, nargs="+", default=[0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75])
    i.add_argument("--layer-last", action="store_true")
    i.add_argument("--no-lcc", action="store_true", help="skip the largest-connected-component restriction")
    i.add_argument("--out-dir", type=Path, default=Path("."))
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is not None:
        if not known.config.exists():
            raise UsageError(f"config file {known.config} not found")
        choices = parser._subparsers._group_actions[0].choices
        command = next((a for a in argv if a in choices), None)
        if command is not None:
            _apply_config(choices[command], read_config(known.config))
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a subcommand is required")
    return args


def _options(args) -> KMeansOptions:
    return KMeansOptions(iters=args.iters, restarts=args.restarts)


def _write_labels(path: Path, node_ids, labels):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["node_id", "label"])
        for nid, lab in zip(node_ids, labels):
            w.writerow([int(nid), int(lab)])


def cmd_generate(args) -> int:
    if not 0 < args.rho <= 1:
        raise UsageError("--rho must lie in (0, 1]")
    if args.k < 1 or args.n < args.k or args.l < 1:
        raise UsageError("need n >= k >= 1 and l >= 1")
    params = simulation_params(args.n, args.k, args.l, args.rho, args.assortative, rng_seed=args.seed)
    net = sample_network(params, np.random.SeedSequence([args.seed, 1]), self_loops=not args.no_self_loops)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_edge_list(net, args.out_dir / "network.edges")
    _write_labels(args.out_dir / "labels.csv", net.node_ids, params.labels.labels)
    diag = {
        "n": args.n, "K": args.k, "L": args.l, "rho": args.rho, "seed": args.seed,
        "assortative": args.assortative,
        "theta": params.theta.tolist(),
        "B": params.B.tolist(),
    }
    (args.out_dir / "params.json").write_text(json.dumps(diag, indent=1), encoding="utf-8")
    log.info("wrote %s", args.out_dir)
    return EXIT_OK


def _load(args):
    net = load_edge_list(args.input, layer_first=not args.layer_last)
    if args.lcc:
        net, _, stats = preprocess(net)
        log.info("largest connected component: %s", stats)
    return net


def _write_sweep(path: Path, sweep):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["K", "q_mnavrg", "error"])
        for e in sweep.per_k:
            w.writerow([e.K, repr(float(e.q)), e.error or ""])


def cmd_detect(args, force_estimate=False) -> int:
    algo = Algorithm.parse(args.algo)
    if algo.ideal:
        raise UsageError("ideal detectors need model parameters and are not available here")
    estimate = force_estimate or args.estimate_k
    if not estimate and args.k is None:
        raise UsageError("give --k or --estimate-k")
    net = _load(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    options = _options(args)
    diag = {"algorithm": algo.value, "n": net.n, "L": net.L, "seed": args.seed}
    if estimate:
        kmax = min(args.kmax, net.n)
        sweep = estimate_k(net, algo, args.kmin, kmax, options, args.seed)
        _write_sweep(args.out_dir / "sweep.csv", sweep)
        result = sweep.best.result
        diag.update(k_hat=sweep.best_k, q_mnavrg=sweep.best_q, sweep=sweep.table())
        if result is None:
            raise DegenerateInputError("no K in the sweep produced a valid detection")
    else:
        result = run(net, args.k, algo, options, args.seed)
        from .modularity import q_mnavrg

        diag["q_mnavrg"] = q_mnavrg(net, result.labels)
    diag.update(
        K=result.K,
        leading_values=[float(v) for v in result.leading_values],
        elapsed_s=result.elapsed,
        flagged_rows=[int(net.node_ids[i]) for i in result.flagged_rows],
    )
    _write_labels(args.out_dir / "labels.csv", net.node_ids, result.labels)
    (args.out_dir / "diagnostics.json").write_text(json.dumps(diag, indent=1), encoding="utf-8")
    print(f"{algo.value}: K={result.K} q_mnavrg={diag['q_mnavrg']:.4f} elapsed={result.elapsed:.3f}s")
    return EXIT_OK


def cmd_experiment(args) -> int:
    overrides = {"trials": args.trials, "n": args.n, "L": args.l, "K": args.k, "rho": args.rho}
    if args.grid:
        overrides["grid"] = args.grid
    if args.algos:
        overrides["algorithms"] = [Algorithm.parse(a).value for a in args.algos]
    spec = ExperimentSpec(
        id=args.id, overrides=overrides, output_dir=args.out_dir, preset=args.preset, seed=args.seed,
        estimate_k=not args.no_estimate_k, k_max=args.kmax, workers=args.workers,
        kmeans=_options(args), record_timing=not args.no_timing,
    )
    rows, summary = run_experiment(spec)
    failed = sum(1 for r in rows if r.get("error"))
    print(f"experiment {args.id}: {len(rows)} rows, {failed} failed, written to {args.out_dir}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    if args.input is not None:
        net = load_edge_list(args.input, layer_first=not args.layer_last)
    else:
        net = build_threshold_multilayer(load_returns_panel(args.returns), args.thresholds)
    if not args.no_lcc:
        net, _, stats = preprocess(net)
    else:
        from .ingest import edge_count, nu_sparsity

        stats = {"n": net.n, "L": net.L, "edges": edge_count(net), "nu": nu_sparsity(net)}
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_edge_list(net, args.out_dir / "network.edges")
    write_node_map(net, args.out_dir / "node_map.csv")
    (args.out_dir / "stats.json").write_text(json.dumps(stats, indent=1), encoding="utf-8")
    print(f"n={stats['n']} L={stats['L']} edges={stats['edges']} nu={stats['nu']:.4f}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "detect": cmd_detect,
    "estimate-k": lambda a: cmd_detect(a, force_estimate=True),
    "experiment": cmd_experiment,
    "ingest": cmd_ingest,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"mlcommunity {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EdgeListParseError, DegenerateInputError, UnsupportedKError, ValueError, OSError) as exc:
        print(f"mlcommunity {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
