"""Command-line interface.

    wwls distance   --dataset DIR --name MUTAG --h 2 --out D.csv
    wwls kernel     --dataset DIR --name MUTAG --gamma 0.01 --out K.csv
    wwls hash-stats --dataset DIR --name ENZYMES --h-max 7 --out table.csv
    wwls noise      --gen random --n 50 --mode rewire --max-noise 30 --trials 20 --out curve.csv
    wwls knn        --dataset DIR --name MUTAG --h 2 --k-neighbors 1 --out report.json

Every file output gets a ``<out>.meta.json`` sidecar recording the full
configuration.  Exit codes: 0 ok, 2 input error, 3 compute error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ComputeError, InputError
from .experiments import HASH_STATS_COLUMNS, base_graph, hash_stats, noise_experiment
from .graph import LabeledDataset, assign_degree_labels, parse_tud_dataset
from .metric import default_jobs, knn_predict, pairwise_matrix
from .wl_hash import DEFAULT_MODULUS, make_hash_params

log = logging.getLogger("wwls")

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(f"{self.prog}: error: {message}") from None


def _add_source(p, gen_default=None):
    src = p.add_argument_group("graph source")
    src.add_argument("--dataset", type=Path, help="directory with TUD files")
    src.add_argument("--name", help="TUD dataset name, e.g. MUTAG")
    src.add_argument("--gen", choices=("random", "cycle", "grid"), default=gen_default,
                     help="use synthetic graphs instead of a dataset")
    src.add_argument("--n", type=int, default=50, help="nodes per generated graph")
    src.add_argument("--p", type=float, default=0.1, help="edge probability for --gen random")
    src.add_argument("--count", type=int, default=10, help="number of generated graphs")
    src.add_argument("--degree-labels", action="store_true", help="relabel nodes by degree")


def _add_hash(p, h_default=2):
    g = p.add_argument_group("hashing")
    g.add_argument("--h", type=int, default=h_default, help="WL iterations")
    g.add_argument("--k", type=int, default=2, help="hash slots per subtree")
    g.add_argument("--modulus", type=int, default=DEFAULT_MODULUS, help="prime modulus")
    g.add_argument("--seed", type=int, default=0)


def _add_solver(p):
    g = p.add_argument_group("transport")
    g.add_argument("--solver", choices=("exact", "sinkhorn"), default="exact")
    g.add_argument("--eps", type=float, default=1e-2, help="Sinkhorn regularization (absolute)")
    g.add_argument("--eps-scaling", action="store_true", help="anneal Sinkhorn regularization down to --eps")
    g.add_argument("--jobs", type=int, default=None, help="worker processes (default: $WWLS_JOBS or all cores)")


def _add_output(p, fmt="csv"):
    g = p.add_argument_group("output")
    g.add_argument("--out", type=Path, help="output file (default: stdout, no sidecar)")
    g.add_argument("--format", choices=("csv", "json"), default=fmt)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wwls", description="Wasserstein WL subtree distances for labeled graphs")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("distance", help="pairwise WWLS distance matrix")
    _add_source(p)
    _add_hash(p)
    _add_solver(p)
    _add_output(p)

    p = sub.add_parser("kernel", help="pairwise WWLS kernel matrix exp(-gamma * d)")
    _add_source(p)
    _add_hash(p)
    _add_solver(p)
    p.add_argument("--gamma", type=float, default=1e-2)
    _add_output(p)

    p = sub.add_parser("hash-stats", help="subtree type counts per WL iteration")
    _add_source(p)
    p.add_argument("--h-max", type=int, default=7)
    p.add_argument("--modulus", type=int, default=DEFAULT_MODULUS)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)

    p = sub.add_parser("noise", help="distance growth under edge noise")
    src = p.add_argument_group("graphs")
    src.add_argument("--gen", choices=("random", "cycle", "grid"), default="random")
    src.add_argument("--n", type=int, default=50)
    src.add_argument("--p", type=float, default=0.1)
    src.add_argument("--uniform-labels", action="store_true",
                     help="keep all labels 0 instead of degree labels")
    p.add_argument("--mode", choices=("rewire", "add"), default="rewire")
    p.add_argument("--max-noise", type=int, default=30)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--h", type=int, nargs="+", default=[2], help="one or more WL iteration counts")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--modulus", type=int, default=DEFAULT_MODULUS)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)

    p = sub.add_parser("knn", help="leave-one-out k-NN accuracy on the WWLS distance")
    _add_source(p)
    _add_hash(p)
    _add_solver(p)
    p.add_argument("--k-neighbors", type=int, default=1)
    _add_output(p, fmt="json")
    return parser


# ---------------------------------------------------------------------------


def _load(args) -> LabeledDataset:
    if args.dataset is not None:
        if args.gen is not None:
            raise InputError("use either --dataset or --gen, not both")
        if not args.name:
            raise InputError("--dataset needs --name")
        ds = parse_tud_dataset(args.dataset, args.name)
    elif args.gen is not None:
        if args.count < 1 or args.n < 1 or not 0 <= args.p <= 1:
            raise InputError("need --count >= 1, --n >= 1 and 0 <= --p <= 1")
        graphs = [base_graph(args.gen, args.n, args.p, getattr(args, "seed", 0) + i) for i in range(args.count)]
        ds = LabeledDataset(f"gen-{args.gen}", tuple(graphs), (0,) * len(graphs))
    else:
        raise InputError("need --dataset DIR --name NAME or --gen KIND")
    if args.degree_labels:
        ds = ds.map(assign_degree_labels)
    return ds


def _params(args, h=None):
    try:
        return make_hash_params(args.modulus, args.k, args.h if h is None else h, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _config(args) -> dict:
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
           if k not in ("verbose",)}
    if "jobs" in cfg:
        cfg["jobs"] = default_jobs() if cfg["jobs"] is None else cfg["jobs"]
    return cfg


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _matrix_text(M: np.ndarray, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({"matrix": [[float(x) for x in row] for row in M]}) + "\n"
    return "".join(",".join(_fmt(x) for x in row) + "\n" for row in M)


def _table_text(columns, rows, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(columns, r)) for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _emit(args, text: str, extra: dict | None = None):
    if args.out is None:
        sys.stdout.write(text)
        return
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text, encoding="utf-8")
    meta = {"tool": "wwls", "version": __version__, "command": args.command, "config": _config(args)}
    if extra:
        meta.update(extra)
    sidecar = args.out.with_name(args.out.name + ".meta.json")
    sidecar.write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    log.info("wrote %s and %s", args.out, sidecar)


def cmd_distance(args, mode="distance"):
    ds = _load(args)
    params = _params(args)
    if mode == "kernel" and not args.gamma > 0:
        raise InputError("--gamma must be positive")
    pm = pairwise_matrix(ds, params, mode=mode, gamma=getattr(args, "gamma", None), solver=args.solver,
                         eps=args.eps, eps_scaling=args.eps_scaling, jobs=args.jobs)
    _emit(args, _matrix_text(pm.values, args.format),
          {"dataset": ds.name, "graphs": len(ds), "matrix": pm.metadata})


def cmd_kernel(args):
    cmd_distance(args, mode="kernel")


def cmd_hash_stats(args):
    if args.h_max < 1:
        raise InputError("--h-max must be at least 1")
    ds = _load(args)
    try:
        make_hash_params(args.modulus, 1, 0, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rows = hash_stats(ds, args.h_max, args.modulus, args.seed)
    _emit(args, _table_text(HASH_STATS_COLUMNS, [[r[c] for c in HASH_STATS_COLUMNS] for r in rows], args.format),
          {"dataset": ds.name, "graphs": len(ds)})


def cmd_noise(args):
    if args.max_noise < 1 or args.trials < 1:
        raise InputError("need --max-noise >= 1 and --trials >= 1")
    if args.n < 1 or not 0 <= args.p <= 1:
        raise InputError("need --n >= 1 and 0 <= --p <= 1")
    try:
        make_hash_params(args.modulus, args.k, max(args.h), args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    res = noise_experiment(args.gen, args.mode, args.max_noise, args.trials, n=args.n, p=args.p, hs=args.h,
                           k=args.k, M=args.modulus, seed=args.seed, degree_labels=not args.uniform_labels)
    spearman = {m: res.spearman(m) for m in res.raw}
    _emit(args, _table_text(("noise", "metric", "mean", "std"), res.summary(), args.format),
          {"spearman": spearman})


def cmd_knn(args):
    ds = _load(args)
    params = _params(args)
    if not 1 <= args.k_neighbors < len(ds):
        raise InputError(f"--k-neighbors must lie in [1, {len(ds) - 1}]")
    pm = pairwise_matrix(ds, params, solver=args.solver, eps=args.eps, eps_scaling=args.eps_scaling,
                         jobs=args.jobs)
    labels = np.array(ds.class_labels)
    preds = knn_predict(pm, labels, args.k_neighbors)
    classes = sorted(set(labels.tolist()))
    confusion = [[int(np.sum((labels == t) & (preds == p))) for p in classes] for t in classes]
    counts = np.array([np.sum(labels == c) for c in classes])
    report = {
        "dataset": ds.name,
        "graphs": len(ds),
        "k_neighbors": args.k_neighbors,
        "accuracy": float(np.mean(preds == labels)),
        "majority_rate": float(counts.max() / counts.sum()),
        "classes": classes,
        "confusion": confusion,
        "config": _config(args),
    }
    if args.format == "json":
        text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    else:
        text = _table_text(("key", "value"), [(k, json.dumps(v)) for k, v in sorted(report.items())], "csv")
    _emit(args, text)


COMMANDS = {
    "distance": cmd_distance,
    "kernel": cmd_kernel,
    "hash-stats": cmd_hash_stats,
    "noise": cmd_noise,
    "knn": cmd_knn,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return EXIT_OK
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except InputError as exc:
        print(f"wwls: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ComputeError as exc:
        print(f"wwls: compute error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
