"""Command line entry points over the pipeline.

Exit codes are a stable scripting contract: 0 success, 1 runtime or
data error, 2 configuration error (argparse's own usage failures also
exit 2).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .aggregate import AggregationConfig, aggregate_users
from .bootstrap import bootstrap_eval
from .config import load_config
from .corpus import load_embeddings, save_embeddings
from .errors import ConfigError, EmbredError, FormatError
from .fkp import SweepGrid, build_fkp_table, fkp_report_json, fkp_table_csv
from .plots import plot_results
from .reducers import load_reducer, transform
from .rng import derive_seed
from .sweep import (
    atomic_save_reducer,
    atomic_write_text,
    cell_seed,
    ensure_reducer,
    file_sha256,
    fit_method,
    fit_options,
    load_task,
    reduced_dataset,
    result_from_dict,
    result_to_dict,
    run_sweep,
)

log = logging.getLogger(__name__)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--out", help="output file or directory")
    parser.add_argument(
        "--resume", action="store_true", help="reuse completed cells"
    )
    parser.add_argument(
        "--jobs", type=int, default=1, help="parallel workers for grid cells"
    )


def _load_cfg(args, **extra):
    if not args.config:
        raise ConfigError("this command needs --config")
    overrides = dict(extra)
    if args.seed is not None:
        overrides["seed"] = args.seed
    return load_config(args.config, overrides or None)


def cmd_fit_reducer(args) -> int:
    if not args.out:
        raise ConfigError("fit-reducer needs --out for the reducer file")
    options = {}
    if args.config:
        cfg = _load_cfg(args)
        pretrain_path = args.pretrain or cfg.pretrain
        seed = cfg.seed
        options = fit_options(cfg)
    else:
        if not args.pretrain:
            raise ConfigError("fit-reducer needs --pretrain or --config")
        pretrain_path = args.pretrain
        seed = args.seed if args.seed is not None else 0
    table = load_embeddings(pretrain_path, format=args.format)
    model = fit_method(
        args.method,
        table.matrix,
        args.k,
        derive_seed(seed, "reducer", args.method, args.k),
        **options,
    )
    atomic_save_reducer(model, args.out)
    meta = model.fit_meta
    print(
        f"fitted {model.method} {model.in_dims}->{model.out_dims}: "
        f"rows={meta.n_pretrain_rows} iterations={meta.iterations_run} "
        f"final_objective={meta.final_objective!r} psi_clamps={meta.psi_clamps}"
    )
    print(f"wrote {args.out}")
    return 0


def cmd_transform(args) -> int:
    if not args.out:
        raise ConfigError("transform needs --out")
    model = load_reducer(args.reducer)
    table = load_embeddings(args.input, format=args.format)
    save_embeddings(transform(model, table), args.out, format=args.format)
    print(f"wrote {args.out} ({len(table.ids)} rows, {model.out_dims} dims)")
    return 0


def cmd_aggregate(args) -> int:
    if not args.out:
        raise ConfigError("aggregate needs --out")
    table = load_embeddings(args.input, format=args.format)
    cfg = AggregationConfig(
        message_cap=args.cap,
        seed=args.seed if args.seed is not None else 0,
    )
    users = aggregate_users(table, cfg)
    save_embeddings(users, args.out, format=args.format)
    print(f"wrote {args.out} ({len(users.ids)} users from {len(table.ids)} messages)")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_cfg(args)
    pretrain, task = load_task(cfg)
    k = args.k if args.k is not None else task.dims
    method = args.method or cfg.methods[0]
    if k > task.dims:
        raise ConfigError(f"k={k} exceeds the input dims {task.dims}")
    if k == task.dims:
        data = task
    else:
        model = ensure_reducer(
            cfg, method, k, pretrain, file_sha256(cfg.pretrain), Path(cfg.out_dir)
        )
        data = reduced_dataset(task, model)
    res = bootstrap_eval(
        data,
        args.n_ta,
        B=cfg.B,
        seed=cell_seed(cfg.seed, cfg.task_name, method, k, args.n_ta),
        method=method,
        lam=cfg.lam,
        eta=cfg.eta,
        T=cfg.T,
        ci=cfg.ci,
        disattenuate=cfg.disattenuate,
    )
    doc = json.dumps(result_to_dict(res), sort_keys=True, indent=2)
    if args.out:
        atomic_write_text(Path(args.out), doc + "\n")
        print(f"wrote {args.out}")
    else:
        print(doc)
    return 0


def cmd_sweep(args) -> int:
    extra = {}
    if args.out:
        extra["out_dir"] = str(Path(args.out).resolve())
    cfg = _load_cfg(args, **extra)
    artifacts = run_sweep(cfg, resume=args.resume, jobs=args.jobs)
    for name in sorted(artifacts):
        print(f"{name}: {artifacts[name]}")
    return 0


def _read_json(path, what: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read {what} {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{what} {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{what} {path} must hold a JSON object")
    return doc


def cmd_fkp(args) -> int:
    results = []
    for path in args.results:
        doc = _read_json(path, "results file")
        results.extend(result_from_dict(r) for r in doc.get("results", []))
    if not results:
        raise ConfigError("no results found in the given files")
    methods = sorted({r.method for r in results})
    method = args.method or (methods[0] if len(methods) == 1 else None)
    if method is None:
        raise ConfigError(
            f"results mix methods {methods}; pick one with --method"
        )
    if method not in methods:
        raise ConfigError(f"method {method!r} not present in results {methods}")
    chosen = [r for r in results if r.method == method]
    grid = SweepGrid.from_results(chosen)
    if args.families:
        families = _read_json(args.families, "families file")
    else:
        families = {task: task for task in grid.tasks}
    report = build_fkp_table(grid, families)
    text = fkp_table_csv(report)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        atomic_write_text(out_dir / "fkp.csv", text)
        atomic_write_text(
            out_dir / "fkp.json",
            json.dumps(fkp_report_json(report), sort_keys=True, indent=2) + "\n",
        )
        print(f"wrote {out_dir / 'fkp.csv'} and {out_dir / 'fkp.json'}")
    print(text, end="")
    return 0


def cmd_plot(args) -> int:
    doc = _read_json(args.results, "results file")
    out_dir = Path(args.out) if args.out else Path(".")
    written = plot_results(doc, out_dir, task=args.task)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embred",
        description="User-level embedding reduction and evaluation pipeline",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-reducer", help="fit one reducer and save it")
    _common_flags(p)
    p.add_argument("--method", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--pretrain", help="pretrain embeddings file")
    p.add_argument("--format", default="binary", choices=("binary", "csv"))
    p.set_defaults(func=cmd_fit_reducer)

    p = sub.add_parser("transform", help="apply a saved reducer to a table")
    _common_flags(p)
    p.add_argument("--reducer", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--format", default="binary", choices=("binary", "csv"))
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("aggregate", help="average message rows per user")
    _common_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--cap", type=int, help="subsample cap per user")
    p.add_argument("--format", default="binary", choices=("binary", "csv"))
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("evaluate", help="bootstrap one grid cell")
    _common_flags(p)
    p.add_argument("--method")
    p.add_argument("--k", type=int)
    p.add_argument("--n-ta", type=int, required=True, dest="n_ta")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run the full method x k x n_ta grid")
    _common_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fkp", help="first-k-to-peak table from results JSON")
    _common_flags(p)
    p.add_argument("--results", nargs="+", required=True)
    p.add_argument("--families", help="JSON file mapping task to family")
    p.add_argument("--method", help="method to tabulate when results mix several")
    p.set_defaults(func=cmd_fkp)

    p = sub.add_parser("plot", help="render score-vs-k SVG panels")
    _common_flags(p)
    p.add_argument("--results", required=True)
    p.add_argument("--task", help="restrict to one task")
    p.set_defaults(func=cmd_plot)

    return parser


def entry() -> None:
    sys.exit(main())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EmbredError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
