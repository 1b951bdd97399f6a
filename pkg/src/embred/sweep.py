"""Grid execution: fit reducers once, evaluate every cell, emit artifacts.

All outputs are written atomically (temp file + rename in the same
directory), every cell derives its seed from the master seed and its own
coordinates, and reducers are cached on disk keyed by method, k, the
pretrain file's content hash, and the seed. Reruns with an identical
config therefore produce byte-identical artifacts, and interrupted runs
can resume from the completed cell files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .bootstrap import BootstrapResult, bootstrap_eval
from .config import ExperimentConfig, config_hash
from .corpus import EmbeddingTable, TaskDataset, load_embeddings, load_outcomes
from .errors import ConfigError, DataError
from .fkp import SweepGrid, build_fkp_table, fkp_report_json, fkp_table_csv
from .reducers import (
    ReducerModel,
    fit_fa,
    fit_nlae,
    fit_nmf,
    fit_pca,
    fit_pca_ppa,
    load_reducer,
    save_reducer,
    transform,
)
from .rng import derive_seed

log = logging.getLogger(__name__)

RESULTS_HEADER = "task,method,k,n_ta,mean,std_error,ci_low,ci_high,seed"


# ---------------------------------------------------------------------------
# atomic filesystem helpers
# ---------------------------------------------------------------------------


def atomic_write_bytes(path, data: bytes) -> None:
    """Write via a sibling temp file so readers never see partial output."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def slug(name: str) -> str:
    """Filesystem-safe token for artifact names."""
    return re.sub(r"[^A-Za-z0-9_.-]+", "-", name)


# ---------------------------------------------------------------------------
# result serialization
# ---------------------------------------------------------------------------


def result_to_dict(res: BootstrapResult) -> dict:
    meta = {
        key: list(val) if isinstance(val, tuple) else val
        for key, val in res.model_meta.items()
    }
    return {
        "task": res.task_name,
        "method": res.method,
        "k": res.k,
        "n_ta": res.n_ta,
        "scores": list(res.scores),
        "mean": res.mean,
        "std_error": res.std_error,
        "ci_low": res.ci_low,
        "ci_high": res.ci_high,
        "seed": res.seed,
        "model_meta": meta,
    }


def result_from_dict(doc: dict) -> BootstrapResult:
    try:
        return BootstrapResult(
            task_name=doc["task"],
            method=doc["method"],
            k=doc["k"],
            n_ta=doc["n_ta"],
            scores=tuple(doc["scores"]),
            mean=doc["mean"],
            std_error=doc["std_error"],
            ci_low=doc["ci_low"],
            ci_high=doc["ci_high"],
            seed=doc["seed"],
            model_meta=doc["model_meta"],
        )
    except KeyError as exc:
        raise DataError(f"result document missing field {exc.args[0]!r}") from None


def results_csv(results: list[BootstrapResult]) -> str:
    lines = [RESULTS_HEADER]
    for r in results:
        lines.append(
            f"{r.task_name},{r.method},{r.k},{r.n_ta},"
            f"{r.mean!r},{r.std_error!r},{r.ci_low!r},{r.ci_high!r},{r.seed}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# reducer fitting and caching
# ---------------------------------------------------------------------------


def fit_method(
    method: str,
    x,
    k: int,
    seed: int,
    *,
    nmf_iterations: int = 300,
    fa_iterations: int = 200,
    fa_tol: float = 1e-6,
    nlae_max_epochs: int = 200,
    nlae_patience: int = 3,
    nlae_batch: int = 64,
) -> ReducerModel:
    if method == "pca":
        return fit_pca(x, k, seed=seed)
    if method == "pca_ppa":
        return fit_pca_ppa(x, k, seed=seed)
    if method == "nmf":
        return fit_nmf(x, k, iters=nmf_iterations, seed=seed)
    if method == "fa":
        return fit_fa(x, k, iters=fa_iterations, tol=fa_tol)
    if method == "nlae":
        return fit_nlae(
            x,
            k,
            seed=seed,
            max_epochs=nlae_max_epochs,
            patience=nlae_patience,
            batch_size=nlae_batch,
        )
    raise ConfigError(f"unknown reduction method {method!r}")


def fit_options(cfg: ExperimentConfig) -> dict:
    """The fit_method keyword subset an experiment config pins down."""
    return {
        "nmf_iterations": cfg.nmf_iterations,
        "fa_iterations": cfg.fa_iterations,
        "fa_tol": cfg.fa_tol,
        "nlae_max_epochs": cfg.nlae_max_epochs,
        "nlae_patience": cfg.nlae_patience,
        "nlae_batch": cfg.nlae_batch,
    }


def ensure_reducer(
    cfg: ExperimentConfig,
    method: str,
    k: int,
    pretrain: EmbeddingTable,
    pretrain_hash: str,
    out_dir: Path,
) -> ReducerModel:
    """Fit or load the cached reducer for one (method, k) pair."""
    cache_dir = out_dir / "reducers"
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / (
        f"{slug(method)}_k{k}_{pretrain_hash[:12]}_s{cfg.seed}.edr"
    )
    if path.is_file():
        log.info("reducer cache hit: %s", path.name)
        return load_reducer(path)
    seed = derive_seed(cfg.seed, "reducer", method, k)
    model = fit_method(method, pretrain.matrix, k, seed, **fit_options(cfg))
    atomic_save_reducer(model, path)
    log.info("fitted reducer %s k=%d (%d rows)", method, k, pretrain.matrix.shape[0])
    return model


def atomic_save_reducer(model: ReducerModel, path) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    os.close(fd)
    try:
        save_reducer(model, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# the sweep itself
# ---------------------------------------------------------------------------


def load_task(cfg: ExperimentConfig) -> tuple[EmbeddingTable, TaskDataset]:
    """Load the pretrain table and the task split a config points at."""
    pretrain = load_embeddings(cfg.pretrain)
    train = load_embeddings(cfg.train_embeddings)
    test = load_embeddings(cfg.test_embeddings)
    task = TaskDataset(
        train,
        load_outcomes(cfg.train_outcomes, cfg.task_kind),
        test,
        load_outcomes(cfg.test_outcomes, cfg.task_kind),
        task_name=cfg.task_name,
    )
    if pretrain.dims != task.dims:
        raise DataError(
            f"pretrain dims {pretrain.dims} != task dims {task.dims}"
        )
    return pretrain, task


def reduced_dataset(task: TaskDataset, model: ReducerModel | None) -> TaskDataset:
    if model is None:
        return task
    return TaskDataset(
        transform(model, task.train_features),
        task.train_outcomes,
        transform(model, task.test_features),
        task.test_outcomes,
        task_name=task.task_name,
    )


def cell_seed(master: int, task: str, method: str, k: int, n_ta: int) -> int:
    return derive_seed(master, "cell", task, method, k, n_ta)


def cell_filename(task: str, method: str, k: int, n_ta: int) -> str:
    return f"{slug(task)}__{slug(method)}__k{k}__n{n_ta}.json"


def run_sweep(
    cfg: ExperimentConfig, resume: bool = False, jobs: int = 1
) -> dict[str, Path]:
    """Execute the full grid and write all artifacts under cfg.out_dir."""
    if jobs < 1:
        raise ConfigError(f"jobs must be at least 1, got {jobs}")
    out_dir = Path(cfg.out_dir)
    cells_dir = out_dir / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)

    chash = config_hash(cfg)
    manifest_path = out_dir / "manifest.json"
    if resume and manifest_path.is_file():
        prior = json.loads(manifest_path.read_text(encoding="utf-8"))
        if prior.get("config_hash") != chash:
            raise ConfigError(
                "cannot resume: output directory holds a different config "
                f"(hash {prior.get('config_hash')!r} != {chash!r})"
            )

    pretrain, task = load_task(cfg)
    in_dims = task.dims
    k_grid = cfg.resolved_k_grid(in_dims)
    for k in k_grid:
        if k > in_dims:
            raise ConfigError(f"k={k} exceeds the input dims {in_dims}")
    pretrain_hash = file_sha256(cfg.pretrain)

    # fit or load every reducer up front; k equal to the input width is
    # the no-reduction column and bypasses fitting entirely
    reduced: dict[tuple[str, int], TaskDataset] = {}
    for method in cfg.methods:
        for k in k_grid:
            if k == in_dims:
                reduced[(method, k)] = task
                continue
            model = ensure_reducer(cfg, method, k, pretrain, pretrain_hash, out_dir)
            reduced[(method, k)] = reduced_dataset(task, model)

    plan = [
        (cfg.task_name, method, k, n_ta)
        for method in cfg.methods
        for k in k_grid
        for n_ta in cfg.n_ta_grid
    ]

    def run_cell(coords: tuple[str, str, int, int]) -> BootstrapResult:
        task_name, method, k, n_ta = coords
        path = cells_dir / cell_filename(task_name, method, k, n_ta)
        if resume and path.is_file():
            log.info("cell reused: %s", path.name)
            return result_from_dict(json.loads(path.read_text(encoding="utf-8")))
        res = bootstrap_eval(
            reduced[(method, k)],
            n_ta,
            B=cfg.B,
            seed=cell_seed(cfg.seed, task_name, method, k, n_ta),
            method=method,
            lam=cfg.lam,
            eta=cfg.eta,
            T=cfg.T,
            ci=cfg.ci,
            disattenuate=cfg.disattenuate,
        )
        atomic_write_text(
            path, json.dumps(result_to_dict(res), sort_keys=True, indent=2) + "\n"
        )
        return res

    if jobs == 1:
        results = [run_cell(coords) for coords in plan]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_cell, plan))
    results.sort(key=lambda r: (r.task_name, r.method, r.k, r.n_ta))

    artifacts: dict[str, Path] = {}
    csv_path = out_dir / "results.csv"
    atomic_write_text(csv_path, results_csv(results))
    artifacts["results_csv"] = csv_path

    results_doc = {
        "metadata": {
            "config": cfg.to_dict(),
            "config_hash": chash,
            "in_dims": in_dims,
            "k_grid": list(k_grid),
        },
        "results": [result_to_dict(r) for r in results],
    }
    json_path = out_dir / "results.json"
    atomic_write_text(
        json_path, json.dumps(results_doc, sort_keys=True, indent=2) + "\n"
    )
    artifacts["results_json"] = json_path

    # one first-k-to-peak table per method; the grid key has no method axis
    for method in cfg.methods:
        grid = SweepGrid.from_results([r for r in results if r.method == method])
        report = build_fkp_table(grid, {cfg.task_name: cfg.family})
        base = f"fkp_{slug(method)}"
        fkp_csv_path = out_dir / f"{base}.csv"
        atomic_write_text(fkp_csv_path, fkp_table_csv(report))
        artifacts[f"{base}_csv"] = fkp_csv_path
        fkp_json_path = out_dir / f"{base}.json"
        atomic_write_text(
            fkp_json_path,
            json.dumps(fkp_report_json(report), sort_keys=True, indent=2) + "\n",
        )
        artifacts[f"{base}_json"] = fkp_json_path

    manifest = {
        "config": cfg.to_dict(),
        "config_hash": chash,
        "in_dims": in_dims,
        "k_grid": list(k_grid),
        "pretrain_sha256": pretrain_hash,
        "cells": sorted(cell_filename(*coords) for coords in plan),
        "artifacts": sorted(str(p.relative_to(out_dir)) for p in artifacts.values()),
    }
    atomic_write_text(
        manifest_path, json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )
    artifacts["manifest"] = manifest_path
    return artifacts
