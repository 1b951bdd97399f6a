"""Run a full sweep from a config file and walk through its artifacts.

Everything lands in a scratch directory: per-cell JSON documents, the
combined results table, one first-k-to-peak report per method, SVG
panels, and a manifest with content hashes. Re-running the script
produces byte-identical artifacts because every cell derives its RNG
seed from (seed, task, method, k, n_ta) rather than from position.
"""

import json
import tempfile
from pathlib import Path

from embred.config import load_config
from embred.corpus import save_embeddings, save_outcomes
from embred.plots import plot_results
from embred.sweep import run_sweep
from embred.synthetic import make_corpus

root = Path(tempfile.mkdtemp(prefix="sweep_demo_"))

# Materialize a small corpus the way a real experiment would store it:
# one pretrain table, task features and outcomes split train/test.
corpus = make_corpus(
    n_train=300, n_test=200, n_pretrain=400, dims=64, rank=4, seed=9,
    task_name="demo_task",
)
save_embeddings(corpus.pretrain, root / "pre.ueb")
save_embeddings(corpus.task.train_features, root / "train.ueb")
save_embeddings(corpus.task.test_features, root / "test.ueb")
save_outcomes(corpus.task.train_outcomes, root / "train_y.csv")
save_outcomes(corpus.task.test_outcomes, root / "test_y.csv")

config_doc = {
    "pretrain": "pre.ueb",
    "train_embeddings": "train.ueb",
    "test_embeddings": "test.ueb",
    "train_outcomes": "train_y.csv",
    "test_outcomes": "test_y.csv",
    "task_name": "demo_task",
    "task_kind": "continuous",
    "seed": 13,
    "out_dir": "out",
    "methods": ["pca", "nmf"],
    "k_grid": [4, 16, 64],  # 64 equals the input width: the no-reduction column
    "n_ta_grid": [40, 160],
    "B": 10,
}
cfg_path = root / "config.json"
cfg_path.write_text(json.dumps(config_doc, indent=2))

cfg = load_config(cfg_path)
artifacts = run_sweep(cfg)
for name, path in sorted(artifacts.items()):
    print(f"{name:>12}: {path.relative_to(root)}")

# The results table has one row per (task, method, k, n_ta) cell.
print()
print((root / "out" / "results.csv").read_text().splitlines()[0])
doc = json.loads((root / "out" / "results.json").read_text())
for row in doc["results"]:
    print(
        f"  {row['method']:>4} k={row['k']:>3} n_ta={row['n_ta']:>4} "
        f"mean={row['mean']:.3f} ci=[{row['ci_low']:.3f}, {row['ci_high']:.3f}]"
    )

# Each method gets its own first-k-to-peak table: the smallest k whose
# mean lands inside the peak cell's confidence interval, per n_ta.
print()
for method in config_doc["methods"]:
    print(f"fkp table for {method}:")
    print((root / "out" / f"fkp_{method}.csv").read_text())

# SVG panels: score vs log2(k), one polyline per n_ta, the dashed
# reference line marking the no-reduction score at the largest n_ta.
written = plot_results(doc, root / "plots")
print("plots:", ", ".join(p.name for p in written))
print(f"\nartifacts kept under {root}")
