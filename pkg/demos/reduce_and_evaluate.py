"""Fit a reducer on unlabeled rows, then score a task at several widths.

The corpus is synthetic: 768-dimensional user vectors whose outcome
signal lives in a rank-8 subspace. That mirrors the situation the
toolkit targets, where wide embeddings carry a low-dimensional signal
and a small labeled sample cannot afford the full width.
"""

import numpy as np

from embred.bootstrap import bootstrap_eval
from embred.corpus import TaskDataset
from embred.reducers import fit_pca, transform
from embred.synthetic import make_corpus

# A pretrain pool plus a labeled train/test split. Only the pretrain
# rows are allowed to shape the reduction; labels never touch it.
corpus = make_corpus(n_train=600, n_test=300, n_pretrain=800, dims=256, rank=8, seed=3)
task = corpus.task
print(f"pretrain rows: {corpus.pretrain.rows}, task dims: {task.dims}")

# Evaluate the same task at a few reduced widths and at full width.
# n_ta=80 labeled users per replicate is the interesting regime: far
# fewer samples than raw dimensions.
for k in (8, 32, 256):
    if k == task.dims:
        reduced = task  # full width needs no reducer
        label = f"k={k} (no reduction)"
    else:
        model = fit_pca(corpus.pretrain.matrix, k, seed=0)
        reduced = TaskDataset(
            train_features=transform(model, task.train_features),
            train_outcomes=task.train_outcomes,
            test_features=transform(model, task.test_features),
            test_outcomes=task.test_outcomes,
            task_name=task.task_name,
        )
        label = f"k={k}"
    result = bootstrap_eval(reduced, n_ta=80, B=10, seed=42)
    print(
        f"{label:>22}: mean r = {result.mean:.3f} "
        f"[{result.ci_low:.3f}, {result.ci_high:.3f}] "
        f"over {len(result.scores)} replicates"
    )

# The rank of the planted signal is 8, so k=8 keeps everything that
# matters while the estimator sees 32x fewer weights than at k=256.
print()
print("scores per replicate at k=8:")
model = fit_pca(corpus.pretrain.matrix, 8, seed=0)
reduced = TaskDataset(
    train_features=transform(model, task.train_features),
    train_outcomes=task.train_outcomes,
    test_features=transform(model, task.test_features),
    test_outcomes=task.test_outcomes,
    task_name=task.task_name,
)
result = bootstrap_eval(reduced, n_ta=80, B=10, seed=42)
print(np.round(result.scores, 3))
