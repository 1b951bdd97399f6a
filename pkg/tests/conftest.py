import json
from pathlib import Path

import pytest

from embred.corpus import save_embeddings, save_outcomes
from embred.synthetic import make_corpus


@pytest.fixture
def experiment(tmp_path):
    """Materialize a small synthetic experiment on disk.

    Returns (root, config_path, corpus); keyword overrides land in the
    config document before validation.
    """

    def build(kind="continuous", dims=16, rank=4, **overrides):
        corpus = make_corpus(
            n_train=70,
            n_test=50,
            n_pretrain=90,
            dims=dims,
            rank=rank,
            kind=kind,
            seed=1,
            noise=0.8,
            task_name=overrides.get("task_name", "demo"),
        )
        save_embeddings(corpus.pretrain, tmp_path / "pre.ueb")
        save_embeddings(corpus.task.train_features, tmp_path / "train.ueb")
        save_embeddings(corpus.task.test_features, tmp_path / "test.ueb")
        save_outcomes(corpus.task.train_outcomes, tmp_path / "train_y.csv")
        save_outcomes(corpus.task.test_outcomes, tmp_path / "test_y.csv")
        doc = {
            "pretrain": "pre.ueb",
            "train_embeddings": "train.ueb",
            "test_embeddings": "test.ueb",
            "train_outcomes": "train_y.csv",
            "test_outcomes": "test_y.csv",
            "task_name": "demo",
            "task_kind": kind,
            "seed": 7,
            "out_dir": "run",
            "methods": ["pca"],
            "k_grid": [4, 8, dims],
            "n_ta_grid": [20, 40],
            "B": 4,
        }
        doc.update(overrides)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(doc, indent=2))
        return tmp_path, cfg_path, corpus

    return build
