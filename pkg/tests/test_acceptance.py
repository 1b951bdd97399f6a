"""Release gate: one test per headline guarantee.

Oracles here are recomputed from first principles (dense
eigendecompositions, central finite differences, closed-form solvers,
brute-force scans) instead of shared with the unit suites, so a
regression cannot hide inside a helper both sides import.
"""

import json
import time

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from embred.bootstrap import BootstrapResult
from embred.config import load_config
from embred.corpus import save_embeddings, save_outcomes
from embred.fkp import exponential_median, first_k_to_peak
from embred.linmod import predict, train
from embred.metrics import disattenuated_r, macro_f1, pearson_r
from embred.reducers import fit_fa, fit_nmf, fit_pca
from embred.reducers.nlae import (
    EarlyStopper,
    init_params,
    loss_and_grads,
    reconstruction_loss,
)
from embred.sweep import run_sweep
from embred.synthetic import make_corpus


def test_pca_subspaces_match_dense_eigendecomposition():
    # 20 random matrices up to 64x32; worst principal angle <= 1e-6
    rng = np.random.default_rng(101)
    start = time.monotonic()
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(8, 65))
        d = int(rng.integers(4, 33))
        k = int(rng.integers(1, min(n - 1, d) + 1))
        x = rng.normal(size=(n, d)) * rng.uniform(0.5, 3.0, size=d)
        model = fit_pca(x, k)
        xc = x - x.mean(axis=0)
        evals, evecs = np.linalg.eigh(xc.T @ xc)
        oracle = evecs[:, np.argsort(evals)[::-1][:k]]
        angles = subspace_angles(model.params.components.T, oracle)
        worst = max(worst, float(np.max(angles)))
    assert worst <= 1e-6, f"worst principal angle {worst}"
    assert time.monotonic() - start < 10.0


def test_nmf_objective_monotone_and_rank_one_exact():
    rng = np.random.default_rng(7)
    for trial in range(10):
        x = rng.uniform(0.0, 2.0, size=(50, 20))
        model = fit_nmf(x, 5, iters=300, seed=trial)
        assert len(model.trace) == 301
        diffs = np.diff(np.asarray(model.trace))
        assert (diffs <= 1e-10).all(), f"objective rose by {diffs.max()}"
    x1 = np.array([[1.0], [2.0], [4.0]]) @ np.array([[3.0, 1.0, 0.5, 2.0]])
    model = fit_nmf(x1, 1)
    recon = model.apply(x1) @ model.params.dictionary
    assert np.linalg.norm(recon - x1) < 1e-6


def test_fa_recovers_planted_one_factor_loading():
    rng = np.random.default_rng(19)
    loading = np.array([0.9, -1.2, 0.5, 1.5, -0.7])
    scale = np.array([0.3, 0.5, 0.2, 0.4, 0.6])
    x = np.outer(rng.normal(size=5000), loading) + rng.normal(size=(5000, 5)) * scale
    model = fit_fa(x, 1)
    rec = model.params.loadings[:, 0]
    cos = abs(rec @ loading) / (np.linalg.norm(rec) * np.linalg.norm(loading))
    assert cos >= 0.95, f"|cosine| {cos}"
    diffs = np.diff(np.asarray(model.trace))
    assert (diffs >= -1e-8).all(), f"log-likelihood fell by {-diffs.min()}"


def test_nlae_gradients_and_early_stopping_fixture():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(5, 4)) + 0.5
    params = init_params(4, 2, np.random.default_rng(9))
    _, grads = loss_and_grads(params, x)
    h = 1e-6
    worst = 0.0
    for key, value in params.items():
        for idx in np.ndindex(value.shape):
            orig = value[idx]
            value[idx] = orig + h
            up = reconstruction_loss(params, x)
            value[idx] = orig - h
            down = reconstruction_loss(params, x)
            value[idx] = orig
            numeric = (up - down) / (2 * h)
            analytic = float(grads[key][idx])
            rel = abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))
            worst = max(worst, rel)
    assert worst <= 1e-4, f"max relative gradient error {worst}"

    stopper = EarlyStopper(patience=3)
    losses = [3.0, 2.0, 2.1, 2.2, 2.3]
    flags = [stopper.update(e, l) for e, l in enumerate(losses, start=1)]
    assert flags == [False, False, False, False, True]
    assert stopper.best_epoch == 2


def test_ridge_matches_closed_form_and_logistic_separates():
    rng = np.random.default_rng(23)
    lam = 1.0
    penalty = np.eye(4)
    penalty[0, 0] = 0.0  # intercept stays unpenalized
    worst = 0.0
    for _ in range(5):
        x = rng.normal(size=(20, 3))
        y = rng.normal(size=20)
        model = train(x, y, "ridge", lam=lam, eta=0.05, T=30000)
        xt = np.hstack([np.ones((20, 1)), x])
        oracle = np.linalg.solve(xt.T @ xt + lam * penalty, xt.T @ y)
        worst = max(worst, float(np.max(np.abs(model.theta - oracle))))
    assert worst <= 1e-6, f"max weight deviation {worst}"

    logm = train(np.array([[-1.0], [1.0]]), np.array([0.0, 1.0]), "logistic")
    assert predict(logm, np.array([[-1.0], [1.0]])).tolist() == [0, 1]


def test_metric_fixtures():
    assert disattenuated_r(0.3) == pytest.approx(0.40862, abs=1e-5)
    assert macro_f1(np.array([0, 0, 1, 1]), np.array([0, 0, 0, 0]), 2) == 1 / 3
    x = np.array([1.0, 2.0, 3.0])
    assert pearson_r(x, 2.0 * x) == 1.0
    assert pearson_r(x, -2.0 * x) == -1.0


def test_fkp_matches_brute_force_scan():
    rng = np.random.default_rng(77)
    for _ in range(100):
        n_ks = int(rng.integers(2, 9))
        ks = sorted(rng.choice(2 ** np.arange(1, 11), size=n_ks, replace=False))
        row = {}
        for k in ks:
            mean = float(rng.uniform(0.0, 1.0))
            half = float(rng.uniform(0.0, 0.2))
            row[int(k)] = BootstrapResult(
                task_name="t",
                method="pca",
                k=int(k),
                n_ta=100,
                scores=(mean, mean),
                mean=mean,
                std_error=0.0,
                ci_low=mean - half,
                ci_high=mean + half,
                seed=0,
                model_meta={},
            )
        best = max(row[k].mean for k in ks)
        threshold = next(row[k].ci_low for k in ks if row[k].mean == best)
        expected = next(k for k in ks if row[k].mean >= threshold)
        assert first_k_to_peak(row) == expected
    assert exponential_median([128, 512]) == 256.0


@pytest.fixture(scope="module")
def planted_rank8(tmp_path_factory):
    """768-dim corpus whose outcome signal lives in a rank-8 subspace."""
    root = tmp_path_factory.mktemp("planted")
    corpus = make_corpus()
    save_embeddings(corpus.pretrain, root / "pre.ueb")
    save_embeddings(corpus.task.train_features, root / "train.ueb")
    save_embeddings(corpus.task.test_features, root / "test.ueb")
    save_outcomes(corpus.task.train_outcomes, root / "train_y.csv")
    save_outcomes(corpus.task.test_outcomes, root / "test_y.csv")
    return root


def _sweep_config(root, name, k_grid, n_ta_grid):
    doc = {
        "pretrain": "pre.ueb",
        "train_embeddings": "train.ueb",
        "test_embeddings": "test.ueb",
        "train_outcomes": "train_y.csv",
        "test_outcomes": "test_y.csv",
        "task_name": "synthetic",
        "task_kind": "continuous",
        "seed": 5,
        "out_dir": name,
        "methods": ["pca"],
        "k_grid": k_grid,
        "n_ta_grid": n_ta_grid,
        "B": 10,
    }
    path = root / f"{name}.json"
    path.write_text(json.dumps(doc, indent=2))
    return load_config(path)


def test_reduced_features_match_or_beat_raw_embeddings(planted_rank8):
    start = time.monotonic()
    cfg = _sweep_config(planted_rank8, "gate_raw", [16, 768], [100])
    run_sweep(cfg)
    doc = json.loads((planted_rank8 / "gate_raw" / "results.json").read_text())
    means = {r["k"]: r["mean"] for r in doc["results"]}
    assert set(means) == {16, 768}
    assert means[16] >= means[768]
    assert time.monotonic() - start < 300.0


def test_first_k_to_peak_nondecreasing_in_train_size(planted_rank8):
    cfg = _sweep_config(
        planted_rank8,
        "gate_trend",
        [2, 4, 8, 16, 32, 64, 128, 256, 512, 768],
        [50, 200, 1000],
    )
    run_sweep(cfg)
    doc = json.loads((planted_rank8 / "gate_trend" / "fkp_pca.json").read_text())
    by_n_ta = {row["n_ta"]: row["fkp"]["synthetic"] for row in doc["rows"]}
    fkps = [by_n_ta[n] for n in (50, 200, 1000)]
    assert fkps == sorted(fkps), f"fkp sequence {fkps} decreases"


def test_sweep_reruns_are_byte_identical(experiment):
    root, cfg_path, _ = experiment()
    cfg = load_config(cfg_path)
    names = ["results.csv", "results.json", "fkp_pca.csv", "fkp_pca.json", "manifest.json"]
    run_sweep(cfg)
    first = {n: (root / "run" / n).read_bytes() for n in names}
    run_sweep(cfg)
    second = {n: (root / "run" / n).read_bytes() for n in names}
    assert first == second
