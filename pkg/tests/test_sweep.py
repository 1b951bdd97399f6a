import json
from pathlib import Path

import pytest

from embred.bootstrap import bootstrap_eval
from embred.config import config_hash, load_config
from embred.errors import ConfigError
from embred.sweep import (
    RESULTS_HEADER,
    atomic_write_text,
    cell_filename,
    cell_seed,
    result_from_dict,
    result_to_dict,
    run_sweep,
    slug,
)


def read(path):
    return Path(path).read_bytes()


def artifact_bytes(out_dir):
    out_dir = Path(out_dir)
    return {
        name: read(out_dir / name)
        for name in ("results.csv", "results.json", "fkp_pca.csv",
                     "fkp_pca.json", "manifest.json")
    }


class TestArtifacts:
    def test_grid_cardinality_and_header(self, experiment):
        root, cfg_path, _ = experiment()
        cfg = load_config(cfg_path)
        run_sweep(cfg)
        lines = (root / "run" / "results.csv").read_text().strip().split("\n")
        assert lines[0] == RESULTS_HEADER
        assert lines[0] == "task,method,k,n_ta,mean,std_error,ci_low,ci_high,seed"
        assert len(lines) == 1 + 1 * 3 * 2  # methods x k x n_ta

    def test_results_json_structure(self, experiment):
        root, cfg_path, _ = experiment()
        cfg = load_config(cfg_path)
        run_sweep(cfg)
        doc = json.loads((root / "run" / "results.json").read_text())
        assert doc["metadata"]["config_hash"] == config_hash(cfg)
        assert doc["metadata"]["in_dims"] == 16
        assert doc["metadata"]["k_grid"] == [4, 8, 16]
        assert len(doc["results"]) == 6
        for res in doc["results"]:
            assert len(res["scores"]) == cfg.B
            assert res["task"] == "demo"

    def test_manifest_lists_cells_and_artifacts(self, experiment):
        root, cfg_path, _ = experiment()
        cfg = load_config(cfg_path)
        run_sweep(cfg)
        manifest = json.loads((root / "run" / "manifest.json").read_text())
        assert manifest["config_hash"] == config_hash(cfg)
        assert manifest["config"]["seed"] == 7
        assert len(manifest["cells"]) == 6
        assert "results.csv" in manifest["artifacts"]
        for name in manifest["cells"]:
            assert (root / "run" / "cells" / name).is_file()

    def test_no_temp_files_left_behind(self, experiment):
        root, cfg_path, _ = experiment()
        run_sweep(load_config(cfg_path))
        stray = [p for p in (root / "run").rglob("*") if ".tmp" in p.name]
        assert stray == []

    def test_k_above_dims_rejected(self, experiment):
        _, cfg_path, _ = experiment(k_grid=[4, 32])
        with pytest.raises(ConfigError, match="exceeds"):
            run_sweep(load_config(cfg_path))


class TestDeterminism:
    def test_rerun_is_byte_identical(self, experiment):
        root, cfg_path, _ = experiment()
        cfg = load_config(cfg_path)
        run_sweep(cfg)
        first = artifact_bytes(root / "run")
        run_sweep(cfg)
        assert artifact_bytes(root / "run") == first

    def test_parallel_run_matches_serial(self, experiment):
        root, cfg_path, _ = experiment()
        cfg = load_config(cfg_path)
        run_sweep(cfg, jobs=1)
        serial = artifact_bytes(root / "run")
        run_sweep(cfg, jobs=4)
        assert artifact_bytes(root / "run") == serial

    def test_identity_cell_matches_direct_bootstrap(self, experiment):
        # k equal to the input width must evaluate the raw features
        root, cfg_path, corpus = experiment()
        cfg = load_config(cfg_path)
        run_sweep(cfg)
        doc = json.loads((root / "run" / "results.json").read_text())
        cell = next(
            r for r in doc["results"] if r["k"] == 16 and r["n_ta"] == 40
        )
        direct = bootstrap_eval(
            corpus.task,
            40,
            B=cfg.B,
            seed=cell_seed(cfg.seed, "demo", "pca", 16, 40),
            method="pca",
        )
        assert tuple(cell["scores"]) == direct.scores

    def test_seed_changes_artifacts(self, experiment):
        root, cfg_path, _ = experiment()
        run_sweep(load_config(cfg_path))
        first = read(root / "run" / "results.csv")
        run_sweep(load_config(cfg_path, {"seed": 8}))
        assert read(root / "run" / "results.csv") != first


class TestResume:
    def test_resume_reuses_cells_and_matches_clean_run(self, experiment):
        root, cfg_path, _ = experiment()
        cfg = load_config(cfg_path)
        run_sweep(cfg)
        clean = artifact_bytes(root / "run")
        cells = sorted((root / "run" / "cells").glob("*.json"))
        assert len(cells) == 6

        # simulate an interrupted run: drop two cells and all reports
        for victim in cells[:2]:
            victim.unlink()
        for name in ("results.csv", "results.json", "fkp_pca.csv", "fkp_pca.json"):
            (root / "run" / name).unlink()
        kept_stamps = {p.name: p.stat().st_mtime_ns for p in cells[2:]}

        run_sweep(cfg, resume=True)
        assert artifact_bytes(root / "run") == clean
        for p in cells[2:]:
            assert p.stat().st_mtime_ns == kept_stamps[p.name]

    def test_resume_rejects_config_change(self, experiment):
        root, cfg_path, _ = experiment()
        run_sweep(load_config(cfg_path))
        with pytest.raises(ConfigError, match="resume"):
            run_sweep(load_config(cfg_path, {"B": 5}), resume=True)

    def test_fresh_run_ignores_stale_cells(self, experiment):
        # without --resume the cells are recomputed, not trusted
        root, cfg_path, _ = experiment()
        cfg = load_config(cfg_path)
        run_sweep(cfg)
        cells = sorted((root / "run" / "cells").glob("*.json"))
        poisoned = json.loads(cells[0].read_text())
        poisoned["mean"] = 0.999
        poisoned["ci_low"] = 0.998
        poisoned["ci_high"] = 1.0
        poisoned["scores"] = [0.999] * len(poisoned["scores"])
        atomic_write_text(cells[0], json.dumps(poisoned))
        clean = read(root / "run" / "results.csv")
        run_sweep(cfg)
        assert read(root / "run" / "results.csv") == clean
        assert "0.999" not in (root / "run" / "results.csv").read_text()


class TestReducerCache:
    def test_cache_hit_on_second_run(self, experiment):
        root, cfg_path, _ = experiment()
        cfg = load_config(cfg_path)
        run_sweep(cfg)
        reducers = sorted((root / "run" / "reducers").glob("*.edr"))
        # k=16 equals the input width, so only k=4 and k=8 fit reducers
        assert len(reducers) == 2
        stamps = {p.name: p.stat().st_mtime_ns for p in reducers}
        run_sweep(cfg)
        for p in reducers:
            assert p.stat().st_mtime_ns == stamps[p.name]

    def test_cache_key_includes_seed(self, experiment):
        root, cfg_path, _ = experiment()
        run_sweep(load_config(cfg_path))
        run_sweep(load_config(cfg_path, {"seed": 8}))
        assert len(list((root / "run" / "reducers").glob("*.edr"))) == 4


class TestSerialization:
    def test_result_round_trip(self, experiment):
        _, _, corpus = experiment()
        res = bootstrap_eval(corpus.task, 20, B=3, seed=5, method="pca")
        again = result_from_dict(
            json.loads(json.dumps(result_to_dict(res)))
        )
        assert again == res

    def test_cell_filename_is_sanitized(self):
        name = cell_filename("life satisfaction/swl", "pca", 16, 50)
        assert name == "life-satisfaction-swl__pca__k16__n50.json"
        assert slug("a b/c\\d") == "a-b-c-d"
