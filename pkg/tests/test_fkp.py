import json
import math

import numpy as np
import pytest

from embred.bootstrap import BootstrapResult
from embred.errors import ConfigError, DataError, IncompleteGridError
from embred.fkp import (
    FkpReport,
    FkpRow,
    SweepGrid,
    build_fkp_table,
    display_k,
    exponential_median,
    first_k_to_peak,
    fkp_report_json,
    fkp_table_csv,
)


def cell(task, n_ta, k, mean, ci_low=None, ci_high=None, seed=0):
    """Minimal valid result with a pinned mean and interval."""
    lo = mean if ci_low is None else ci_low
    hi = mean if ci_high is None else ci_high
    return BootstrapResult(
        task_name=task,
        method="pca",
        k=k,
        n_ta=n_ta,
        scores=(mean, mean),
        mean=mean,
        std_error=0.0,
        ci_low=lo,
        ci_high=hi,
        seed=seed,
        model_meta={"lambda": 1.0, "eta": 0.01, "T": 100},
    )


def row_from_means(means, ci, task="t", n_ta=100):
    """k -> result map where only the peak carries a real interval."""
    peak_k = max(means, key=lambda k: (means[k], -k))
    out = {}
    for k, m in means.items():
        if k == peak_k:
            out[k] = cell(task, n_ta, k, m, ci[0], ci[1])
        else:
            out[k] = cell(task, n_ta, k, m)
    return out


def oracle_fkp(means, peak_ci_low):
    for k in sorted(means):
        if means[k] >= peak_ci_low:
            return k
    raise AssertionError("no k reached the threshold")


class TestFirstKToPeak:
    def test_reference_row(self):
        means = {16: 0.50, 32: 0.58, 64: 0.60, 128: 0.61}
        row = row_from_means(means, ci=(0.59, 0.63))
        assert first_k_to_peak(row) == 64

    def test_single_cell_row(self):
        assert first_k_to_peak({32: cell("t", 50, 32, 0.4)}) == 32

    def test_all_means_equal_returns_smallest(self):
        row = {k: cell("t", 50, k, 0.5, 0.45, 0.55) for k in (16, 32, 64)}
        assert first_k_to_peak(row) == 16

    def test_matches_brute_force_on_random_rows(self):
        rng = np.random.default_rng(17)
        all_ks = [16, 32, 64, 128, 256, 512, 768]
        for _ in range(100):
            ks = sorted(
                rng.choice(all_ks, size=rng.integers(1, 8), replace=False)
            )
            means = {int(k): float(rng.uniform(0.2, 0.8)) for k in ks}
            width = float(rng.uniform(0.01, 0.2))
            peak_mean = max(means.values())
            row = row_from_means(
                means, ci=(peak_mean - width, peak_mean + width)
            )
            assert first_k_to_peak(row) == oracle_fkp(means, peak_mean - width)

    def test_insertion_order_invariance(self):
        means = {16: 0.50, 32: 0.58, 64: 0.60, 128: 0.61}
        forward = row_from_means(means, ci=(0.59, 0.63))
        backward = {k: forward[k] for k in sorted(forward, reverse=True)}
        assert first_k_to_peak(forward) == first_k_to_peak(backward)

    def test_widening_peak_interval_never_increases_fkp(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            ks = [16, 32, 64, 128]
            means = {k: float(rng.uniform(0.2, 0.8)) for k in ks}
            peak_mean = max(means.values())
            narrow = float(rng.uniform(0.005, 0.05))
            wide = narrow + float(rng.uniform(0.0, 0.3))
            fkp_narrow = first_k_to_peak(
                row_from_means(means, ci=(peak_mean - narrow, peak_mean + narrow))
            )
            fkp_wide = first_k_to_peak(
                row_from_means(means, ci=(peak_mean - wide, peak_mean + wide))
            )
            assert fkp_wide <= fkp_narrow

    def test_empty_row_rejected(self):
        with pytest.raises(DataError):
            first_k_to_peak({})

    def test_mixed_rows_rejected(self):
        row = {16: cell("a", 50, 16, 0.5), 32: cell("b", 50, 32, 0.5)}
        with pytest.raises(DataError, match="mixes"):
            first_k_to_peak(row)
        row = {16: cell("a", 50, 16, 0.5), 32: cell("a", 100, 32, 0.5)}
        with pytest.raises(DataError, match="mixes"):
            first_k_to_peak(row)


class TestExponentialMedian:
    def test_symmetric_triple(self):
        assert exponential_median([16, 64, 256]) == 64.0

    def test_even_pair_uses_log_midpoint(self):
        assert exponential_median([128, 512]) == 256.0

    def test_singleton(self):
        assert exponential_median([90]) == 90.0

    def test_equal_values_exact(self):
        assert exponential_median([768, 768, 768]) == 768.0

    def test_non_power_of_two_pair(self):
        assert exponential_median([3, 5]) == pytest.approx(
            math.sqrt(15), abs=1e-12
        )

    def test_stays_within_range(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            ks = rng.integers(1, 1000, size=rng.integers(1, 9)).tolist()
            med = exponential_median(ks)
            assert min(ks) <= med <= max(ks)

    def test_nonpositive_rejected(self):
        with pytest.raises(DataError):
            exponential_median([16, 0])
        with pytest.raises(DataError):
            exponential_median([-4])
        with pytest.raises(DataError):
            exponential_median([])

    def test_display_rounding(self):
        assert display_k(256.0) == 256
        assert display_k(90.50967) == 91
        assert display_k(90.4) == 90


def make_grid(task_targets, n_tas=(50, 100), ks=(16, 64, 256), seed=0):
    """Grid where each task's fkp at every n_ta equals its target k.

    Cells below the target score 0.3, the target and everything above
    score 0.62, and the peak interval's lower bound is 0.6.
    """
    results = []
    for task, target in task_targets.items():
        for n_ta in n_tas:
            for k in ks:
                mean = 0.62 if k >= target else 0.3
                if k == max(ks):
                    results.append(cell(task, n_ta, k, mean, 0.60, 0.64, seed))
                else:
                    results.append(cell(task, n_ta, k, mean, seed=seed))
    return SweepGrid.from_results(results)


class TestSweepGrid:
    def test_axes_inferred_and_sorted(self):
        grid = make_grid({"a": 64})
        assert grid.k_values == (16, 64, 256)
        assert grid.n_ta_values == (50, 100)
        assert grid.tasks == ("a",)

    def test_row_selects_one_task_and_size(self):
        grid = make_grid({"a": 64, "b": 16})
        row = grid.row("a", 50)
        assert sorted(row) == [16, 64, 256]
        assert all(r.task_name == "a" and r.n_ta == 50 for r in row.values())

    def test_duplicate_cells_rejected(self):
        c = cell("a", 50, 16, 0.5)
        with pytest.raises(DataError, match="duplicate"):
            SweepGrid.from_results([c, c])

    def test_key_result_mismatch_rejected(self):
        c = cell("a", 50, 16, 0.5)
        with pytest.raises(DataError):
            SweepGrid({("b", 50, 16): c}, (16,), (50,))

    def test_non_increasing_axes_rejected(self):
        c = cell("a", 50, 16, 0.5)
        with pytest.raises(ConfigError):
            SweepGrid({("a", 50, 16): c}, (16, 16), (50,))

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            SweepGrid.from_results([])


class TestBuildTable:
    def test_single_task_family_passes_through(self):
        grid = make_grid({"solo": 64})
        report = build_fkp_table(grid, {"solo": "fam"})
        assert [r.n_ta for r in report.rows] == [50, 100]
        for row in report.rows:
            assert row.fkps == (64,)
            assert row.exp_median == 64.0

    def test_family_median_across_tasks(self):
        grid = make_grid({"a": 16, "b": 64, "c": 256})
        report = build_fkp_table(grid, {"a": "fam", "b": "fam", "c": "fam"})
        for row in report.rows:
            assert row.fkps == (16, 64, 256)
            assert row.exp_median == 64.0

    def test_family_order_follows_first_appearance(self):
        grid = make_grid({"a": 16, "b": 64, "c": 256})
        families = {"b": "late", "a": "early", "c": "late"}
        report = build_fkp_table(grid, families)
        assert [r.family for r in report.rows[:2]] == ["late", "late"]
        assert report.rows[0].tasks == ("b", "c")

    def test_missing_cell_is_reported(self):
        grid = make_grid({"a": 64, "b": 16})
        trimmed = {
            key: res
            for key, res in grid.cells.items()
            if key != ("b", 100, 64)
        }
        partial = SweepGrid(trimmed, grid.k_values, grid.n_ta_values)
        with pytest.raises(IncompleteGridError) as err:
            build_fkp_table(partial, {"a": "fam", "b": "fam"})
        assert ("b", 100, 64) in err.value.missing

    def test_unassigned_task_rejected(self):
        grid = make_grid({"a": 64, "b": 16})
        with pytest.raises(ConfigError, match="family"):
            build_fkp_table(grid, {"a": "fam"})

    def test_metadata_carries_axes_and_seeds(self):
        grid = make_grid({"a": 64}, seed=9)
        report = build_fkp_table(grid, {"a": "fam"})
        assert report.metadata["seeds"] == (9,)
        assert report.metadata["k_values"] == (16, 64, 256)
        assert report.metadata["replicates"] == 2

    def test_row_invariant_enforced(self):
        with pytest.raises(DataError):
            FkpRow("fam", 50, ("a",), (64,), exp_median=128.0)


class TestEmitters:
    def test_csv_shape_families_by_n_ta(self):
        grid = make_grid(
            {"openness": 16, "swl": 64, "age": 256, "gender": 256},
            n_tas=(50, 100, 200),
        )
        families = {
            "openness": "personality",
            "swl": "personality",
            "age": "demographics",
            "gender": "demographics",
        }
        text = fkp_table_csv(build_fkp_table(grid, families))
        lines = text.strip().split("\n")
        assert lines[0] == "n_ta,personality,demographics"
        assert lines[1] == "50,32,256"
        assert [ln.split(",")[0] for ln in lines[1:]] == ["50", "100", "200"]
        assert len(lines) == 4

    def test_csv_rounds_for_display(self):
        report = FkpReport(
            rows=(FkpRow("fam", 50, ("a", "b"), (64, 128), math.sqrt(64 * 128)),)
        )
        text = fkp_table_csv(report)
        assert text.strip().split("\n")[1] == "50,91"

    def test_json_round_trips_and_keeps_detail(self):
        grid = make_grid({"a": 16, "b": 64})
        report = build_fkp_table(grid, {"a": "fam", "b": "fam"})
        doc = fkp_report_json(report)
        parsed = json.loads(json.dumps(doc))
        first = parsed["rows"][0]
        assert first["fkp"] == {"a": 16, "b": 64}
        assert first["exp_median"] == 32.0
        assert first["exp_median_display"] == 32
        assert parsed["metadata"]["k_values"] == [16, 64, 256]
