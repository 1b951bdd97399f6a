"""The first-k-to-peak rule, traced by hand on a made-up score grid.

A row of cells shares one task and one labeled-sample budget n_ta and
varies only the reduced width k. The peak is the best mean; fkp is the
smallest k whose mean already reaches the peak's lower confidence
bound. Families of tasks are then summarized by the exponential
median: 2 raised to the median of log2(fkp).
"""

from embred.bootstrap import BootstrapResult
from embred.fkp import (
    SweepGrid,
    build_fkp_table,
    display_k,
    exponential_median,
    first_k_to_peak,
    fkp_table_csv,
)


def cell(task, k, n_ta, mean, half_width):
    """A minimal evaluated cell; scores collapse to the mean."""
    return BootstrapResult(
        task_name=task,
        method="pca",
        k=k,
        n_ta=n_ta,
        scores=(mean, mean),
        mean=mean,
        std_error=0.0,
        ci_low=mean - half_width,
        ci_high=mean + half_width,
        seed=0,
        model_meta={},
    )


# One row: means rise to a peak at k=64 and flatten afterwards. The
# peak's interval is [0.58, 0.62]; k=16 is the first mean inside it.
row = {
    4: cell("age", 4, 100, 0.41, 0.02),
    16: cell("age", 16, 100, 0.59, 0.02),
    64: cell("age", 64, 100, 0.60, 0.02),
    256: cell("age", 256, 100, 0.58, 0.02),
}
print("means by k:", {k: row[k].mean for k in sorted(row)})
print("peak interval:", (row[64].ci_low, row[64].ci_high))
print("first k to peak:", first_k_to_peak(row))

# Summarizing fkp values across tasks: the log-scale median respects
# the power-of-2 grid. An even count lands between grid points, which
# is why reports carry both the exact value and a rounded display one.
fkps = [16, 64, 256, 128]
med = exponential_median(fkps)
print()
print(f"exponential_median({fkps}) = {med} -> displayed as {display_k(med)}")
print(f"exponential_median([128, 512]) = {exponential_median([128, 512])}")

# The full table machinery starts from a grid of cells covering every
# (task, n_ta, k) combination and groups tasks into named families.
cells = {}
targets = {"age": {50: 16, 200: 64}, "openness": {50: 4, 200: 16}}
for task, per_n in targets.items():
    for n_ta, target_k in per_n.items():
        for k in (4, 16, 64):
            near = 0.6 if k >= target_k else 0.3
            cells[(task, n_ta, k)] = cell(task, k, n_ta, near, 0.05)

grid = SweepGrid(cells=cells, k_values=(4, 16, 64), n_ta_values=(50, 200))
report = build_fkp_table(grid, {"age": "demographics", "openness": "personality"})
print()
print(fkp_table_csv(report))
