"""
Robustness to clutter and outliers
==================================

Sweep the outlier fraction at fixed clutter and noise and compare mean
matching accuracy of the three matchers over 50 seeds. The CSV written here
is the same format `houghcl bench` produces.
"""

from pathlib import Path

from houghcl import run_experiment, scenario_grid
from houghcl.formats import records_to_csv

matchers = ["argmax", "warped", "hough"]
outliers = [0.0, 0.1, 0.2, 0.3, 0.5]
result = run_experiment(scenario_grid(matchers, outliers, [0.3], [0.1]), n_seeds=50, master_seed=0)

print("outlier_frac " + " ".join(f"{m:>8s}" for m in matchers))
for o in outliers:
    row = " ".join(f"{result.mean_accuracy(m, outlier_frac=o):8.3f}" for m in matchers)
    print(f"{o:12.2f} {row}")

out = Path("robustness.csv")
out.write_text(records_to_csv(result.records))
print(f"wrote {len(result.records)} records to {out}")
