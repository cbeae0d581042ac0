"""Walkthrough: the end-to-end recognition experiment on the synthetic set.

Splits each class in half, trains one-vs-rest SVMs on plain and on
encrypted images (same keys for every image), sweeps the block-grouping
knobs, and reports the equal error rate per cell.  Under the equivalence
conditions the two arms agree exactly; with overlapping blocks the
encrypted arm drifts, and a good (NB, NO) choice can still beat the
baseline.
"""

from etchog import ExperimentConfig, KeySet, run_experiment
from etchog.svm import TrainConfig

cfg = ExperimentConfig(
    dataset_dir=None,  # no dataset -> deterministic synthetic fixture (4 classes x 16)
    e=8,
    grid_size=8,
    cell_size=8,
    bins=10,
    sweep=[(1, 0), (2, 0), (2, 1), (3, 2)],
    kernels=["linear", "gaussian"],  # gaussian gamma defaults to 1/feature-length
    svm=TrainConfig(c=1.0, kkt_tol=1e-5, seed=0),
    keys=KeySet(0x517E, 0xD00D, 0xF00D),
    split_seed=1,
)

result = run_experiment(cfg)

print("results (EER per sweep cell and arm):")
print(f"  {'cell':10s} {'kernel':9s} {'plain':>9s} {'encrypted':>9s}")
cells = {}
for row in result.rows:
    key = (row["condition"], row["kernel"])
    cells.setdefault(key, {})[row["encrypted"]] = row["eer"]
for (condition, kernel), arms in cells.items():
    plain, encrypted = arms.get(False), arms.get(True)
    marker = "  <- arms equal" if abs(plain - encrypted) <= 1e-6 else ""
    print(f"  {condition:10s} {kernel:9s} {plain:9.4f} {encrypted:9.4f}{marker}")

passes = sum(v.startswith("EQUIV pass") for v in result.verdicts)
print(f"\nequivalence verdicts under the NB=1, NO=0 cell: {passes}/{len(result.verdicts)} pass")
print("CSV output:")
print(result.csv(), end="")
