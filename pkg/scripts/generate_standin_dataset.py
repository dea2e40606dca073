#!/usr/bin/env python3
"""Generate the bundled stand-in clinical CSV.

Produces a deterministic file with the documented shape: 699 rows, an id
column, 10 integer-valued feature columns on a 1..10 scale, 16 missing cells
marked "?", and a class column with codes 2 (negative, 458 rows) and
4 (positive, 241 rows). Feature distributions differ by class so a linear
classifier is meaningful. Re-running always reproduces the same file.
"""

import csv
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "fedmls" / "datafiles"
N_NEG = 458
N_POS = 241
N_FEATURES = 10
N_MISSING = 16
SEED = 20240699


def draw_block(rng, n, center, spread):
    vals = rng.normal(center, spread, size=(n, N_FEATURES))
    return np.clip(np.rint(vals), 1, 10).astype(int)


def main():
    rng = np.random.default_rng(SEED)
    neg = draw_block(rng, N_NEG, center=2.8, spread=1.6)
    pos = draw_block(rng, N_POS, center=6.8, spread=2.2)
    features = np.vstack([neg, pos])
    classes = np.array([2] * N_NEG + [4] * N_POS)

    order = rng.permutation(N_NEG + N_POS)
    features = features[order]
    classes = classes[order]

    cells = features.astype(object)
    # missing values concentrated in one column, like typical clinical files
    miss_rows = rng.choice(len(cells), size=N_MISSING, replace=False)
    for r in miss_rows:
        cells[r, 5] = "?"

    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / "wisconsin_breast_cancer.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"f{j}" for j in range(1, N_FEATURES + 1)] + ["class"])
        for i in range(len(cells)):
            writer.writerow([1000000 + i] + list(cells[i]) + [classes[i]])
    print(f"wrote {path} ({len(cells)} rows)")


if __name__ == "__main__":
    main()
