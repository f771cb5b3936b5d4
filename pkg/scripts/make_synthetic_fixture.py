#!/usr/bin/env python3
"""Generate the bundled synthetic abundance fixture (committed CSVs).

Nine layers with varying site counts over 18 entities.  The first sixteen
entities fall into two latent groups with correlated site profiles, so the
fused networks carry real community structure.  sp017 is absent everywhere
(removed by filter pass 1) and sp018 is absent only in layer03 (removed by
pass 2), leaving 16 entities.  Rerunning reproduces the files byte-for-byte.
"""

from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "synthetic"
SITE_COUNTS = [11, 15, 20, 15, 15, 15, 23, 15, 11]
N_ENTITIES = 18


def main():
    rng = np.random.default_rng(20240917)
    OUT.mkdir(parents=True, exist_ok=True)
    entities = [f"sp{i:03d}" for i in range(1, N_ENTITIES + 1)]
    groups = [0] * 8 + [1] * 8  # latent groups for sp001..sp016
    for idx, p in enumerate(SITE_COUNTS, start=1):
        name = f"layer{idx:02d}"
        base = rng.uniform(0.05, 1.0, (2, p))
        values = np.empty((N_ENTITIES, p))
        for row in range(16):
            noise = rng.uniform(0.0, 1.0, p)
            values[row] = 0.75 * base[groups[row]] + 0.25 * noise
        values[16:] = rng.uniform(0.05, 1.0, (2, p))
        sparse = rng.random((N_ENTITIES, p)) < 0.1
        values[sparse] = 0.0
        # keep at least one positive measurement per ordinary entity
        for row in range(16):
            if not (values[row] > 0).any():
                values[row, rng.integers(0, p)] = rng.uniform(0.1, 1.0)
        values[16] = 0.0                      # sp017: absent everywhere
        if idx == 3:
            values[17] = 0.0                  # sp018: absent in layer03 only
        lines = ["entity," + ",".join(f"s{j:02d}" for j in range(1, p + 1))]
        for ent, row in zip(entities, values):
            lines.append(ent + "," + ",".join(f"{v:.6f}" for v in row))
        (OUT / f"{name}.csv").write_text("\n".join(lines) + "\n")
        print(f"wrote {name}.csv ({N_ENTITIES} x {p})")


if __name__ == "__main__":
    main()
