"""Tracking a distribution that changes mid-run.

A 15x15 planar map (coordinates in [-1, 1], eta=1, sigma0=5) is trained with
Adam at lr=1e-3 for 60000 steps: moons for the first half, circles for the
second. SVG snapshots every 7500 steps and the sigma/distortion series land
in ``runs/mutate``. Pass a smaller ``--steps`` for a quick look.
"""
import sys

import numpy as np

from vdsom import cli
from vdsom.render import read_csv

out = "runs/mutate"
steps = int(sys.argv[sys.argv.index("--steps") + 1]) if "--steps" in sys.argv else 60000
half = steps // 2
snapshots = ",".join(str(k) for k in range(0, steps + 1, max(steps // 8, 1)))

# %% Train; equivalent to `vdsom train --steps ... --output-dir runs/mutate`
cli.main(["train", "--steps", str(steps), "--switch-step", str(half),
          "--snapshot-steps", snapshots, "--output-dir", out])

# %% sigma jumps when the data changes, then shrinks again as the map resettles
rows = np.array(read_csv(f"{out}/log.csv"))
step, sigma, dist = rows[:, 0], rows[:, 1], rows[:, 2]
for k in (half - 2000, half - 500, half + 500, half + 2000, steps):
    i = np.searchsorted(step, k)
    print(f"step {int(step[i]):6d}  sigma {sigma[i]:.4f}  distortion {dist[i]:.5f}")
print(f"snapshots: {out}/map_*.svg")
