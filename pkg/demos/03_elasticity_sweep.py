"""Distortion against elasticity, VDSOM vs DSOM, on high-dimensional data.

Uses Fashion-MNIST when a ``train-images-idx3-ubyte`` path is given as the
first argument (first 20000 images), otherwise a 64-dimensional Gaussian
mixture of 2000 points. Both methods share a 10x10 toroidal grid and lr=1e-3.
Weight sheets of every run are written as PGM files under ``runs/sweep``.
"""
import sys

from vdsom import cli

data = ["--stream", "mixture"]
if len(sys.argv) > 1:
    data = ["--stream", "idx_file", "--data-path", sys.argv[1], "--data-limit", "20000"]

# %% Equivalent to `vdsom sweep ...`
cli.main(["sweep", "--rows", "10", "--cols", "10", "--topology", "toroidal",
          "--steps", "20000", "--snapshot-steps", "", "--etas", "0.25,0.5,1,2,4",
          "--workers", "4", "--output-dir", "runs/sweep", *data])

# %% The table behind the sensitivity plot
print(open("runs/sweep/sweep.csv").read())
