"""Exit criteria for the package, one test per criterion (sub-criteria split).

Each test records a PASS/FAIL line that is printed in the pytest summary.
Set ``VDSOM_FASHION_MNIST`` to a Fashion-MNIST ``train-images-idx3-ubyte``
file to run criterion 5 on real images; otherwise a seeded 64-dimensional
Gaussian mixture is used.
"""

import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from vdsom import cli
from vdsom.data import StreamSpec, derive_seed, idx_bytes, load_idx_images, write_idx_images
from vdsom.dsom import DsomState, dsom_step
from vdsom.gradcheck import run_gradcheck
from vdsom.grid import GridSpec, build_grid
from vdsom.metrics import distortion, organization_score
from vdsom.runner import run_sweep, run_train
from vdsom.variational import responsibilities

from test_metrics import brute_distortion


def report(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    assert ok, detail


def paper_config(**overrides):
    """The moons-to-circles setup with CLI defaults, overridden per key."""
    raw = {k: str(v) for k, v in overrides.items()}
    return cli.build_run_config(cli.resolve(raw, cli.KEYS))


# -- 1 -----------------------------------------------------------------------

def test_1_gradient_oracle_suite():
    start = time.perf_counter()
    derived = run_gradcheck(243, seed=0)
    printed = run_gradcheck(243, seed=0, paper_exact_gsigma=True)
    elapsed = time.perf_counter() - start
    ok = derived.passed and not printed.passed and elapsed < 10.0
    report(
        "1",
        ok,
        f"{derived.trials} configs, max rel err {derived.max_rel_error:.2e} (< 1e-4); "
        f"printed-eta variant fails {printed.failures} configs; {elapsed:.2f}s (< 10s)",
    )


# -- 2 -----------------------------------------------------------------------

def test_2_responsibility_invariants():
    grid = build_grid(GridSpec(15, 15))
    start = time.perf_counter()
    worst = 0.0
    finite = True
    for sigma in (1e-3, 1.0, 1e3):
        for winner in range(grid.n):
            q = responsibilities(grid, winner, sigma, 1.0)
            worst = max(worst, abs(q.sum() - 1.0))
            finite &= bool(np.all(np.isfinite(q)))
    elapsed = time.perf_counter() - start
    report("2", worst <= 1e-12 and finite and elapsed < 1.0,
           f"max |sum q - 1| = {worst:.1e} (<= 1e-12), finite={finite}, {elapsed:.3f}s (< 1s)")


# -- 3 -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def mutate_run():
    config = paper_config(steps=15000, switch_step=7500, snapshot_steps="", output_dir="")
    start = time.perf_counter()
    log = run_train(config)
    return config, log, time.perf_counter() - start


def test_3a_sigma_spike_after_switch(mutate_run):
    _, log, elapsed = mutate_run
    before, after = log.at(7000).sigma, log.at(8000).sigma
    ratio = after / before
    report("3a", ratio >= 1.2 and elapsed < 120,
           f"sigma(8000)/sigma(7000) = {after:.4g}/{before:.4g} = {ratio:.2f} (>= 1.2); run {elapsed:.1f}s")


def test_3b_distortion_drops(mutate_run):
    _, log, _ = mutate_run
    early, final = log.at(100).distortion, log.records[-1].distortion
    report("3b", final < early / 5,
           f"final distortion {final:.4g} vs step-100 distortion {early:.4g} (need < {early / 5:.4g})")


def test_3c_final_map_organized(mutate_run):
    config, log, _ = mutate_run
    grid = build_grid(config.grid)
    adjacent, random = organization_score(grid, log.final_state.weights, np.random.default_rng(0))
    report("3c", adjacent < 0.8 * random,
           f"adjacent mean {adjacent:.4f} vs random mean {random:.4f} (need < {0.8 * random:.4f})")


# -- 4 -----------------------------------------------------------------------

def test_4_sigma_shrinks_on_stationary_data():
    config = paper_config(steps=7500, stream="moons", snapshot_steps="", output_dir="")
    log = run_train(config)
    steps, sigma = log.column("step"), log.column("sigma")
    # mean logged sigma over consecutive 1000-step windows [2000, 3000), [3000, 4000), ...
    means = [sigma[(steps >= lo) & (steps < lo + 1000)].mean() for lo in range(2000, 7000, 1000)]
    worst = max(b / a for a, b in zip(means, means[1:]))
    report("4", worst <= 1.05,
           f"window-mean sigma from step 2000: {', '.join(f'{s:.3g}' for s in means)}; "
           f"largest window-to-window ratio {worst:.3f} (<= 1.05)")


# -- 5 -----------------------------------------------------------------------

def _comparison_stream():
    path = os.environ.get("VDSOM_FASHION_MNIST")
    if path and os.path.exists(path):
        return StreamSpec("idx_file", path=path, limit=2000, seed=derive_seed(0, 1)), "Fashion-MNIST"
    return StreamSpec("mixture", seed=derive_seed(0, 1), mixture_size=2000, mixture_dim=64,
                      mixture_components=10), "64-d Gaussian mixture"


def test_5_vdsom_beats_dsom_and_is_less_sensitive():
    stream, label = _comparison_stream()
    base = paper_config(rows=10, cols=10, topology="toroidal", steps=20000,
                        snapshot_steps="", output_dir="")
    base = type(base)(**{**base.__dict__, "stream": stream})
    start = time.perf_counter()
    rows = run_sweep(base, [0.5, 1.0, 2.0, 4.0], workers=min(4, os.cpu_count() or 1))
    elapsed = time.perf_counter() - start
    assert not any(r.error for r in rows)
    by_alg = {a: [r.distortion for r in rows if r.algorithm == a] for a in ("vdsom", "dsom")}
    v, d = np.array(by_alg["vdsom"]), np.array(by_alg["dsom"])
    spread_v, spread_d = v.max() / v.min(), d.max() / d.min()
    ok = v.min() <= d.min() and spread_v < spread_d and elapsed < 600
    report("5", ok,
           f"{label}: min distortion VDSOM {v.min():.4g} vs DSOM {d.min():.4g}; "
           f"spread VDSOM {spread_v:.2f} vs DSOM {spread_d:.2f}; {elapsed:.0f}s (< 600s)")


# -- 6 -----------------------------------------------------------------------

def test_6_dsom_contract():
    grid = build_grid(GridSpec(3, 3))
    state = DsomState(np.random.default_rng(1).normal(size=(9, 2)), 1.0, 0.3)
    hit = dsom_step(state, grid, state.weights[2].copy())
    unchanged = np.array_equal(hit.weights, state.weights)
    single = dsom_step(DsomState(np.zeros((1, 2)), 1.0, 0.5), build_grid(GridSpec(1, 1)),
                       np.array([1.0, 0.0]))
    closed = np.array_equal(single.weights, [[0.5, 0.0]])
    report("6", unchanged and closed,
           f"no update at winner: {unchanged}; single-node step gives {single.weights[0].tolist()}")


# -- 7 -----------------------------------------------------------------------

def test_7_metric_oracles(tmp_path):
    rng = np.random.default_rng(77)
    mismatches = 0
    for _ in range(100):
        m = int(rng.integers(1, 7))
        weights = rng.normal(size=(int(rng.integers(1, 30)), m))
        samples = rng.normal(size=(int(rng.integers(1, 101)), m))
        mismatches += distortion(weights, samples) != brute_distortion(weights, samples)
    raw = rng.integers(0, 256, size=(3, 5, 4), dtype=np.uint8)
    original = bytes.fromhex("00000803") + (3).to_bytes(4, "big") + (5).to_bytes(4, "big") \
        + (4).to_bytes(4, "big") + raw.tobytes()
    path = tmp_path / "three.idx3-ubyte"
    path.write_bytes(original)
    images = load_idx_images(path)
    copy = tmp_path / "copy.idx3-ubyte"
    write_idx_images(copy, images.vectors, *images.shape)
    round_trip = copy.read_bytes() == original and idx_bytes(images.vectors, 5, 4) == original
    report("7", mismatches == 0 and round_trip,
           f"distortion vs brute force: {mismatches}/100 mismatches; IDX 3-image round trip: {round_trip}")


# -- 8 -----------------------------------------------------------------------

def test_8_train_is_deterministic(tmp_path):
    common = ["--rows", "5", "--cols", "5", "--steps", "600", "--switch-step", "300",
              "--log-interval", "50", "--snapshot-steps", "0,300", "--eval-size", "128"]
    image = ["--stream", "mixture", "--mixture-size", "200", "--mixture-dim", "16",
             "--topology", "toroidal"]
    compared = 0
    identical = True
    for name, extra in (("moons", []), ("images", image)):
        dirs = [tmp_path / f"{name}{k}" for k in range(2)]
        for out in dirs:
            assert cli.main(["train", *common, *extra, "--output-dir", str(out)]) == 0
        files = sorted(p.name for p in dirs[0].iterdir() if p.suffix in (".csv", ".svg", ".pgm"))
        assert files == sorted(p.name for p in dirs[1].iterdir() if p.suffix in (".csv", ".svg", ".pgm"))
        for f in files:
            compared += 1
            identical &= (dirs[0] / f).read_bytes() == (dirs[1] / f).read_bytes()
    kinds = {f.suffix for d in tmp_path.iterdir() for f in d.iterdir()}
    ok = identical and {".csv", ".svg", ".pgm"} <= kinds
    report("8", ok, f"{compared} CSV/SVG/PGM files compared across repeated runs, identical={identical}")
