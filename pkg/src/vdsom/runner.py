"""Training runs, elasticity sweeps and their file outputs."""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import render
from .data import StreamSpec, derive_seed, eval_batch, image_shape, open_stream, phase_at
from .dsom import DsomState, dsom_step, effective_sigma
from .grid import GridSpec, build_grid
from .metrics import TrainLog, distortion
from .optim import AdamState, adam_step, sgd_step
from .variational import MapState, VdsomConfig, batch_objective, gradient

log = logging.getLogger(__name__)

# samples of the held-out batch used for the logged objective / DSOM sigma columns
_OBJECTIVE_SAMPLES = 64
# samples drawn into SVG snapshots
_SVG_SAMPLES = 500


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec = GridSpec(15, 15)
    eta: float = 1.0
    sigma0: float = 5.0
    lr: float = 1e-3
    steps: int = 60000
    optimizer: str = "adam"
    algorithm: str = "vdsom"
    stream: StreamSpec = StreamSpec()
    seed: int = 0
    log_interval: int = 100
    snapshot_steps: tuple = ()
    output_dir: Optional[str] = None
    sigma_min: float = 1e-4
    paper_exact_gsigma: bool = False
    eval_size: int = 1024
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        checks = [
            (self.sigma0 > 0, "sigma0 must be positive"),
            (self.eta > 0, "eta must be positive"),
            (self.lr >= 0, "lr must be non-negative"),
            (self.steps >= 1, "steps must be at least 1"),
            (self.log_interval >= 1, "log_interval must be at least 1"),
            (self.sigma_min > 0, "sigma_min must be positive"),
            (self.eval_size >= 1, "eval_size must be at least 1"),
            (self.optimizer in ("adam", "sgd"), f"unknown optimizer {self.optimizer!r}"),
            (self.algorithm in ("vdsom", "dsom"), f"unknown algorithm {self.algorithm!r}"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)


def initial_weights(config, n, m):
    """Independent standard-normal weight components, seeded by the run seed."""
    rng = np.random.Generator(np.random.PCG64(derive_seed(config.seed, 0)))
    return rng.normal(size=(n, m))


class _Evaluator:
    """Caches one held-out batch per stream phase."""

    def __init__(self, config):
        self.config = config
        self.batches = {}

    def batch(self, step):
        leaf = phase_at(self.config.stream, step)
        if leaf not in self.batches:
            self.batches[leaf] = eval_batch(leaf, self.config.eval_size)
        return self.batches[leaf]


def _snapshot(config, grid, weights, step, samples, shape, label=None):
    out = config.output_dir
    label = label or f"{step:06d}"
    if weights.shape[1] == 2:
        render.write_map_svg(
            grid, weights, os.path.join(out, f"map_{label}.svg"), samples=samples[:_SVG_SAMPLES]
        )
    if shape is not None and shape[0] * shape[1] == weights.shape[1]:
        render.write_weight_tiles_pgm(
            weights, shape[0], shape[1], grid.rows, grid.cols,
            os.path.join(out, f"weights_{label}.pgm"),
        )


def run_train(config, write=True):
    """Train one map and return its TrainLog.

    Records are taken at step 0, every ``log_interval`` steps and at the last
    step. With ``write`` and an ``output_dir``, ``log.csv`` is written together
    with snapshots at each of ``snapshot_steps`` and at the final step: an SVG
    when observations are 2D, a PGM tile sheet when they are images.
    """
    grid = build_grid(config.grid)
    stream = open_stream(config.stream)
    weights = initial_weights(config, grid.n, stream.dim)
    evaluator = _Evaluator(config)
    write = write and config.output_dir is not None
    shape = image_shape(config.stream) if write else None
    snapshots = set(config.snapshot_steps) | {config.steps}
    if write:
        os.makedirs(config.output_dir, exist_ok=True)

    cfg = VdsomConfig(config.eta, config.sigma_min, config.paper_exact_gsigma)
    if config.algorithm == "vdsom":
        state = MapState(weights, config.sigma0)
        adam = AdamState(config.lr, config.adam_beta1, config.adam_beta2, config.adam_eps)
    else:
        state = DsomState(weights, config.eta, config.lr)

    train_log = TrainLog()

    def record(step):
        batch = evaluator.batch(step)
        head = batch[:_OBJECTIVE_SAMPLES]
        if config.algorithm == "vdsom":
            sigma = state.sigma
            objective = batch_objective(grid, state, cfg, head)
        else:
            sigma = float(np.mean([effective_sigma(state, x) for x in head]))
            objective = float("nan")
        train_log.append(step, sigma, distortion(state.weights, batch), objective)
        if step in snapshots:
            train_log.snapshots[step] = state.weights.copy()
            if write:
                _snapshot(config, grid, state.weights, step, batch, shape)

    record(0)
    for step in range(1, config.steps + 1):
        try:
            x = stream.next()
            if config.algorithm == "dsom":
                state = dsom_step(state, grid, x)
            else:
                grad = gradient(grid, state, cfg, x)
                if config.optimizer == "adam":
                    adam, state = adam_step(adam, state, grad, config.sigma_min)
                else:
                    state = sgd_step(state, grad, config.lr, config.sigma_min)
        except (ValueError, FloatingPointError, OSError) as exc:
            raise TrainingError(f"step {step}: {exc}") from exc
        if step % config.log_interval == 0 or step == config.steps or step in snapshots:
            record(step)

    if write:
        render.write_csv(train_log, os.path.join(config.output_dir, "log.csv"))
    train_log.final_state = state
    return train_log


@dataclass
class SweepRow:
    algorithm: str
    eta: float
    distortion: float
    error: Optional[str] = field(default=None)


def _sweep_job(config):
    try:
        train_log = run_train(config)
        return train_log.records[-1].distortion, None
    except Exception as exc:  # one failed run must not abort its siblings
        return float("nan"), f"{type(exc).__name__}: {exc}"


def sweep_configs(base, etas, algorithms=("vdsom", "dsom")):
    if not etas:
        raise ValueError("sweep needs at least one eta")
    jobs = []
    for algorithm in algorithms:
        for k, eta in enumerate(etas):
            out = None
            if base.output_dir is not None:
                out = os.path.join(base.output_dir, f"{algorithm}_{k:02d}_eta{eta:g}")
            jobs.append(replace(base, algorithm=algorithm, eta=float(eta), output_dir=out))
    return jobs


def run_sweep(base, etas, algorithms=("vdsom", "dsom"), workers=1):
    """Train every (algorithm, eta) pair and collect final distortions.

    Rows come back in (algorithm, eta-list) order whatever the completion
    order. With an ``output_dir`` the table is written to ``sweep.csv``.
    """
    jobs = sweep_configs(base, etas, algorithms)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(job) for job in jobs]

    rows = []
    for job, (value, error) in zip(jobs, results):
        if error:
            log.error("run %s eta=%g failed: %s", job.algorithm, job.eta, error)
        rows.append(SweepRow(job.algorithm, job.eta, value, error))
    if base.output_dir is not None:
        os.makedirs(base.output_dir, exist_ok=True)
        render.write_table_csv(
            ("algorithm", "eta", "distortion"),
            [(r.algorithm, float(r.eta), float(r.distortion)) for r in rows],
            os.path.join(base.output_dir, "sweep.csv"),
        )
    return rows
