"""Quantization and organization metrics, plus the training log container."""

from dataclasses import dataclass, field

import numpy as np

_CHUNK = 256


@dataclass(frozen=True)
class LogRecord:
    step: int
    sigma: float
    distortion: float
    objective: float


@dataclass
class TrainLog:
    records: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    final_state: object = None

    def append(self, step, sigma, distortion, objective):
        if self.records and step <= self.records[-1].step:
            raise ValueError(f"log steps must increase, got {step} after {self.records[-1].step}")
        if not sigma > 0:
            raise ValueError(f"logged sigma must be positive, got {sigma}")
        self.records.append(LogRecord(int(step), float(sigma), float(distortion), float(objective)))

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def at(self, step):
        for r in self.records:
            if r.step == step:
                return r
        raise KeyError(f"no record at step {step}")


def distortion(weights, samples):
    """Mean over samples of the squared distance to the closest weight."""
    weights = np.asarray(weights, dtype=float)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0 or samples.size == 0:
        raise ValueError("distortion needs a non-empty batch")
    if samples.shape[1] != weights.shape[1]:
        raise ValueError(f"sample dim {samples.shape[1]} != weight dim {weights.shape[1]}")
    mins = []
    for lo in range(0, len(samples), _CHUNK):
        diff = samples[lo : lo + _CHUNK, None, :] - weights[None, :, :]
        mins.append(np.min(np.sum(diff * diff, axis=-1), axis=1))
    # sequential accumulation keeps the result independent of numpy's pairwise blocking
    total = 0.0
    for v in np.concatenate(mins).tolist():
        total += v
    return total / len(samples)


def organization_score(grid, weights, rng):
    """Mean weight distance over adjacent node pairs vs. over random node pairs.

    Returns ``(adjacent_mean, random_mean)``; an organized map has the first
    clearly below the second. The random pairs are distinct nodes drawn
    uniformly, as many as there are adjacent pairs.
    """
    if grid.n < 4:
        raise ValueError(f"organization score needs at least 4 nodes, got {grid.n}")
    weights = np.asarray(weights, dtype=float)
    edges = np.array(grid.edges())
    adjacent = np.linalg.norm(weights[edges[:, 0]] - weights[edges[:, 1]], axis=1)

    i = rng.integers(0, grid.n, len(edges))
    j = (i + rng.integers(1, grid.n, len(edges))) % grid.n
    random = np.linalg.norm(weights[i] - weights[j], axis=1)
    return float(adjacent.mean()), float(random.mean())
