"""Dynamic SOM baseline with a time-invariant, elasticity-controlled neighborhood.

The neighborhood width follows the winner's current quantization error rather
than a decreasing schedule::

    w_i += lr * |x - w_i| * exp(-d(i, s) / (eta^2 |x - w_s|^2)) * (x - w_i)

where ``s`` is the winner and ``d`` the squared latent distance of the grid.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class DsomState:
    weights: np.ndarray
    eta: float
    lr: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.lr < 0:
            raise ValueError(f"learning rate must be non-negative, got {self.lr}")


def dsom_step(state, grid, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (state.weights.shape[1],):
        raise ValueError(f"sample has shape {x.shape}, expected ({state.weights.shape[1]},)")
    diff = x - state.weights
    f = np.einsum("ij,ij->i", diff, diff)
    winner = int(np.argmin(f))
    err2 = f[winner]
    if err2 == 0.0:
        return DsomState(state.weights.copy(), state.eta, state.lr)
    h = np.exp(-grid.dist2[winner] / (state.eta**2 * err2))
    weights = state.weights + (state.lr * np.sqrt(f) * h)[:, None] * diff
    return DsomState(weights, state.eta, state.lr)


def effective_sigma(state, x):
    """Winner error divided by sqrt 2: the VDSOM bandwidth with the same latent kernel."""
    diff = np.asarray(x, dtype=float) - state.weights
    return float(np.sqrt(np.min(np.einsum("ij,ij->i", diff, diff)) / 2.0))
