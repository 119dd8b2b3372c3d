"""Per-sample variational objective and its stochastic gradient.

The variational posterior over lattice nodes is pinned to the winner with a
latent bandwidth of ``eta * sigma``, so the only free parameters are the
weights and ``sigma``. Responsibilities and their logs are always built from
max-shifted logits; a stored probability is never passed to ``log``.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class MapState:
    """Model parameters: ``weights`` is ``(n, m)``, ``sigma`` the scalar bandwidth."""

    weights: np.ndarray
    sigma: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 2:
            raise ValueError("weights must be an (n, m) array")
        self.sigma = float(self.sigma)
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def m(self):
        return self.weights.shape[1]

    @property
    def n(self):
        return self.weights.shape[0]

    def copy(self):
        return MapState(self.weights.copy(), self.sigma)


@dataclass(frozen=True)
class VdsomConfig:
    """Elasticity and sigma floor.

    ``paper_exact_gsigma`` switches the sigma gradient to the literal ``eta``
    factor of the published pseudo-code instead of the derived ``1/eta**2``.
    The two agree at ``eta == 1`` only.
    """

    eta: float = 1.0
    sigma_min: float = 1e-4
    paper_exact_gsigma: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.sigma_min > 0:
            raise ValueError(f"sigma_min must be positive, got {self.sigma_min}")


@dataclass
class VdsomGradient:
    g_sigma: float
    g_weights: np.ndarray
    winner: int
    responsibilities: np.ndarray
    objective: float
    d_star: float


def _check_positive(**kw):
    for name, value in kw.items():
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")


def _check_sample(state, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (state.m,):
        raise ValueError(f"sample has shape {x.shape}, expected ({state.m},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample has non-finite components")
    return x


def sq_distances(weights, x):
    diff = x - weights
    return np.einsum("ij,ij->i", diff, diff)


def find_winner(weights, x):
    """Index of the closest weight; ``np.argmin`` keeps the lowest index on ties."""
    return int(np.argmin(sq_distances(weights, x)))


def log_responsibilities(dcol, sigma, eta):
    """Log-softmax of ``-dcol / (2 eta^2 sigma^2)``, computed from shifted logits."""
    logits = -np.asarray(dcol, dtype=float) / (2.0 * eta * eta * sigma * sigma)
    shifted = logits - logits.max()
    return shifted - np.log(np.sum(np.exp(shifted)))


def responsibilities(grid, winner, sigma, eta):
    _check_positive(sigma=sigma, eta=eta)
    if not 0 <= winner < grid.n:
        raise IndexError(f"winner {winner} out of range")
    log_q = log_responsibilities(grid.dist2[winner], sigma, eta)
    q = np.exp(log_q)
    return q / q.sum()


def log_likelihoods(f, sigma, m):
    """``ln p_z = -m ln sigma - f_z / (2 sigma^2)``, constants dropped."""
    return -m * np.log(sigma) - f / (2.0 * sigma * sigma)


def per_sample_objective(grid, state, cfg, x, winner=None):
    """Return ``(F_x, winner)`` with ``F_x = sum_z q_z (ln q_z - ln p_z)``.

    Passing ``winner`` freezes the best-matching node instead of recomputing it,
    which is what finite-difference checks need.
    """
    x = _check_sample(state, x)
    f = sq_distances(state.weights, x)
    if winner is None:
        winner = int(np.argmin(f))
    log_q = log_responsibilities(grid.dist2[winner], state.sigma, cfg.eta)
    q = np.exp(log_q)
    value = float(np.dot(q, log_q - log_likelihoods(f, state.sigma, state.m)))
    return value, winner


def gradient(grid, state, cfg, x):
    """Stochastic gradient of the objective at one observation ``x``.

    The winner and its distance column are held constant. Returns a
    VdsomGradient carrying the responsibilities and objective value as well.
    """
    x = _check_sample(state, x)
    if state.n != grid.n:
        raise ValueError(f"state has {state.n} weights, grid has {grid.n} nodes")
    sigma, eta, m = state.sigma, cfg.eta, state.m

    diff = x - state.weights
    f = np.einsum("ij,ij->i", diff, diff)
    winner = int(np.argmin(f))
    dcol = grid.dist2[winner]

    log_q = log_responsibilities(dcol, sigma, eta)
    q = np.exp(log_q)
    log_p = log_likelihoods(f, sigma, m)
    d_star = float(np.dot(dcol, q))

    coupling = eta if cfg.paper_exact_gsigma else 1.0 / (eta * eta)
    bracket = coupling * (1.0 + log_q - log_p) * (dcol - d_star) - f
    g_sigma = m / sigma + float(np.dot(bracket, q)) / sigma**3
    g_weights = -(q / (sigma * sigma))[:, None] * diff

    return VdsomGradient(
        g_sigma=g_sigma,
        g_weights=g_weights,
        winner=winner,
        responsibilities=q,
        objective=float(np.dot(q, log_q - log_p)),
        d_star=d_star,
    )


def batch_objective(grid, state, cfg, samples):
    """Mean per-sample objective over the rows of ``samples``."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    total = 0.0
    for x in samples:
        total += per_sample_objective(grid, state, cfg, x)[0]
    return total / len(samples)
