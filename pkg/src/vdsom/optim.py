"""Gradient descent drivers for ``MapState``.

Both drivers return fresh objects and leave their inputs untouched. After
every update sigma is clamped from below at ``sigma_min``.
"""

from dataclasses import dataclass

import numpy as np

from .variational import MapState


def _finite_grad(grad):
    if not (np.isfinite(grad.g_sigma) and np.all(np.isfinite(grad.g_weights))):
        raise FloatingPointError("non-finite gradient, step rejected")


def _check_shapes(theta, grad):
    if grad.g_weights.shape != theta.weights.shape:
        raise ValueError(
            f"gradient shape {grad.g_weights.shape} does not match weights {theta.weights.shape}"
        )


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m_weights: np.ndarray = None
    v_weights: np.ndarray = None
    m_sigma: float = 0.0
    v_sigma: float = 0.0

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError(f"learning rate must be non-negative, got {self.lr}")


def adam_step(state, theta, grad, sigma_min=1e-4):
    """One Adam update of weights and sigma. Returns ``(AdamState, MapState)``."""
    _check_shapes(theta, grad)
    _finite_grad(grad)
    if state.m_weights is not None and state.m_weights.shape != theta.weights.shape:
        raise ValueError("optimizer state does not match parameter shape")

    b1, b2 = state.beta1, state.beta2
    t = state.t + 1
    gw, gs = grad.g_weights, grad.g_sigma
    m_w = gw * (1.0 - b1) if state.m_weights is None else b1 * state.m_weights + (1.0 - b1) * gw
    v_w = gw * gw * (1.0 - b2) if state.v_weights is None else b2 * state.v_weights + (1.0 - b2) * gw * gw
    m_s = b1 * state.m_sigma + (1.0 - b1) * gs
    v_s = b2 * state.v_sigma + (1.0 - b2) * gs * gs

    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t
    weights = theta.weights - state.lr * (m_w / bc1) / (np.sqrt(v_w / bc2) + state.eps)
    sigma = theta.sigma - state.lr * (m_s / bc1) / (np.sqrt(v_s / bc2) + state.eps)

    new_state = AdamState(state.lr, b1, b2, state.eps, t, m_w, v_w, m_s, v_s)
    return new_state, MapState(weights, max(sigma, sigma_min))


def sgd_step(theta, grad, lr, sigma_min=1e-4):
    _check_shapes(theta, grad)
    _finite_grad(grad)
    weights = theta.weights - lr * grad.g_weights
    sigma = theta.sigma - lr * grad.g_sigma
    return MapState(weights, max(sigma, sigma_min))
