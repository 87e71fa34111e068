"""Weight initialization and the Adam optimizer used by the training loops."""

from __future__ import annotations

import math

import numpy as np

from .autodiff import Parameter


def xavier_init(rows: int, cols: int, seed) -> np.ndarray:
    """Glorot-uniform matrix: i.i.d. uniform on [-a, a], a = sqrt(6/(rows+cols)).

    ``seed`` is an integer (deterministic per value) or an existing
    ``numpy.random.Generator`` to draw from.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"xavier_init needs positive dims, got ({rows}, {cols})")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-a, a, size=(rows, cols))


class AdamState:
    """First/second moment buffers and step counter for a parameter list."""

    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8

    def __init__(self, params: list[Parameter], lr: float):
        self.params = list(params)
        self.lr = lr
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]


def adam_step(params: list[Parameter], state: AdamState) -> None:
    """One Adam update from the accumulated gradients; zeroes them after.

    ``params`` must be the same list the state was built from.
    """
    if len(params) != len(state.params):
        raise ValueError("parameter list does not match optimizer state")
    state.t += 1
    b1, b2, eps = state.beta1, state.beta2, state.eps
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for i, p in enumerate(params):
        if p.value.shape != state.m[i].shape:
            raise ValueError(
                f"parameter {p.name!r} shape {p.value.shape} does not match "
                f"state shape {state.m[i].shape}"
            )
        g = p.grad
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        p.value -= state.lr * m_hat / (np.sqrt(v_hat) + eps)
        p.zero_grad()
