"""Adam parameter updates with bias correction.

One :class:`AdamState` owns the moment buffers for one parameter group;
the buffers are allocated lazily on the first step so a state can be
constructed before its group is known.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError


class AdamState:
    """First/second moment accumulators plus the step counter for a group."""

    def __init__(self, lr=0.002, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0.0:
            raise ContractError("learning rate must be positive")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step = 0
        self.m = None
        self.v = None

    def _ensure_buffers(self, params):
        if self.m is None:
            self.m = [np.zeros_like(p.data) for p in params]
            self.v = [np.zeros_like(p.data) for p in params]
        if len(self.m) != len(params):
            raise ContractError("parameter group size changed under the optimizer")


def adam_step(params, grads, state):
    """Apply one bias-corrected Adam update in place.

    ``params`` are tensors, ``grads`` the matching arrays from the tape.
    The step counter increments once per call, shared by the whole group.
    """
    if len(params) != len(grads):
        raise ContractError("params and grads length mismatch")
    state._ensure_buffers(params)
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** t
    bias2 = 1.0 - b2 ** t
    for i, (p, g) in enumerate(zip(params, grads)):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.data.shape:
            raise ContractError(
                f"gradient shape {g.shape} does not match parameter {p.data.shape}"
            )
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * (g * g)
        m_hat = state.m[i] / bias1
        v_hat = state.v[i] / bias2
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params
