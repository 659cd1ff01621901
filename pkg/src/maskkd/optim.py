"""SGD with momentum and coupled weight decay."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .tensor import ContractError, Tensor


class SGD:
    """``v <- momentum * v + grad + weight_decay * p``;  ``p <- p - lr * v``.

    Velocity buffers start at zero and are updated in place, as are the
    parameter buffers.  Parameters whose ``.grad`` is None are treated as
    having a zero gradient (weight decay still applies).
    """

    def __init__(self, params: Sequence[Tensor], lr: float, momentum: float = 0.9, weight_decay: float = 1e-4):
        if not 0.0 <= momentum < 1.0:
            raise ContractError(f"momentum must lie in [0, 1), got {momentum}")
        self.params = list(params)
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self, lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        for p, v in zip(self.params, self.velocity):
            dt = p.data.dtype.type
            g = p.grad if p.grad is not None else 0
            v *= dt(self.momentum)
            v += g
            if self.weight_decay:
                v += dt(self.weight_decay) * p.data
            p.data -= dt(lr) * v


def sgd_step(params: Sequence[Tensor], grads: Sequence[np.ndarray], state: SGD) -> None:
    """Functional form: load ``grads`` into ``params`` and step ``state``."""
    if len(params) != len(state.params) or len(grads) != len(params):
        raise ContractError("sgd_step: params, grads and optimizer state must align")
    for p, g in zip(params, grads):
        if g is not None and np.shape(g) != p.shape:
            raise ContractError(f"sgd_step: grad shape {np.shape(g)} does not match param {p.shape}")
        p.grad = None if g is None else np.asarray(g, dtype=p.data.dtype)
    state.params = list(params)
    state.step()
