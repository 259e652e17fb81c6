"""Adam optimization over named parameter tensors."""

from __future__ import annotations

import numpy as np

from .autograd import Tensor


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray],
              state: dict, lr: float = 1e-3, betas: tuple[float, float] = (0.9, 0.999),
              eps: float = 1e-8) -> None:
    """One Adam update with bias correction, applied in place.

    ``state`` carries the step counter under ``"t"`` and per-parameter first
    and second moment arrays; it is created on first use.  Parameters are
    visited in sorted name order so the update sequence is deterministic.
    """
    state.setdefault("t", 0)
    state["t"] += 1
    t = state["t"]
    beta1, beta2 = betas
    scale = lr * np.sqrt(1.0 - beta2**t) / (1.0 - beta1**t)
    for name in sorted(params):
        grad = grads.get(name)
        if grad is None:
            continue
        tensor = params[name]
        moments = state.setdefault(name, [np.zeros_like(tensor.data), np.zeros_like(tensor.data)])
        m, v = moments
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        tensor.data -= (scale * m / (np.sqrt(v) + eps)).astype(tensor.data.dtype, copy=False)


class Adam:
    """Stateful convenience wrapper around :func:`adam_step`."""

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.state: dict = {}

    def zero_grad(self) -> None:
        for tensor in self.params.values():
            tensor.zero_grad()

    def step(self) -> None:
        grads = {
            name: tensor.grad
            for name, tensor in self.params.items()
            if tensor.grad is not None
        }
        adam_step(self.params, grads, self.state, self.lr, self.betas, self.eps)
