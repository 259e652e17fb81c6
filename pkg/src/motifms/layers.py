"""Graph and dense layers on top of the tensor core.

All layers hold their parameters as named tensors and expose them through
``named_params`` so models can be checkpointed and optimized generically.
"""

from __future__ import annotations

import numpy as np

from .autograd import ShapeMismatchError, Tensor


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


class Linear:
    """Affine map ``x @ W + b`` for 2-D inputs."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator,
                 dtype=np.float64, bias_init: float = 0.0):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = Tensor(glorot_uniform(rng, in_dim, out_dim, dtype), requires_grad=True)
        self.bias = Tensor(np.full((1, out_dim), bias_init, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[1] != self.in_dim:
            raise ShapeMismatchError(
                f"linear layer expects width {self.in_dim}, got {x.shape[1]}"
            )
        return x @ self.weight + self.bias

    def named_params(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.W": self.weight, f"{prefix}.b": self.bias}


class MLP:
    """A chain of affine layers with ReLU between them.

    ``final_relu`` decides whether the last layer's output is rectified;
    heads that must emit nonnegative spectra keep it on.
    """

    def __init__(self, dims: list[int], rng: np.random.Generator, dtype=np.float64,
                 final_relu: bool = True, final_bias_init: float = 0.0):
        if len(dims) < 2:
            raise ValueError("an MLP needs at least an input and an output width")
        self.layers = []
        for i in range(len(dims) - 1):
            bias_init = final_bias_init if i == len(dims) - 2 else 0.0
            self.layers.append(Linear(dims[i], dims[i + 1], rng, dtype, bias_init))
        self.final_relu = final_relu

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1 or self.final_relu:
                x = x.relu()
        return x

    def hidden_forward(self, x: Tensor) -> Tensor:
        """Activations entering the final affine layer."""
        h = x
        for layer in self.layers[:-1]:
            h = layer(h).relu()
        return h

    def named_params(self, prefix: str) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for i, layer in enumerate(self.layers):
            params.update(layer.named_params(f"{prefix}.{i}"))
        return params


def gcn_normalize(adj: np.ndarray, dtype=np.float64) -> np.ndarray:
    """Symmetric normalization with unit self loops.

    Returns ``D^-1/2 (A + I) D^-1/2`` where ``D`` is the degree matrix of
    ``A + I`` (weighted degrees plus one for the self loop).
    """
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ShapeMismatchError(f"adjacency must be square, got {adj.shape}")
    a_tilde = adj.astype(dtype) + np.eye(adj.shape[0], dtype=dtype)
    degrees = a_tilde.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(degrees)
    return (a_tilde * inv_sqrt[:, None]) * inv_sqrt[None, :]


class GCNLayer:
    """Graph convolution: ``ReLU(A_hat @ H @ W + b)``.

    ``A_hat`` is the pre-normalized adjacency, passed per graph as a plain
    array; only ``W`` and ``b`` are learned.
    """

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, dtype=np.float64):
        self.linear = Linear(in_dim, out_dim, rng, dtype)
        self.dtype = dtype

    def __call__(self, h: Tensor, a_hat: np.ndarray) -> Tensor:
        propagated = Tensor(a_hat.astype(self.dtype, copy=False)) @ h
        return self.linear(propagated).relu()

    def named_params(self, prefix: str) -> dict[str, Tensor]:
        return self.linear.named_params(prefix)


class GINLayer:
    """Graph isomorphism layer: ``MLP((1 + eps) H + A @ H)``.

    ``eps`` is a learned scalar starting at zero; ``A`` is the raw weighted
    adjacency without self loops.  The internal MLP is two affine layers with
    ReLU activations.
    """

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, dtype=np.float64):
        self.mlp = MLP([in_dim, out_dim, out_dim], rng, dtype, final_relu=True)
        self.eps = Tensor(np.zeros((), dtype=dtype), requires_grad=True)
        self.dtype = dtype

    def __call__(self, h: Tensor, adj: np.ndarray) -> Tensor:
        neighbor_sum = Tensor(adj.astype(self.dtype, copy=False)) @ h
        combined = (self.eps + 1.0) * h + neighbor_sum
        return self.mlp(combined)

    def named_params(self, prefix: str) -> dict[str, Tensor]:
        params = {f"{prefix}.eps": self.eps}
        params.update(self.mlp.named_params(f"{prefix}.mlp"))
        return params
