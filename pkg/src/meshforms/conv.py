"""Edge convolution over the ordered 4-neighbor ring.

For an edge ``e`` with neighbor tuple ``(a, b, c, d)`` the output is

    bias + w0 f(e) + w1 |f(a) - f(c)| + w2 (f(a) + f(c))
         + w3 |f(b) - f(d)| + w4 (f(b) + f(d))

with elementwise absolute value, so exchanging the two incident faces
(``(a, b)`` with ``(c, d)``) cannot change the result. Sentinel neighbor
slots on boundary edges read as zero vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import GraphError
from .topology import EdgeTopology


@dataclass
class ConvParams:
    """Five kernels of shape (C_in, C_out) plus a bias of shape (C_out,)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 3 or self.weights.shape[0] != 5:
            raise GraphError(
                f"conv weights must be (5, C_in, C_out), got {self.weights.shape}"
            )
        if self.bias.shape != (self.weights.shape[2],):
            raise GraphError("conv bias length must equal C_out")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise GraphError("non-finite convolution parameter")

    @property
    def in_channels(self):
        return self.weights.shape[1]

    @property
    def out_channels(self):
        return self.weights.shape[2]


def init_conv_params(in_channels, out_channels, rng) -> ConvParams:
    """Uniform +-sqrt(6 / (fan_in + fan_out)) initialization per kernel."""
    limit = np.sqrt(6.0 / (in_channels + out_channels))
    weights = rng.uniform(-limit, limit, size=(5, in_channels, out_channels))
    return ConvParams(weights, np.zeros(out_channels))


def _values(features):
    arr = getattr(features, "values", features)
    return np.ascontiguousarray(np.asarray(arr, dtype=np.float64))


def conv_forward(features, topology: EdgeTopology, params: ConvParams):
    """Apply the convolution; returns an (E, C_out) array."""
    arr = _values(features)
    if arr.ndim != 2 or arr.shape[1] != params.in_channels:
        raise GraphError(
            f"feature channels {arr.shape} do not match C_in {params.in_channels}"
        )
    if arr.shape[0] != topology.edge_count:
        raise GraphError("feature row count does not match edge count")
    return _kernels.conv_forward(arr, topology.neighbors, params.weights, params.bias)


def conv_backward(grad_out, features, topology: EdgeTopology, params: ConvParams):
    """Gradients of the convolution. Returns (grad_features, grad_params).

    The absolute-value factors use subgradient 0 at equal neighbor features.
    """
    arr = _values(features)
    grad_out = np.ascontiguousarray(np.asarray(grad_out, dtype=np.float64))
    if grad_out.shape != (arr.shape[0], params.out_channels):
        raise GraphError(
            f"upstream gradient shape {grad_out.shape} does not match output"
        )
    grad_f, grad_w, grad_b = _kernels.conv_backward(
        grad_out, arr, topology.neighbors, params.weights
    )
    return grad_f, ConvParams(grad_w, grad_b)
