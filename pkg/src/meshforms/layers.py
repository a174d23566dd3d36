"""Network layers and the sequential model graph for mesh tasks.

A ModelGraph threads (per-edge features, edge topology) through its layers.
Pool layers shrink the topology and push their collapse history onto a stack;
Unpool layers pop it and restore the pre-pool topology, so encoder-decoder
configurations end on the original edge set. Classification heads use
GlobalAveragePool + Dense.
"""

from __future__ import annotations

import numpy as np

from . import pooling as _pooling
from ._kernels import conv_backward as _kconv_backward
from ._kernels import conv_forward as _kconv_forward
from .autodiff import Value
from .errors import GraphError
from .pooling import BATCH_LEGACY, ENHANCED
from .topology import EdgeTopology

INSTANCE_NORM_EPS = 1e-12


class MeshContext:
    """Mutable forward-pass state: current topology plus the pool stack."""

    def __init__(self, topology: EdgeTopology, pooling_policy=ENHANCED):
        self.topology = topology
        self.pooling_policy = pooling_policy
        self.stack = []  # (topology before pool, PoolHistory)
        self.histories = []

    def push(self, topology, history):
        self.stack.append((topology, history))
        self.histories.append(history)

    def pop(self):
        if not self.stack:
            raise GraphError("unpool without a matching pool")
        return self.stack.pop()


class Layer:
    def parameters(self):
        return {}

    def out_channels(self, in_channels):
        return in_channels

    def __call__(self, x: Value, ctx: MeshContext) -> Value:
        raise NotImplementedError

    def spec(self):
        raise NotImplementedError


class MeshConv(Layer):
    """Learned edge convolution over the 4-neighbor ring."""

    def __init__(self, in_channels, out_channels, rng=None):
        self.in_channels = in_channels
        self.out_ch = out_channels
        if rng is None:
            weights = np.zeros((5, in_channels, out_channels))
        else:
            limit = np.sqrt(6.0 / (in_channels + out_channels))
            weights = rng.uniform(-limit, limit, size=(5, in_channels, out_channels))
        self.weights = Value(weights, name="weights")
        self.bias = Value(np.zeros(out_channels), name="bias")

    def parameters(self):
        return {"weights": self.weights, "bias": self.bias}

    def out_channels(self, in_channels):
        if in_channels != self.in_channels:
            raise GraphError(
                f"mesh_conv expects {self.in_channels} channels, got {in_channels}"
            )
        return self.out_ch

    def __call__(self, x, ctx):
        if x.data.shape[1] != self.in_channels:
            raise GraphError(
                f"mesh_conv expects {self.in_channels} channels, "
                f"got {x.data.shape[1]}"
            )
        neighbors = ctx.topology.neighbors
        if x.data.shape[0] != len(neighbors):
            raise GraphError("mesh_conv feature rows do not match topology")
        w, b = self.weights, self.bias
        out_data = _kconv_forward(x.data, neighbors, w.data, b.data)

        def rule(g):
            gf, gw, gb = _kconv_backward(g, x.data, neighbors, w.data)
            return gf, gw, gb

        return Value(out_data, (x, w, b), rule)

    def spec(self):
        return {"type": "mesh_conv", "in": self.in_channels, "out": self.out_ch}


class InstanceNorm(Layer):
    """Per-mesh, per-channel standardization with a learned affine."""

    def __init__(self, channels):
        self.channels = channels
        self.gamma = Value(np.ones(channels), name="gamma")
        self.beta = Value(np.zeros(channels), name="beta")

    def parameters(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def __call__(self, x, ctx):
        if x.data.shape[1] != self.channels:
            raise GraphError(
                f"instance_norm expects {self.channels} channels, "
                f"got {x.data.shape[1]}"
            )
        mu = x.mean(axis=0, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=0, keepdims=True)
        normed = centered / (var + INSTANCE_NORM_EPS).sqrt()
        return normed * self.gamma + self.beta

    def spec(self):
        return {"type": "instance_norm", "channels": self.channels}


class ReLU(Layer):
    def __call__(self, x, ctx):
        return x.relu()

    def spec(self):
        return {"type": "relu"}


class Pool(Layer):
    """Collapse edges down to a fixed target count."""

    def __init__(self, target_edges):
        self.target_edges = int(target_edges)

    def __call__(self, x, ctx):
        fn = (
            _pooling.pool
            if ctx.pooling_policy == ENHANCED
            else _pooling.pool_batch_legacy
        )
        result = fn(x.data, ctx.topology, self.target_edges)
        history = result.history
        ctx.push(ctx.topology, history)
        ctx.topology = result.topology
        return Value(
            result.features,
            (x,),
            lambda g: (_pooling.pool_backward(g, history),),
        )

    def spec(self):
        return {"type": "pool", "target": self.target_edges}


class Unpool(Layer):
    """Broadcast features back onto the matching pre-pool edge set."""

    def __call__(self, x, ctx):
        topology_before, history = ctx.pop()
        if x.data.shape[0] != history.final_edge_count:
            raise GraphError("unpool input rows do not match pool history")
        out_data = _pooling.unpool(x.data, history)
        ctx.topology = topology_before
        return Value(
            out_data,
            (x,),
            lambda g: (_pooling.unpool_backward(g, history),),
        )

    def spec(self):
        return {"type": "unpool"}


class GlobalAveragePool(Layer):
    """Mean over edges: per-edge rows -> one channel vector."""

    def __call__(self, x, ctx):
        return x.mean(axis=0)

    def spec(self):
        return {"type": "global_average_pool"}


class Dense(Layer):
    """Affine map on the channel axis; applies per edge or to a pooled vector."""

    def __init__(self, in_channels, out_channels, rng=None):
        self.in_channels = in_channels
        self.out_ch = out_channels
        if rng is None:
            weights = np.zeros((in_channels, out_channels))
        else:
            limit = np.sqrt(6.0 / (in_channels + out_channels))
            weights = rng.uniform(-limit, limit, size=(in_channels, out_channels))
        self.weights = Value(weights, name="weights")
        self.bias = Value(np.zeros(out_channels), name="bias")

    def parameters(self):
        return {"weights": self.weights, "bias": self.bias}

    def out_channels(self, in_channels):
        if in_channels != self.in_channels:
            raise GraphError(
                f"dense expects {self.in_channels} channels, got {in_channels}"
            )
        return self.out_ch

    def __call__(self, x, ctx):
        if x.data.shape[-1] != self.in_channels:
            raise GraphError(
                f"dense expects {self.in_channels} channels, got {x.data.shape[-1]}"
            )
        return x @ self.weights + self.bias

    def spec(self):
        return {"type": "dense", "in": self.in_channels, "out": self.out_ch}


_LAYER_BUILDERS = {
    "mesh_conv": lambda spec, rng: MeshConv(spec["in"], spec["out"], rng),
    "instance_norm": lambda spec, rng: InstanceNorm(spec["channels"]),
    "relu": lambda spec, rng: ReLU(),
    "pool": lambda spec, rng: Pool(spec["target"]),
    "unpool": lambda spec, rng: Unpool(),
    "global_average_pool": lambda spec, rng: GlobalAveragePool(),
    "dense": lambda spec, rng: Dense(spec["in"], spec["out"], rng),
}


class ModelGraph:
    """Ordered layer list with a parameter registry and cached forward state."""

    def __init__(self, layers, pooling_policy=ENHANCED):
        self.layers = list(layers)
        self.pooling_policy = pooling_policy
        self._params = {}
        for i, layer in enumerate(self.layers):
            for pname, value in layer.parameters().items():
                self._params[f"layer{i}.{pname}"] = value
        self._validate()
        self._last = None

    def _validate(self):
        depth = 0
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Pool):
                depth += 1
            elif isinstance(layer, Unpool):
                depth -= 1
                if depth < 0:
                    raise GraphError(f"layer {i}: unpool without a matching pool")

    @staticmethod
    def from_spec(spec_list, seed=0, pooling_policy=ENHANCED):
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        layers = []
        for spec in spec_list:
            kind = spec["type"]
            if kind not in _LAYER_BUILDERS:
                raise GraphError(f"unknown layer type {kind!r}")
            layers.append(_LAYER_BUILDERS[kind](spec, rng))
        return ModelGraph(layers, pooling_policy=pooling_policy)

    def spec(self):
        return [layer.spec() for layer in self.layers]

    def parameters(self):
        return dict(self._params)

    def zero_grad(self):
        for value in self._params.values():
            value.zero_grad()

    def forward(self, features, topology: EdgeTopology):
        """Run all layers; returns (output Value, MeshContext)."""
        arr = np.asarray(getattr(features, "values", features), dtype=np.float64)
        if arr.shape[0] != topology.edge_count:
            raise GraphError(
                f"feature rows {arr.shape[0]} do not match edge count "
                f"{topology.edge_count}"
            )
        ctx = MeshContext(topology, self.pooling_policy)
        x = Value(arr)
        for i, layer in enumerate(self.layers):
            try:
                x = layer(x, ctx)
            except GraphError as exc:
                raise GraphError(f"layer {i} ({layer.spec()['type']}): {exc}") from exc
        self._last = x
        return x, ctx

    def backward(self, loss: Value):
        """Backprop the scalar loss; returns {param name: gradient array}."""
        if self._last is None:
            raise GraphError("backward called without a cached forward pass")
        self._last = None
        loss.backward()
        return {
            name: (
                value.grad if value.grad is not None else np.zeros_like(value.data)
            )
            for name, value in self._params.items()
        }


def cross_entropy(logits: Value, label) -> Value:
    """Negative log softmax of the true class; mean over rows for 2-D logits."""
    if logits.data.ndim == 1:
        k = logits.data.shape[0]
        idx = int(label)
        if idx < 0 or idx >= k:
            raise GraphError(f"label {idx} out of range for {k} classes")
        shift = float(logits.data.max())
        z = logits - shift
        log_norm = z.exp().sum().log()
        onehot = np.zeros(k)
        onehot[idx] = 1.0
        return log_norm - (z * onehot).sum()
    labels = np.asarray(label, dtype=np.int64)
    n, k = logits.data.shape
    if labels.shape != (n,):
        raise GraphError("label vector length must match logit rows")
    if labels.min() < 0 or labels.max() >= k:
        raise GraphError(f"label out of range for {k} classes")
    shift = logits.data.max(axis=1, keepdims=True)
    z = logits - shift
    log_norm = z.exp().sum(axis=1, keepdims=True).log()
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    per_row = log_norm.sum(axis=1) - (z * onehot).sum(axis=1)
    return per_row.mean()


def mse(pred: Value, target) -> Value:
    """Mean squared difference over all edges and channels."""
    target = np.asarray(getattr(target, "values", target), dtype=np.float64)
    if pred.data.shape != target.shape:
        raise GraphError(
            f"prediction shape {pred.data.shape} does not match target "
            f"{target.shape}"
        )
    diff = pred - target
    return (diff * diff).mean()
