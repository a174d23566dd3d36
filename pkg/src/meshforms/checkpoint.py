"""Self-describing binary model checkpoints.

Layout: magic ``MFCK``, u32 format version, u64 header length, then a JSON
header (sorted keys), then raw little-endian float64 blobs in the order the
header's ``blob_order`` lists. The header stores the layer spec list, the
pooling policy, task metadata, the config hash, and the shapes of every blob;
channel statistics ride along as two extra blobs. Loading reproduces the
saved bytes exactly when re-saved.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import GraphError
from .features import ChannelStats
from .layers import ModelGraph

_MAGIC = b"MFCK"
_PREFIX = struct.Struct("<4sIQ")
FORMAT_VERSION = 1


class Checkpoint:
    """A trained model plus the normalization statistics it expects."""

    def __init__(self, model: ModelGraph, channel_stats, meta):
        self.model = model
        self.channel_stats = channel_stats
        self.meta = dict(meta)

    def to_bytes(self) -> bytes:
        params = self.model.parameters()
        blob_order = list(params.keys())
        blobs = [np.ascontiguousarray(params[k].data, dtype="<f8") for k in blob_order]
        shapes = {k: list(params[k].data.shape) for k in blob_order}
        if self.channel_stats is not None:
            for tag, arr in (
                ("channel_stats.mean", self.channel_stats.mean),
                ("channel_stats.std", self.channel_stats.std),
            ):
                blob_order.append(tag)
                blobs.append(np.ascontiguousarray(arr, dtype="<f8"))
                shapes[tag] = [int(arr.shape[0])]
        header = {
            "layers": self.model.spec(),
            "pooling_policy": self.model.pooling_policy,
            "has_channel_stats": self.channel_stats is not None,
            "blob_order": blob_order,
            "blob_shapes": shapes,
            "meta": self.meta,
        }
        header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode(
            "utf-8"
        )
        out = [_PREFIX.pack(_MAGIC, FORMAT_VERSION, len(header_bytes)), header_bytes]
        out.extend(b.tobytes() for b in blobs)
        return b"".join(out)

    @staticmethod
    def from_bytes(data: bytes) -> "Checkpoint":
        if len(data) < _PREFIX.size:
            raise GraphError("checkpoint truncated")
        magic, version, header_len = _PREFIX.unpack_from(data)
        if magic != _MAGIC:
            raise GraphError("not a checkpoint file")
        if version != FORMAT_VERSION:
            raise GraphError(f"unsupported checkpoint version {version}")
        header = json.loads(data[_PREFIX.size : _PREFIX.size + header_len])
        offset = _PREFIX.size + header_len
        blobs = {}
        for name in header["blob_order"]:
            shape = tuple(header["blob_shapes"][name])
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
            offset += count * 8
            blobs[name] = arr.reshape(shape).astype(np.float64)
        if offset != len(data):
            raise GraphError("checkpoint size mismatch")
        model = ModelGraph.from_spec(
            header["layers"], seed=0, pooling_policy=header["pooling_policy"]
        )
        params = model.parameters()
        if set(params) != {k for k in blobs if not k.startswith("channel_stats.")}:
            raise GraphError("checkpoint parameters do not match layer spec")
        for name, value in params.items():
            if value.data.shape != blobs[name].shape:
                raise GraphError(f"checkpoint blob shape mismatch for {name}")
            value.data = blobs[name]
        stats = None
        if header["has_channel_stats"]:
            stats = ChannelStats(
                blobs["channel_stats.mean"], blobs["channel_stats.std"]
            )
        return Checkpoint(model, stats, header["meta"])

    def save(self, path):
        import pathlib

        pathlib.Path(path).write_bytes(self.to_bytes())

    @staticmethod
    def load(path) -> "Checkpoint":
        import pathlib

        return Checkpoint.from_bytes(pathlib.Path(path).read_bytes())
