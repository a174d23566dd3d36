"""Experiment configuration: a documented ``key = value`` text format.

Unknown keys are rejected. Lists are comma separated, booleans are
``true``/``false``, and ``#`` starts a comment. The canonical serialization
(sorted keys, one per line) is what the config hash is computed over, so two
configs with the same settings hash identically regardless of formatting.

Keys (defaults in parentheses):

    task                 classification | segmentation | denoising
    features             ff | meshcnn5 | xyz | xyz-inv | laplacian  (ff)
    channel_mask         comma list of 0/1 over the feature channels (all 1)
    output_features      ff | xyz, denoising target kind (ff)
    pooling              enhanced | legacy  (enhanced)
    conv_channels        comma list of conv widths  (16,32)
    pool_targets         comma list of edge targets, strictly decreasing
    epochs               (100)
    batch_size           gradient-accumulation group size (8)
    optimizer            adam | sgd  (adam)
    learning_rate        (2e-4), decayed x0.1 at 75% of epochs
    momentum             SGD momentum (0.9)
    noise_variance       vertex noise for denoising pairs (0.1)
    augment_rotation     random training rotations (false)
    augment_jitter       training vertex jitter sigma (0.0)
    seed                 (0)
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .features import FF, LAPLACIAN, MESHCNN5, XYZ, XYZ_INV, KIND_CHANNELS

CLASSIFICATION = "classification"
SEGMENTATION = "segmentation"
DENOISING = "denoising"

KIND_TOKENS = {
    "ff": FF,
    "meshcnn5": MESHCNN5,
    "xyz": XYZ,
    "xyz-inv": XYZ_INV,
    "laplacian": LAPLACIAN,
}
TOKEN_OF_KIND = {v: k for k, v in KIND_TOKENS.items()}


@dataclass
class ExperimentConfig:
    task: str = CLASSIFICATION
    features: str = "ff"
    channel_mask: tuple = ()
    output_features: str = "ff"
    pooling: str = "enhanced"
    conv_channels: tuple = (16, 32)
    pool_targets: tuple = (350, 210)
    epochs: int = 100
    batch_size: int = 8
    optimizer: str = "adam"
    learning_rate: float = 2e-4
    momentum: float = 0.9
    noise_variance: float = 0.1
    augment_rotation: bool = False
    augment_jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.task not in (CLASSIFICATION, SEGMENTATION, DENOISING):
            raise ConfigError(f"unknown task {self.task!r}")
        if self.features not in KIND_TOKENS:
            raise ConfigError(f"unknown feature kind {self.features!r}")
        if self.output_features not in ("ff", "xyz"):
            raise ConfigError(
                f"output_features must be ff or xyz, got {self.output_features!r}"
            )
        if self.pooling not in ("enhanced", "legacy"):
            raise ConfigError(f"pooling must be enhanced or legacy")
        self.conv_channels = tuple(int(c) for c in self.conv_channels)
        self.pool_targets = tuple(int(t) for t in self.pool_targets)
        self.channel_mask = tuple(int(m) for m in self.channel_mask)
        if len(self.conv_channels) != len(self.pool_targets):
            raise ConfigError("conv_channels and pool_targets lengths must match")
        if not self.conv_channels:
            raise ConfigError("at least one conv stage is required")
        if any(t <= 0 for t in self.pool_targets) or any(
            a <= b for a, b in zip(self.pool_targets, self.pool_targets[1:])
        ):
            raise ConfigError("pool_targets must be positive and strictly decreasing")
        if self.channel_mask:
            kind = KIND_TOKENS[self.features]
            if len(self.channel_mask) != KIND_CHANNELS[kind]:
                raise ConfigError(
                    f"channel_mask length must be {KIND_CHANNELS[kind]} for "
                    f"{self.features}"
                )
            if not any(self.channel_mask):
                raise ConfigError("channel_mask keeps no channels")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError("optimizer must be adam or sgd")
        if self.noise_variance < 0:
            raise ConfigError("noise_variance must be non-negative")

    @property
    def feature_kind(self):
        return KIND_TOKENS[self.features]

    @property
    def output_kind(self):
        return KIND_TOKENS[self.output_features]

    def input_channels(self):
        if self.channel_mask:
            return int(sum(self.channel_mask))
        return KIND_CHANNELS[self.feature_kind]


_BOOL_KEYS = {"augment_rotation"}
_INT_KEYS = {"epochs", "batch_size", "seed"}
_FLOAT_KEYS = {"learning_rate", "momentum", "noise_variance", "augment_jitter"}
_TUPLE_KEYS = {"conv_channels", "pool_targets", "channel_mask"}
_ALL_KEYS = {f.name for f in fields(ExperimentConfig)}


def parse_config(text: str, overrides=None) -> ExperimentConfig:
    """Parse the key = value format; ``overrides`` win over file values."""
    values = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_number}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {line_number}: unknown key {key!r}")
        values[key] = value
    if overrides:
        for key, value in overrides.items():
            if key not in _ALL_KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            if value is not None:
                values[key] = str(value)
    kwargs = {}
    for key, value in values.items():
        try:
            if key in _BOOL_KEYS:
                if value.lower() not in ("true", "false"):
                    raise ValueError(value)
                kwargs[key] = value.lower() == "true"
            elif key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key in _TUPLE_KEYS:
                kwargs[key] = tuple(
                    int(v.strip()) for v in value.split(",") if v.strip()
                )
            else:
                kwargs[key] = value
        except ValueError:
            raise ConfigError(f"bad value {value!r} for key {key!r}")
    return ExperimentConfig(**kwargs)


def format_config(config: ExperimentConfig) -> str:
    """Canonical serialization: sorted keys, one per line."""
    lines = []
    for f in sorted(_ALL_KEYS):
        value = getattr(config, f)
        if f in _TUPLE_KEYS:
            value = ",".join(str(v) for v in value)
        elif f in _BOOL_KEYS:
            value = "true" if value else "false"
        elif f in _FLOAT_KEYS:
            value = repr(float(value))
        lines.append(f"{f} = {value}")
    return "\n".join(lines) + "\n"


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(format_config(config).encode("utf-8")).hexdigest()[:12]
