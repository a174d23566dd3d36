"""Training and evaluation for classification, segmentation and de-noising.

Normalization statistics are fitted on the training split only and ride in
the checkpoint. Meshes are unit-box normalized before feature extraction;
de-noising inputs come from the noisy copy, targets are the clean mesh's raw
feature channels of the configured output kind, and the reported MSE is
computed on those raw channels.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .checkpoint import Checkpoint
from .config import (
    CLASSIFICATION,
    DENOISING,
    SEGMENTATION,
    ExperimentConfig,
    config_hash,
)
from .datasets import TEST, TRAIN, add_vertex_noise, augment
from .errors import ConfigError, DataError, GraphError
from .features import ChannelStats, extract, fit_channel_stats
from .layers import ModelGraph, cross_entropy, mse
from .mesh import normalize_unit_box
from .optim import Optimizer
from .topology import build_edge_topology

# Published average-MSE levels for the de-noising configurations (identity
# baselines and trained models); orientation points for reading reports, not
# targets the synthetic benchmark reproduces.
DENOISING_REFERENCE_MSE = {
    "ff_identity": 0.05,
    "ff_to_ff": 0.0096,
    "meshcnn5_to_ff": 0.012,
    "xyz_identity": 0.01,
    "ff_to_xyz": 0.08,
    "meshcnn5_to_xyz": 0.082,
}


@dataclass
class MetricsReport:
    """Task metrics plus reproducibility context."""

    task: str
    config_hash: str
    seed: int
    metrics: dict = field(default_factory=dict)
    train_curve: list = field(default_factory=list)  # per-epoch mean loss
    wall_clock_s: float = 0.0
    dataset_hash: str = ""

    def to_records(self, include_timing=False):
        """Line-delimited records; timing is excluded by default so reports
        are byte-stable across reruns."""
        base = {
            "task": self.task,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "dataset_hash": self.dataset_hash,
        }
        records = []
        for name, value in sorted(self.metrics.items()):
            records.append({**base, "metric": name, "value": value})
        for epoch, loss in enumerate(self.train_curve):
            records.append({**base, "metric": "train_loss", "epoch": epoch, "value": loss})
        if include_timing:
            records.append({**base, "metric": "wall_clock_s", "value": self.wall_clock_s})
        return records

    def human_table(self):
        rows = [("metric", "value")]
        for name, value in sorted(self.metrics.items()):
            rows.append((name, f"{value:.6g}" if isinstance(value, float) else str(value)))
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def _mask_values(values, mask):
    if not mask:
        return values
    keep = np.array(mask, dtype=bool)
    return values[:, keep]


@dataclass
class _Prepared:
    sample: object
    mesh: object  # unit-box normalized (clean) mesh
    topology: object
    inputs_raw: np.ndarray
    target: object = None  # class label, edge-label vector, or target features
    noisy_mesh: object = None


def _prepare_samples(config: ExperimentConfig, samples, with_targets=True):
    prepared = []
    for i, s in enumerate(samples):
        mesh = normalize_unit_box(s.mesh)
        topology = build_edge_topology(mesh)
        if config.task == DENOISING:
            noisy = add_vertex_noise(
                mesh, config.noise_variance, seed=(config.seed * 100003 + 7 * i)
            )
            inputs = _mask_values(
                extract(topology, noisy, config.feature_kind).values,
                config.channel_mask,
            )
            target = extract(topology, mesh, config.output_kind).values
            prepared.append(_Prepared(s, mesh, topology, inputs, target, noisy))
            continue
        inputs = _mask_values(
            extract(topology, mesh, config.feature_kind).values, config.channel_mask
        )
        target = None
        if with_targets:
            if config.task == CLASSIFICATION:
                if s.class_label is None:
                    raise DataError(f"sample {s.sample_id} has no class label")
                target = int(s.class_label)
            else:
                if s.edge_labels is None:
                    raise DataError(f"sample {s.sample_id} has no edge labels")
                if len(s.edge_labels) != topology.edge_count:
                    raise DataError(
                        f"sample {s.sample_id}: {len(s.edge_labels)} edge labels "
                        f"for {topology.edge_count} edges"
                    )
                target = np.asarray(s.edge_labels, dtype=np.int64)
        prepared.append(_Prepared(s, mesh, topology, inputs, target))
    return prepared


def build_model(config: ExperimentConfig, in_channels, out_dim, seed=None):
    """Encoder (+decoder for per-edge outputs) per the config's stage lists."""
    spec = []
    prev = in_channels
    for width, target in zip(config.conv_channels, config.pool_targets):
        spec.append({"type": "mesh_conv", "in": prev, "out": width})
        spec.append({"type": "instance_norm", "channels": width})
        spec.append({"type": "relu"})
        spec.append({"type": "pool", "target": target})
        prev = width
    if config.task == CLASSIFICATION:
        spec.append({"type": "global_average_pool"})
        spec.append({"type": "dense", "in": prev, "out": out_dim})
    else:
        decoder_widths = list(reversed(config.conv_channels[:-1])) + [
            config.conv_channels[0]
        ]
        for width in decoder_widths:
            spec.append({"type": "unpool"})
            spec.append({"type": "mesh_conv", "in": prev, "out": width})
            spec.append({"type": "instance_norm", "channels": width})
            spec.append({"type": "relu"})
            prev = width
        spec.append({"type": "dense", "in": prev, "out": out_dim})
    return ModelGraph.from_spec(
        spec,
        seed=config.seed if seed is None else seed,
        pooling_policy=config.pooling,
    )


def _loss_for(config, model, prepared: _Prepared, inputs, topology):
    out, _ = model.forward(inputs, topology)
    if config.task == CLASSIFICATION:
        return cross_entropy(out, prepared.target), out
    if config.task == SEGMENTATION:
        return cross_entropy(out, prepared.target), out
    return mse(out, prepared.target), out


def _augmented_inputs(config, prepared: _Prepared, epoch, index):
    """Re-extract features from an augmented copy when augmentation is on."""
    if not (config.augment_rotation or config.augment_jitter > 0.0):
        return prepared.inputs_raw, prepared.topology
    base = prepared.noisy_mesh if config.task == DENOISING else prepared.mesh
    moved = augment(
        base,
        random_rotation=config.augment_rotation,
        vertex_jitter_sigma=config.augment_jitter,
        seed=(config.seed * 1000003 + epoch * 1009 + index),
    )
    inputs = _mask_values(
        extract(prepared.topology, moved, config.feature_kind).values,
        config.channel_mask,
    )
    return inputs, prepared.topology


def train(config: ExperimentConfig, samples, dataset_hash=""):
    """Train per the config on the dataset's train split.

    Returns (Checkpoint, MetricsReport). Deterministic for a fixed config.
    """
    started = time.perf_counter()
    train_samples = [s for s in samples if s.split == TRAIN]
    test_samples = [s for s in samples if s.split == TEST]
    if not train_samples:
        raise DataError("dataset has no training split")
    prepared = _prepare_samples(config, train_samples)

    if config.task == CLASSIFICATION:
        classes = 1 + max(int(s.class_label) for s in samples if s.class_label is not None)
        out_dim = classes
    elif config.task == SEGMENTATION:
        classes = 1 + max(int(p.target.max()) for p in prepared)
        out_dim = classes
    else:
        out_dim = prepared[0].target.shape[1]

    stats = fit_channel_stats([p.inputs_raw for p in prepared])
    model = build_model(config, config.input_channels(), out_dim)
    optimizer = Optimizer(
        model.parameters(),
        method=config.optimizer,
        learning_rate=config.learning_rate,
        momentum=config.momentum,
    )
    decay_epoch = int(0.75 * config.epochs)

    curve = []
    for epoch in range(config.epochs):
        if epoch == decay_epoch and epoch > 0:
            optimizer.learning_rate *= 0.1
        order = np.random.default_rng(
            np.random.SeedSequence(config.seed, spawn_key=(11, epoch))
        ).permutation(len(prepared))
        epoch_losses = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            model.zero_grad()
            grads = None
            for index in batch:
                p = prepared[index]
                inputs_raw, topology = _augmented_inputs(config, p, epoch, int(index))
                inputs = (inputs_raw - stats.mean) / stats.std
                loss, _ = _loss_for(config, model, p, inputs, topology)
                value = float(loss.data)
                if not np.isfinite(value):
                    raise GraphError(
                        f"training diverged: non-finite loss at epoch {epoch}, "
                        f"sample {p.sample.sample_id}"
                    )
                epoch_losses.append(value)
                grads = model.backward(loss)
            scaled = {k: g / len(batch) for k, g in grads.items()}
            optimizer.step(scaled)
        curve.append(float(np.mean(epoch_losses)))

    meta = {
        "task": config.task,
        "features": config.features,
        "channel_mask": list(config.channel_mask),
        "output_features": config.output_features,
        "noise_variance": config.noise_variance,
        "classes": out_dim if config.task != DENOISING else 0,
        "config_hash": config_hash(config),
        "seed": config.seed,
    }
    checkpoint = Checkpoint(model, stats, meta)

    report = MetricsReport(
        task=config.task,
        config_hash=config_hash(config),
        seed=config.seed,
        train_curve=curve,
        dataset_hash=dataset_hash,
    )
    report.metrics["final_train_loss"] = curve[-1]
    if test_samples:
        if config.task == CLASSIFICATION:
            report.metrics["test_accuracy"] = evaluate_classification(
                checkpoint, test_samples
            )
        elif config.task == SEGMENTATION:
            report.metrics["soft_edge_accuracy"] = evaluate_segmentation(
                checkpoint, test_samples
            )
        else:
            pairs = make_denoising_pairs(
                test_samples, config.noise_variance, seed=config.seed + 555
            )
            report.metrics["test_mse"] = evaluate_denoising(
                checkpoint, pairs, config.output_features
            )
            report.metrics["identity_mse"] = identity_baseline(
                pairs, config.output_features
            )
    report.wall_clock_s = time.perf_counter() - started
    return checkpoint, report


def _checkpoint_config(checkpoint: Checkpoint) -> ExperimentConfig:
    meta = checkpoint.meta
    return ExperimentConfig(
        task=meta["task"],
        features=meta["features"],
        channel_mask=tuple(meta.get("channel_mask", ())),
        output_features=meta.get("output_features", "ff"),
        noise_variance=meta.get("noise_variance", 0.1),
        seed=meta.get("seed", 0),
    )


def _model_inputs(checkpoint, config, mesh, topology):
    raw = _mask_values(
        extract(topology, mesh, config.feature_kind).values, config.channel_mask
    )
    stats = checkpoint.channel_stats
    return (raw - stats.mean) / stats.std


def evaluate_classification(checkpoint: Checkpoint, samples, rotation_seed=None):
    """Fraction of test meshes whose argmax logit matches the label.

    ``rotation_seed`` applies a random rigid rotation to every mesh first
    (robustness probes).
    """
    if checkpoint.meta["task"] != CLASSIFICATION:
        raise ConfigError(
            f"checkpoint task is {checkpoint.meta['task']}, not classification"
        )
    test = [s for s in samples if s.split == TEST or not s.split]
    if not test:
        raise DataError("no test meshes to evaluate")
    config = _checkpoint_config(checkpoint)
    hits = 0
    for i, s in enumerate(test):
        mesh = normalize_unit_box(s.mesh)
        if rotation_seed is not None:
            mesh = augment(mesh, random_rotation=True, seed=rotation_seed + i)
        topology = build_edge_topology(mesh)
        inputs = _model_inputs(checkpoint, config, mesh, topology)
        out, _ = checkpoint.model.forward(inputs, topology)
        if int(np.argmax(out.data)) == int(s.class_label):
            hits += 1
    return hits / len(test)


def soft_edge_accuracy(lengths, predicted, labels):
    """Length-weighted share of correctly labelled edges."""
    lengths = np.asarray(lengths, dtype=np.float64)
    correct = np.asarray(predicted) == np.asarray(labels)
    return float((lengths * correct).sum() / lengths.sum())


def evaluate_segmentation(checkpoint: Checkpoint, samples):
    """Mean soft edge accuracy over the test meshes."""
    if checkpoint.meta["task"] != SEGMENTATION:
        raise ConfigError(
            f"checkpoint task is {checkpoint.meta['task']}, not segmentation"
        )
    test = [s for s in samples if s.split == TEST or not s.split]
    if not test:
        raise DataError("no test meshes to evaluate")
    config = _checkpoint_config(checkpoint)
    scores = []
    for s in test:
        if s.edge_labels is None:
            raise DataError(f"sample {s.sample_id} has no edge labels")
        mesh = normalize_unit_box(s.mesh)
        topology = build_edge_topology(mesh)
        inputs = _model_inputs(checkpoint, config, mesh, topology)
        out, _ = checkpoint.model.forward(inputs, topology)
        predicted = np.argmax(out.data, axis=1)
        lengths = np.linalg.norm(
            mesh.vertices[topology.edges[:, 0]] - mesh.vertices[topology.edges[:, 1]],
            axis=1,
        )
        scores.append(soft_edge_accuracy(lengths, predicted, s.edge_labels))
    return float(np.mean(scores))


def make_denoising_pairs(samples, variance, seed=0):
    """(clean, noisy) unit-box meshes sharing connectivity."""
    pairs = []
    for i, s in enumerate(samples):
        clean = normalize_unit_box(s.mesh)
        noisy = add_vertex_noise(clean, variance, seed=seed * 100003 + 7 * i)
        pairs.append((clean, noisy))
    return pairs


def _check_shared_topology(clean, noisy):
    if not np.array_equal(clean.faces, noisy.faces) or (
        clean.vertex_count != noisy.vertex_count
    ):
        raise DataError("clean and noisy meshes do not share topology")


def identity_baseline(pairs, output_features) -> float:
    """Average MSE of just returning the noisy features unchanged."""
    from .config import KIND_TOKENS

    kind = KIND_TOKENS[output_features]
    errors = []
    for clean, noisy in pairs:
        _check_shared_topology(clean, noisy)
        topology = build_edge_topology(clean)
        clean_f = extract(topology, clean, kind).values
        noisy_f = extract(topology, noisy, kind).values
        errors.append(float(np.mean((clean_f - noisy_f) ** 2)))
    return float(np.mean(errors))


def evaluate_denoising(checkpoint: Checkpoint, pairs, output_features) -> float:
    """Average MSE between model output and the clean mesh's raw features."""
    if checkpoint.meta["task"] != DENOISING:
        raise ConfigError(
            f"checkpoint task is {checkpoint.meta['task']}, not denoising"
        )
    if checkpoint.meta["output_features"] != output_features:
        raise ConfigError(
            f"checkpoint predicts {checkpoint.meta['output_features']}, "
            f"asked for {output_features}"
        )
    from .config import KIND_TOKENS

    config = _checkpoint_config(checkpoint)
    kind = KIND_TOKENS[output_features]
    errors = []
    for clean, noisy in pairs:
        _check_shared_topology(clean, noisy)
        topology = build_edge_topology(clean)
        inputs = _model_inputs(checkpoint, config, noisy, topology)
        out, _ = checkpoint.model.forward(inputs, topology)
        target = extract(topology, clean, kind).values
        errors.append(float(np.mean((out.data - target) ** 2)))
    return float(np.mean(errors))


def run_ablation(base_config: ExperimentConfig, samples, dataset_hash=""):
    """The 2x2 grid {legacy, enhanced} x {meshcnn5, ff} on one dataset.

    Returns (rows, table text) where rows are (pooling, features, report).
    """
    rows = []
    for pooling in ("legacy", "enhanced"):
        for features in ("meshcnn5", "ff"):
            config = ExperimentConfig(
                **{
                    **base_config.__dict__,
                    "pooling": pooling,
                    "features": features,
                    "channel_mask": (),
                }
            )
            _, report = train(config, samples, dataset_hash=dataset_hash)
            rows.append((pooling, features, report))
    metric = {
        CLASSIFICATION: "test_accuracy",
        SEGMENTATION: "soft_edge_accuracy",
        DENOISING: "test_mse",
    }[base_config.task]
    lines = [f"{'pooling':<10} {'features':<10} {metric:>14}"]
    for pooling, features, report in rows:
        value = report.metrics.get(metric, float("nan"))
        lines.append(f"{pooling:<10} {features:<10} {value:>14.6g}")
    return rows, "\n".join(lines)
