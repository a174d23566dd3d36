"""Config format, metric definitions, training smoke + determinism."""

import numpy as np
import pytest

from meshforms import (
    Checkpoint,
    ConfigError,
    DataError,
    DatasetSpec,
    ExperimentConfig,
    config_hash,
    evaluate_classification,
    evaluate_denoising,
    evaluate_segmentation,
    format_config,
    generate,
    identity_baseline,
    make_denoising_pairs,
    normalize_unit_box,
    parse_config,
    soft_edge_accuracy,
    split,
    train,
)
from meshforms.pipelines import DENOISING_REFERENCE_MSE, build_model


def tiny_dataset(task_classes=3, per_class=4, seed=1, generator="primitive-zoo"):
    samples = generate(
        DatasetSpec(generator, task_classes, per_class, edge_range=(150, 320), seed=seed)
    )
    return split(samples, per_class - 1, 1, seed=seed)


def tiny_config(**overrides):
    base = dict(
        task="classification",
        features="ff",
        conv_channels=(6, 8),
        pool_targets=(100, 70),
        epochs=1,
        batch_size=4,
        seed=0,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_parse_round_trip(self):
        cfg = tiny_config(epochs=7, learning_rate=1e-3, augment_rotation=True)
        again = parse_config(format_config(cfg))
        assert again == cfg
        assert config_hash(again) == config_hash(cfg)

    def test_overrides_win(self):
        text = "task = classification\nepochs = 50\n"
        cfg = parse_config(text, {"epochs": "3"})
        assert cfg.epochs == 3

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("bogus = 1\n")

    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("epochs = soon\n")
        with pytest.raises(ConfigError):
            ExperimentConfig(pool_targets=(100, 200), conv_channels=(4, 4))
        with pytest.raises(ConfigError):
            ExperimentConfig(task="alchemy")
        with pytest.raises(ConfigError):
            ExperimentConfig(features="ff", channel_mask=(1, 0, 1))
        with pytest.raises(ConfigError):
            ExperimentConfig(features="ff", channel_mask=(0, 0))

    def test_hash_ignores_formatting(self):
        a = parse_config("epochs = 5\ntask = classification\n")
        b = parse_config("# comment\ntask = classification\nepochs=5\n")
        assert config_hash(a) == config_hash(b)

    def test_channel_mask_counts(self):
        cfg = tiny_config(features="meshcnn5", channel_mask=(1, 0, 0, 1, 1))
        assert cfg.input_channels() == 3


class TestMetricDefinitions:
    def test_soft_accuracy_all_correct(self):
        assert soft_edge_accuracy([1.0, 2.0], [0, 1], [0, 1]) == 1.0

    def test_soft_accuracy_shorter_half(self):
        # correct edges hold exactly half the total length
        lengths = [1.0, 1.0, 2.0]
        predicted = [0, 0, 1]
        labels = [0, 0, 0]
        assert soft_edge_accuracy(lengths, predicted, labels) == 0.5

    def test_soft_accuracy_uniform_lengths_is_plain_accuracy(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 3, size=50)
        predicted = rng.integers(0, 3, size=50)
        soft = soft_edge_accuracy(np.ones(50), predicted, labels)
        assert np.isclose(soft, np.mean(predicted == labels))

    def test_reference_table_recorded(self):
        assert DENOISING_REFERENCE_MSE["ff_identity"] == 0.05
        assert DENOISING_REFERENCE_MSE["ff_to_ff"] == 0.0096
        assert DENOISING_REFERENCE_MSE["xyz_identity"] == 0.01
        assert DENOISING_REFERENCE_MSE["meshcnn5_to_xyz"] == 0.082


class TestTraining:
    def test_one_epoch_on_eight_meshes(self):
        samples = tiny_dataset(task_classes=4, per_class=3)  # 8 train, 4 test
        assert sum(s.split == "train" for s in samples) == 8
        ckpt, report = train(tiny_config(), samples)
        assert np.isfinite(report.metrics["final_train_loss"])
        assert len(report.train_curve) == 1
        assert 0.0 <= report.metrics["test_accuracy"] <= 1.0

    def test_same_seed_identical_results(self):
        samples = tiny_dataset()
        c1, r1 = train(tiny_config(epochs=2), samples)
        c2, r2 = train(tiny_config(epochs=2), samples)
        assert r1.metrics["test_accuracy"] == r2.metrics["test_accuracy"]
        assert c1.to_bytes() == c2.to_bytes()
        assert r1.train_curve == r2.train_curve

    def test_missing_train_split_rejected(self):
        samples = [s for s in tiny_dataset() if s.split == "test"]
        with pytest.raises(DataError):
            train(tiny_config(), samples)

    def test_checkpoint_carries_stats_and_meta(self):
        samples = tiny_dataset()
        cfg = tiny_config()
        ckpt, _ = train(cfg, samples)
        assert ckpt.channel_stats is not None
        assert ckpt.meta["config_hash"] == config_hash(cfg)
        again = Checkpoint.from_bytes(ckpt.to_bytes())
        assert again.meta == ckpt.meta

    def test_segmentation_smoke(self):
        samples = tiny_dataset(2, 3, generator="articulated-limbs")
        cfg = tiny_config(task="segmentation")
        ckpt, report = train(cfg, samples)
        assert 0.0 <= report.metrics["soft_edge_accuracy"] <= 1.0

    def test_denoising_smoke(self):
        samples = tiny_dataset(2, 3)
        cfg = tiny_config(task="denoising", noise_variance=0.05)
        ckpt, report = train(cfg, samples)
        assert report.metrics["test_mse"] >= 0.0
        assert report.metrics["identity_mse"] > 0.0


class TestEvaluation:
    def test_untrained_model_near_chance(self):
        # statistical oracle: balanced set, prediction independent of label
        classes = 4
        samples = generate(
            DatasetSpec("primitive-zoo", classes, 10, edge_range=(150, 320), seed=3)
        )
        for s in samples:
            s.split = "test"
        cfg = tiny_config(epochs=1)
        model = build_model(cfg, 2, classes)
        ckpt = Checkpoint(
            model,
            _unit_stats(2),
            {
                "task": "classification",
                "features": "ff",
                "channel_mask": [],
                "output_features": "ff",
                "noise_variance": 0.1,
                "config_hash": "x",
                "seed": 0,
            },
        )
        accuracy = evaluate_classification(ckpt, samples)
        n = len(samples)
        sigma = np.sqrt(0.25 * 0.75 / n)
        assert abs(accuracy - 1.0 / classes) <= 3 * sigma + 1e-9

    def test_empty_test_set_rejected(self):
        samples = tiny_dataset()
        ckpt, _ = train(tiny_config(), samples)
        with pytest.raises(DataError):
            evaluate_classification(ckpt, [s for s in samples if s.split == "train"][:0])

    def test_task_mismatch_rejected(self):
        samples = tiny_dataset()
        ckpt, _ = train(tiny_config(), samples)
        with pytest.raises(ConfigError):
            evaluate_segmentation(ckpt, samples)
        with pytest.raises(ConfigError):
            evaluate_denoising(ckpt, [], "ff")


def _unit_stats(channels):
    from meshforms import ChannelStats

    return ChannelStats(np.zeros(channels), np.ones(channels))


class TestDenoising:
    def test_identity_baseline_zero_noise(self):
        samples = tiny_dataset(2, 2)
        pairs = make_denoising_pairs(samples, 0.0, seed=1)
        assert identity_baseline(pairs, "ff") == 0.0

    def test_identity_baseline_positive_with_noise(self):
        samples = tiny_dataset(2, 2)
        pairs = make_denoising_pairs(samples, 0.1, seed=1)
        assert identity_baseline(pairs, "ff") > 0.0
        assert identity_baseline(pairs, "xyz") > 0.0

    def test_topology_mismatch_rejected(self):
        samples = tiny_dataset(2, 2)
        clean = normalize_unit_box(samples[0].mesh)
        other = normalize_unit_box(samples[1].mesh)
        with pytest.raises(DataError):
            identity_baseline([(clean, other)], "ff")

    def test_xyz_identity_scales_with_noise_variance(self):
        # midpoint of two noisy endpoints has variance sigma^2/2 per channel
        samples = tiny_dataset(1, 2)
        var = 0.02
        pairs = make_denoising_pairs(samples, var, seed=2)
        ident = identity_baseline(pairs, "xyz")
        assert abs(ident - var / 2) < var * 0.25


class TestRotationProbe:
    def test_rotation_seed_changes_xyz_inputs_only(self):
        samples = tiny_dataset(2, 3)
        cfg = tiny_config(features="ff", epochs=1)
        ckpt, _ = train(cfg, samples)
        base = evaluate_classification(ckpt, samples)
        rotated = evaluate_classification(ckpt, samples, rotation_seed=5)
        assert base == rotated  # invariant features: identical decisions
