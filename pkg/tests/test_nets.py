import math

import numpy as np
import pytest

from helpers import random_checkpoint, random_specs
from otfuse.data import make_dataset
from otfuse.errors import ValidationError
from otfuse.nets import (
    LayerSpec,
    LayerWeights,
    TrainConfig,
    accuracy,
    checkpoints_equal,
    conv_reshape,
    finetune,
    forward,
    init_checkpoint,
    interpolate,
    loss,
    loss_gradients,
    make_checkpoint,
    train,
    validate_spec_chain,
)


def scalar_forward(ckpt, x):
    """Per-element oracle for the layer stack."""
    a = list(x)
    for spec, layer in zip(ckpt.specs, ckpt.layers):
        out = []
        for i in range(spec.out_dim):
            z = layer.b[i]
            for j in range(spec.in_dim):
                z += layer.w[i, j] * a[j]
            if spec.activation == "relu":
                z = max(z, 0.0)
            elif spec.activation == "tanh":
                z = math.tanh(z)
            out.append(z)
        a = out
    return np.array(a)


def two_blob_dataset(rng, n_per_class=60, sep=2.0, noise=0.5):
    x0 = rng.normal((-sep, 0.0), noise, (n_per_class, 2))
    x1 = rng.normal((sep, 0.0), noise, (n_per_class, 2))
    feats = np.vstack([x0, x1])
    labels = np.array([0] * n_per_class + [1] * n_per_class)
    return make_dataset(feats, labels, 2)


def logistic_regression_accuracy(data, steps=800, lr=0.5):
    """Independent check that a linear separator exists."""
    x = np.hstack([data.features, np.ones((len(data.labels), 1))])
    y = data.labels.astype(np.float64)
    w = np.zeros(x.shape[1])
    for _ in range(steps):
        p = 1.0 / (1.0 + np.exp(-(x @ w)))
        w -= lr * (x.T @ (p - y)) / len(y)
    pred = (x @ w) > 0
    return float(np.mean(pred == data.labels))


class TestSpecValidation:
    def test_chain_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            validate_spec_chain(
                (LayerSpec(2, 3, "relu"), LayerSpec(4, 2, "identity"))
            )

    def test_final_layer_must_be_identity(self):
        with pytest.raises(ValidationError):
            validate_spec_chain((LayerSpec(2, 2, "relu"),))

    def test_unknown_activation(self):
        with pytest.raises(ValidationError):
            validate_spec_chain((LayerSpec(2, 2, "sigmoid"),))


class TestForward:
    def test_identity_layer_passthrough(self):
        ckpt = make_checkpoint(
            (LayerSpec(3, 3, "identity"),),
            [LayerWeights(np.eye(3), np.zeros(3))],
        )
        x = np.array([1.0, -2.0, 0.5])
        assert np.array_equal(forward(ckpt, x), x)

    def test_relu_kills_negated_positive_input(self):
        ckpt = make_checkpoint(
            (LayerSpec(3, 3, "relu"), LayerSpec(3, 3, "identity")),
            [
                LayerWeights(-np.eye(3), np.zeros(3)),
                LayerWeights(np.eye(3), np.zeros(3)),
            ],
        )
        assert np.array_equal(forward(ckpt, np.array([1.0, 2.0, 3.0])), np.zeros(3))

    def test_two_layer_matches_scalar_oracle(self):
        rng = np.random.default_rng(21)
        specs = (LayerSpec(4, 5, "tanh"), LayerSpec(5, 3, "identity"))
        ckpt = random_checkpoint(rng, specs)
        for _ in range(10):
            x = rng.standard_normal(4)
            np.testing.assert_allclose(
                forward(ckpt, x), scalar_forward(ckpt, x), atol=1e-12
            )

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(0)
        ckpt = random_checkpoint(rng, (LayerSpec(4, 2, "identity"),))
        with pytest.raises(ValidationError):
            forward(ckpt, np.zeros(3))


class TestLoss:
    def test_confident_correct_logits_near_zero(self):
        ckpt = make_checkpoint(
            (LayerSpec(2, 2, "identity"),),
            [LayerWeights(100.0 * np.eye(2), np.zeros(2))],
        )
        data = make_dataset(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0, 1]), 2)
        assert loss(ckpt, data) < 1e-6

    def test_uniform_logits_give_log_c_exactly(self):
        c, n = 3, 8
        ckpt = make_checkpoint(
            (LayerSpec(2, c, "identity"),),
            [LayerWeights(np.zeros((c, 2)), np.zeros(c))],
        )
        rng = np.random.default_rng(1)
        data = make_dataset(rng.standard_normal((n, 2)), rng.integers(0, c, n), c)
        assert loss(ckpt, data) == math.log(c)

    def test_against_independent_summation_oracle(self):
        rng = np.random.default_rng(33)
        specs = random_specs(rng, in_dim=4)
        ckpt = random_checkpoint(rng, specs)
        c = specs[-1].out_dim
        n = 17
        data = make_dataset(rng.standard_normal((n, 4)), rng.integers(0, c, n), c)
        expected_terms = []
        for i in range(n):
            z = [float(v) for v in forward(ckpt, data.features[i])]
            denom = math.fsum(math.exp(v) for v in z)
            expected_terms.append(-math.log(math.exp(z[data.labels[i]]) / denom))
        expected = math.fsum(reversed(expected_terms)) / n
        assert abs(loss(ckpt, data) - expected) <= 1e-10

    def test_empty_dataset_rejected(self):
        from otfuse.data import Dataset

        rng = np.random.default_rng(0)
        ckpt = random_checkpoint(rng, (LayerSpec(2, 2, "identity"),))
        empty = Dataset(np.zeros((0, 2)), np.zeros(0, dtype=np.int64), 2)
        with pytest.raises(ValidationError):
            loss(ckpt, empty)


class TestTrain:
    def test_zero_epochs_returns_seeded_init(self):
        rng = np.random.default_rng(2)
        data = two_blob_dataset(rng)
        specs = (LayerSpec(2, 4, "relu"), LayerSpec(4, 2, "identity"))
        cfg = TrainConfig(epochs=0, seed=9)
        out = train(specs, data, cfg)
        ref = init_checkpoint(specs, 9)
        assert all(
            np.array_equal(a.w, b.w) and np.array_equal(a.b, b.b)
            for a, b in zip(out.layers, ref.layers)
        )

    def test_same_seed_bit_identical(self):
        rng = np.random.default_rng(3)
        data = two_blob_dataset(rng)
        specs = (LayerSpec(2, 4, "relu"), LayerSpec(4, 2, "identity"))
        cfg = TrainConfig(epochs=5, batch_size=8, learning_rate=0.1, seed=4)
        assert checkpoints_equal(train(specs, data, cfg), train(specs, data, cfg))

    def test_separable_blobs_reach_high_accuracy(self):
        rng = np.random.default_rng(4)
        data = two_blob_dataset(rng)
        # independent oracle: a logistic fit separates this data
        assert logistic_regression_accuracy(data) >= 0.99
        specs = (LayerSpec(2, 8, "relu"), LayerSpec(8, 2, "identity"))
        cfg = TrainConfig(epochs=200, batch_size=16, learning_rate=0.1, seed=0)
        model = train(specs, data, cfg)
        assert accuracy(model, data) >= 0.99

    def test_divergence_raises_numerical_error(self):
        from otfuse.data import DomainMixtureConfig, gen_synthetic
        from otfuse.errors import NumericalError

        data, _ = gen_synthetic(DomainMixtureConfig(), 0)
        specs = (LayerSpec(8, 16, "relu"), LayerSpec(16, 3, "identity"))
        with pytest.raises(NumericalError):
            train(specs, data, TrainConfig(epochs=50, learning_rate=1e9, seed=0))

    def test_records_seed_in_meta(self):
        rng = np.random.default_rng(5)
        data = two_blob_dataset(rng)
        specs = (LayerSpec(2, 3, "relu"), LayerSpec(3, 2, "identity"))
        out = train(specs, data, TrainConfig(epochs=1, seed=77))
        assert out.meta.seed == 77 and out.meta.training_epochs == 1


class TestFinetune:
    def test_zero_epochs_identity(self):
        rng = np.random.default_rng(6)
        data = two_blob_dataset(rng)
        specs = (LayerSpec(2, 4, "relu"), LayerSpec(4, 2, "identity"))
        model = train(specs, data, TrainConfig(epochs=3, seed=1))
        assert finetune(model, data, TrainConfig(epochs=0)) is model

    def test_converged_model_changes_little_on_heldout(self):
        from otfuse.data import DomainMixtureConfig, gen_synthetic

        cfg = DomainMixtureConfig(
            num_classes=5, train_per_class=150, heldout_per_class=60,
            domains=(0,), noise_scale=1.3, mean_scale=1.6,
        )
        tr, he = gen_synthetic(cfg, 4)
        specs = (
            LayerSpec(8, 16, "relu"),
            LayerSpec(16, 16, "relu"),
            LayerSpec(16, 5, "identity"),
        )
        model = train(specs, tr, TrainConfig(epochs=150, batch_size=64,
                                             learning_rate=0.1, seed=4))
        before = loss(model, he)
        after = loss(
            finetune(model, tr, TrainConfig(epochs=10, batch_size=64,
                                            learning_rate=0.01, seed=1004)),
            he,
        )
        assert abs(after - before) / before < 0.05

    def test_descends_on_train_set_for_fresh_models(self):
        wins = 0
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            data = two_blob_dataset(rng)
            specs = (LayerSpec(2, 6, "relu"), LayerSpec(6, 2, "identity"))
            model = init_checkpoint(specs, seed)
            before = loss(model, data)
            after = loss(
                finetune(model, data, TrainConfig(epochs=10, batch_size=16,
                                                  learning_rate=0.1, seed=seed)),
                data,
            )
            wins += after <= before
        assert wins >= 6  # majority of 10 seeds


class TestGradients:
    def test_backprop_matches_central_differences(self):
        h = 1e-5
        for trial in range(10):
            rng = np.random.default_rng(trial)
            specs = random_specs(rng, max_layers=3, max_units=8, activation="tanh")
            ckpt = random_checkpoint(rng, specs)
            n = 6
            data = make_dataset(
                rng.standard_normal((n, specs[0].in_dim)),
                rng.integers(0, specs[-1].out_dim, n),
                specs[-1].out_dim,
            )
            grads = loss_gradients(ckpt, data)
            ok_rel, total = 0, 0
            for li, layer in enumerate(ckpt.layers):
                for arr, garr in ((layer.w, grads[li].w), (layer.b, grads[li].b)):
                    flat = arr.ravel()
                    for k in range(flat.size):
                        orig = flat[k]
                        plus = [LayerWeights(l.w.copy(), l.b.copy()) for l in ckpt.layers]
                        minus = [LayerWeights(l.w.copy(), l.b.copy()) for l in ckpt.layers]
                        tgt_p = plus[li].w if arr is layer.w else plus[li].b
                        tgt_m = minus[li].w if arr is layer.w else minus[li].b
                        tgt_p.ravel()[k] = orig + h
                        tgt_m.ravel()[k] = orig - h
                        lp = loss(make_checkpoint(ckpt.specs, plus), data)
                        lm = loss(make_checkpoint(ckpt.specs, minus), data)
                        fd = (lp - lm) / (2 * h)
                        an = garr.ravel()[k]
                        assert abs(an - fd) <= 1e-4
                        total += 1
                        if abs(an - fd) <= 1e-6 * max(1.0, abs(fd)):
                            ok_rel += 1
            assert ok_rel / total >= 0.95


class TestConvReshape:
    def test_shape_arithmetic(self):
        out = conv_reshape([4, 3, 2, 1], np.arange(24.0))
        assert out.shape == (4, 6)

    def test_tiny(self):
        out = conv_reshape([2, 1, 1, 1], [5.0, 7.0])
        assert np.array_equal(out, [[5.0], [7.0]])

    def test_roundtrip_order(self):
        rng = np.random.default_rng(8)
        flat = rng.standard_normal(2 * 3 * 2 * 2)
        out = conv_reshape([2, 3, 2, 2], flat)
        assert np.array_equal(out.ravel(), flat)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            conv_reshape([2, 2, 2, 2], np.zeros(15))


class TestInterpolate:
    def test_endpoints_exact(self):
        rng = np.random.default_rng(9)
        specs = random_specs(rng, in_dim=3)
        a = random_checkpoint(rng, specs)
        b = random_checkpoint(rng, specs)
        at0 = interpolate(a, b, 0.0)
        at1 = interpolate(a, b, 1.0)
        assert all(np.array_equal(x.w, y.w) for x, y in zip(at0.layers, a.layers))
        assert all(np.array_equal(x.w, y.w) for x, y in zip(at1.layers, b.layers))

    def test_spec_mismatch(self):
        rng = np.random.default_rng(10)
        a = random_checkpoint(rng, (LayerSpec(2, 3, "identity"),))
        b = random_checkpoint(rng, (LayerSpec(2, 4, "identity"),))
        with pytest.raises(ValidationError):
            interpolate(a, b, 0.5)
