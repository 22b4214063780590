from dataclasses import replace

import numpy as np
import pytest

from otfuse.data import (
    DomainMixtureConfig,
    concat_datasets,
    datasets_equal,
    gen_synthetic,
    load_dataset_csv,
    make_dataset,
    nearest_centroid_accuracy,
    save_dataset_csv,
)
from otfuse.errors import DataFormatError, ValidationError


class TestGenSynthetic:
    def test_same_seed_identical(self):
        cfg = DomainMixtureConfig()
        a_train, a_held = gen_synthetic(cfg, 42)
        b_train, b_held = gen_synthetic(cfg, 42)
        assert datasets_equal(a_train, b_train)
        assert datasets_equal(a_held, b_held)

    def test_different_seed_differs(self):
        cfg = DomainMixtureConfig()
        a, _ = gen_synthetic(cfg, 1)
        b, _ = gen_synthetic(cfg, 2)
        assert not datasets_equal(a, b)

    def test_zero_shift_means_equal_across_domains(self):
        # with no shift both domains sample the same class-conditional law
        cfg = DomainMixtureConfig(domain_shift=0.0, train_per_class=2000,
                                  heldout_per_class=1, noise_scale=0.5)
        d0, _ = gen_synthetic(replace(cfg, domains=(0,)), 5)
        d1, _ = gen_synthetic(replace(cfg, domains=(1,)), 5)
        for c in range(cfg.num_classes):
            m0 = d0.features[d0.labels == c].mean(axis=0)
            m1 = d1.features[d1.labels == c].mean(axis=0)
            assert np.abs(m0 - m1).max() < 0.1  # ~6 sigma of the mean estimate

    def test_domain_subset_reproduces_joint_rows(self):
        cfg = DomainMixtureConfig(train_per_class=10, heldout_per_class=5)
        joint_train, joint_held = gen_synthetic(cfg, 9)
        only0_train, only0_held = gen_synthetic(replace(cfg, domains=(0,)), 9)
        n0 = cfg.num_classes * cfg.train_per_class
        assert np.array_equal(joint_train.features[:n0], only0_train.features)
        h0 = cfg.num_classes * cfg.heldout_per_class
        assert np.array_equal(joint_held.features[:h0], only0_held.features)

    def test_centroid_oracle_beats_chance(self):
        cfg = DomainMixtureConfig()
        train, held = gen_synthetic(cfg, 3)
        assert nearest_centroid_accuracy(train, held) > 1.0 / cfg.num_classes

    def test_degenerate_noise_rejected(self):
        with pytest.raises(ValidationError):
            gen_synthetic(DomainMixtureConfig(noise_scale=0.0), 0)

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError):
            gen_synthetic(DomainMixtureConfig(num_classes=1), 0)

    def test_no_domains_rejected(self):
        with pytest.raises(ValidationError):
            gen_synthetic(DomainMixtureConfig(domains=()), 0)

    def test_per_domain_counts(self):
        cfg = DomainMixtureConfig(num_classes=4, train_per_class=7, heldout_per_class=3)
        train, held = gen_synthetic(cfg, 0)
        assert train.features.shape[0] == 2 * 4 * 7
        assert held.features.shape[0] == 2 * 4 * 3


class TestDatasetValidation:
    def test_label_out_of_range(self):
        with pytest.raises(ValidationError):
            make_dataset(np.zeros((2, 2)), np.array([0, 5]), 3)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            make_dataset(np.zeros((3, 2)), np.array([0, 1]), 2)

    def test_concat_disagreement(self):
        a = make_dataset(np.zeros((2, 2)), np.array([0, 1]), 2)
        b = make_dataset(np.zeros((2, 3)), np.array([0, 1]), 2)
        with pytest.raises(ValidationError):
            concat_datasets(a, b)


class TestDatasetCsv:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = make_dataset(rng.standard_normal((10, 3)), rng.integers(0, 4, 10), 4)
        path = tmp_path / "d.csv"
        save_dataset_csv(ds, path)
        loaded = load_dataset_csv(path)
        assert datasets_equal(ds, loaded)
        header = path.read_text().splitlines()[0]
        assert header == "f0,f1,f2,label"

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,0\n")
        with pytest.raises(DataFormatError):
            load_dataset_csv(path)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f0,f1,label\n1.0,2.0\n")
        with pytest.raises(DataFormatError):
            load_dataset_csv(path)

    def test_non_numeric(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f0,label\nx,0\n")
        with pytest.raises(DataFormatError):
            load_dataset_csv(path)
