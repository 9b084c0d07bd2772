"""Tests for the aWOE and Z-score static transforms."""

import json
import math
import os

import numpy as np
import pytest

from src.simfuse.cohort import generate_synthetic_cohort, split_cohort
from src.simfuse.errors import DegenerateFeature, InvalidParameter, NoNegativeEvents, NoPositiveEvents
from src.simfuse.transform import (
    BinningMode,
    ZScoreParams,
    apply_awoe,
    apply_awoe_array,
    apply_zscore,
    fit_awoe,
    fit_awoe_values,
    fit_transform,
    fit_zscore_values,
    write_transform_params,
)


@pytest.fixture
def split_cohort_60():
    """A split synthetic cohort with a planted signal."""
    cohort = generate_synthetic_cohort(60, variates=1, series_len=5, signal_strength=1.5, seed=3)
    return split_cohort(cohort, 0.25, seed=3)


class TestAwoe:
    """Test cases for adaptive Weight-of-Evidence binning."""

    def test_gender_example(self):
        """Test the hand-computed value of a two-bin feature."""
        values = np.array([1, 1, 1, 1, 0, 0, 0, 0])
        labels = np.array([1, 1, 1, 0, 1, 0, 0, 0])
        binning = fit_awoe_values("gender", values, labels, epsilon=1e-4)

        assert binning.mode is BinningMode.PER_UNIQUE_VALUE
        assert binning.n_bins == 2
        assert apply_awoe(binning, 1) == pytest.approx(math.log(0.7501 / 0.2501))
        assert apply_awoe(binning, 1) == pytest.approx(1.0983, abs=1e-4)
        assert apply_awoe(binning, 0) == pytest.approx(-math.log(0.7501 / 0.2501))

    def test_symmetric_bin_is_zero(self):
        """Test that equal event shares give an aWOE of 0."""
        values = np.array([0, 0, 1, 1])
        labels = np.array([1, 0, 1, 0])
        binning = fit_awoe_values("x", values, labels)
        assert binning.bin_awoe == pytest.approx((0.0, 0.0))

    def test_equal_frequency_mode(self):
        """Test that 150 distinct values over 400 records give 20 bins at q=20."""
        values = np.resize(np.linspace(0.0, 1.0, 150), 400)
        labels = np.arange(400) % 2
        binning = fit_awoe_values("age", values, labels, unique_threshold=100, q=20)

        assert binning.mode is BinningMode.EQUAL_FREQUENCY
        assert binning.n_bins == 20
        bins = binning.bin_indices(values)
        assert bins.min() == 0 and bins.max() == 19

    def test_minimum_two_bins(self):
        """Test that a small sample still gets two equal-frequency bins."""
        values = np.arange(30, dtype=float)
        labels = np.arange(30) % 2
        binning = fit_awoe_values("age", values, labels, unique_threshold=10, q=20)
        assert binning.n_bins == 2

    def test_clamping(self):
        """Test that values outside the training range map to the end bins."""
        values = np.arange(200, dtype=float)
        labels = (values > 120).astype(int)
        binning = fit_awoe_values("age", values, labels, q=20)
        assert apply_awoe(binning, -50.0) == binning.bin_awoe[0]
        assert apply_awoe(binning, 1e6) == binning.bin_awoe[-1]

    def test_values_in_one_bin_share_output(self):
        """Test that distinct raw values in the same bin are indistinguishable."""
        values = np.arange(200, dtype=float)
        labels = (values > 120).astype(int)
        binning = fit_awoe_values("age", values, labels, q=20)
        outputs = apply_awoe_array(binning, values)
        for b in range(binning.n_bins):
            in_bin = outputs[binning.bin_indices(values) == b]
            assert np.all(in_bin == in_bin[0])

    def test_sign_property(self):
        """Test that positive-heavy bins are positive and negative-heavy bins negative."""
        values = np.arange(200, dtype=float)
        labels = (values > 120).astype(int)
        binning = fit_awoe_values("age", values, labels, q=20)
        for pos, neg, awoe in zip(binning.pos_counts, binning.neg_counts, binning.bin_awoe):
            pos_share, neg_share = pos / sum(binning.pos_counts), neg / sum(binning.neg_counts)
            if pos_share > neg_share:
                assert awoe > 0
            elif pos_share < neg_share:
                assert awoe < 0

    def test_bin_generalization_random(self):
        """Test that inputs sharing a bin share the output on random datasets."""
        for trial in range(1000):
            rng = np.random.default_rng(trial)
            n = int(rng.integers(4, 80))
            values = rng.integers(0, int(rng.integers(2, 150)), n).astype(float)
            labels = rng.integers(0, 2, n)
            labels[0], labels[1] = 0, 1
            binning = fit_awoe_values("x", values, labels, unique_threshold=20, q=int(rng.integers(2, 10)))

            probe = np.concatenate([values, rng.uniform(values.min() - 5, values.max() + 5, 50)])
            bins = binning.bin_indices(probe)
            outputs = apply_awoe_array(binning, probe)
            for b in np.unique(bins):
                assert np.all(outputs[bins == b] == outputs[bins == b][0])

    def test_finite_with_empty_class_in_bin(self):
        """Test that a bin without negatives stays finite thanks to epsilon."""
        binning = fit_awoe_values("x", np.array([0, 0, 1, 1]), np.array([0, 0, 1, 1]))
        assert all(math.isfinite(a) for a in binning.bin_awoe)

    def test_no_positive_events(self):
        """Test that a training set without positives is rejected."""
        with pytest.raises(NoPositiveEvents):
            fit_awoe_values("x", np.array([0, 1]), np.array([0, 0]))

    def test_no_negative_events(self):
        """Test that a training set without negatives is rejected."""
        with pytest.raises(NoNegativeEvents):
            fit_awoe_values("x", np.array([0, 1]), np.array([1, 1]))

    def test_fit_reads_training_split_only(self, split_cohort_60):
        """Test that fitting on a split cohort counts training records only."""
        binning = fit_awoe(split_cohort_60, "gender", "cad")
        assert sum(binning.pos_counts) + sum(binning.neg_counts) == len(split_cohort_60.split.train_ids)


class TestZScore:
    """Test cases for Z-score standardization."""

    def test_fit_example(self):
        """Test mean 5 and population std 2."""
        params = fit_zscore_values("x", np.array([2, 4, 4, 4, 5, 5, 7, 9]))
        assert params.mean == pytest.approx(5.0)
        assert params.std == pytest.approx(2.0)

    def test_fit_two_values(self):
        """Test mean 2 and std 1 for [1, 3]."""
        params = fit_zscore_values("x", np.array([1, 3]))
        assert (params.mean, params.std) == (2.0, 1.0)

    def test_constant_feature(self):
        """Test that zero variance raises DegenerateFeature."""
        with pytest.raises(DegenerateFeature):
            fit_zscore_values("x", np.array([4, 4, 4]))

    def test_needs_two_values(self):
        """Test that one training value is not enough."""
        with pytest.raises(InvalidParameter):
            fit_zscore_values("x", np.array([4]))

    def test_random_training_moments(self):
        """Test mean 0 and population std 1 after fitting on random samples."""
        for trial in range(100):
            rng = np.random.default_rng(trial)
            values = rng.normal(rng.uniform(-50, 50), rng.uniform(0.1, 20), int(rng.integers(2, 200)))
            params = fit_zscore_values("x", values)
            standardized = np.array([apply_zscore(params, v) for v in values])
            assert abs(standardized.mean()) <= 1e-9
            assert abs(standardized.std() - 1.0) <= 1e-9

    def test_apply(self):
        """Test the standardized values of the worked example."""
        params = ZScoreParams("x", 5.0, 2.0)
        assert apply_zscore(params, 5.0) == 0.0
        assert apply_zscore(params, 7.0) == 1.0
        assert apply_zscore(params, 1.0) == -2.0


class TestFitTransform:
    """Test cases for the cohort-level transform."""

    def test_target_dropped_from_schema(self, split_cohort_60):
        """Test that predicting cad removes cad and keeps chf."""
        transformed, fitted = fit_transform(split_cohort_60, "awoe", "cad")
        assert "cad" not in transformed.schema
        assert "chf" in transformed.schema
        assert len(transformed.schema) == 6
        assert fitted.features == transformed.schema

    def test_none_is_identity(self, split_cohort_60):
        """Test that method none leaves remaining statics unchanged."""
        transformed, _ = fit_transform(split_cohort_60, "none", "chf")
        original = split_cohort_60.static_matrix()
        keep = [i for i, name in enumerate(split_cohort_60.schema) if name != "chf"]
        assert np.array_equal(transformed.static_matrix(), original[:, keep])

    def test_awoe_codomain(self, split_cohort_60):
        """Test that every transformed value is one of the fitted bin values."""
        transformed, fitted = fit_transform(split_cohort_60, "awoe", "cad")
        for j, name in enumerate(transformed.schema):
            allowed = set(fitted.awoe[name].bin_awoe)
            assert set(transformed.static_matrix()[:, j]) <= allowed

    def test_zscore_training_moments(self, split_cohort_60):
        """Test that training rows have mean 0 and population std 1."""
        transformed, _ = fit_transform(split_cohort_60, "zscore", "cad")
        train = transformed.static_matrix(transformed.split.train_ids)
        assert np.allclose(train.mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(train.std(axis=0), 1.0, atol=1e-9)

    def test_no_test_label_leakage(self, split_cohort_60):
        """Test that flipping test labels does not change the fitted parameters."""
        from src.simfuse.cohort.models import PatientRecord

        test_ids = set(split_cohort_60.split.test_ids)
        flipped = split_cohort_60.with_records(
            PatientRecord(
                r.patient_id,
                r.statics,
                {**r.labels, "cad": 1 - r.labels["cad"]} if r.patient_id in test_ids else r.labels,
                r.series,
            )
            for r in split_cohort_60.records
        )
        _, a = fit_transform(split_cohort_60, "awoe", "cad")
        _, b = fit_transform(flipped, "awoe", "cad")
        assert a.to_dict() == b.to_dict()

    def test_requires_split(self):
        """Test that an unsplit cohort is rejected."""
        cohort = generate_synthetic_cohort(10, variates=1, series_len=3, seed=0)
        with pytest.raises(InvalidParameter):
            fit_transform(cohort, "awoe", "cad")

    def test_write_params(self, split_cohort_60, temp_dir):
        """Test that aWOE parameters land in binning.json."""
        _, fitted = fit_transform(split_cohort_60, "awoe", "cad")
        path = write_transform_params(fitted, temp_dir)
        assert os.path.basename(path) == "binning.json"
        with open(path) as f:
            payload = json.load(f)
        assert payload["method"] == "awoe"
        assert "gender" in payload["binnings"]
        assert payload["binnings"]["gender"]["epsilon"] == 1e-4

        _, identity = fit_transform(split_cohort_60, "none", "cad")
        assert write_transform_params(identity, temp_dir) is None


if __name__ == "__main__":
    pytest.main([__file__])
