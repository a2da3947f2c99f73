"""MMC analytics and the three distance levels."""

import numpy as np
import pytest

from fslab.analysis import (DatasetMMC, MMCMode, dataset_level_distance,
                            dataset_mmc, image_level_distance, mmc_channel_table,
                            msd, normalized_msd, pair_mmc, task_level_distance)
from fslab.core import EmbeddingDataset
from fslab.transforms import TransformSpec, simple_transform


def toy_dataset(seed=0, n_classes=4, n_per_class=8, d=5):
    rng = np.random.default_rng(seed)
    classes = {f"c{i}": rng.uniform(0.02, 1.0, size=(n_per_class, d))
               for i in range(n_classes)}
    return EmbeddingDataset(d, classes, non_negative=True)


class TestDistances:
    # Worked pairs: the "before" channel profile vs its shifted counterpart.
    def test_first_reference_pair(self):
        x = [0.05, 0.08, 0.87]
        y = [0.15, 0.10, 0.75]
        assert normalized_msd(x, y) == pytest.approx(1.36, abs=0.005)
        assert msd(x, y) == pytest.approx(0.008, abs=0.0005)

    def test_second_reference_pair(self):
        x = [0.40, 0.30, 0.30]
        y = [0.55, 0.22, 0.23]
        assert normalized_msd(x, y) == pytest.approx(0.09, abs=0.005)
        assert msd(x, y) == pytest.approx(0.011, abs=0.0005)

    def test_normalized_msd_exact_values(self):
        # Frozen closed-form values for the two pairs above.
        # (1/3)(4 + 1/16 + (12/87)^2) and (1/3)(9/64 + (8/30)^2 + (7/30)^2).
        assert normalized_msd([0.05, 0.08, 0.87], [0.15, 0.10, 0.75]) == \
            pytest.approx((4.0 + 1.0 / 16.0 + (12.0 / 87.0) ** 2) / 3.0,
                          rel=1e-12)
        assert normalized_msd([0.40, 0.30, 0.30], [0.55, 0.22, 0.23]) == \
            pytest.approx((9.0 / 64.0 + (8.0 / 30.0) ** 2 + (7.0 / 30.0) ** 2)
                          / 3.0, rel=1e-12)

    def test_msd_symmetric_normalized_not(self):
        x, y = [0.5, 0.2], [0.3, 0.4]
        assert msd(x, y) == msd(y, x)
        assert normalized_msd(x, y) != normalized_msd(y, x)

    def test_identical_vectors(self):
        assert msd([0.3, 0.7], [0.3, 0.7]) == 0.0
        assert normalized_msd([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_zero_reference_rejected(self):
        with pytest.raises(ZeroDivisionError):
            normalized_msd([0.0, 1.0], [0.5, 1.0])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            msd([1.0], [1.0, 2.0])


class TestPairMmc:
    def test_original_mode_hand_computed(self):
        classes = {
            "a": np.array([[0.2, 0.6], [0.4, 0.8]]),  # means (0.3, 0.7)
            "b": np.array([[0.5, 0.1], [0.7, 0.3]]),  # means (0.6, 0.2)
        }
        ds = EmbeddingDataset(2, classes, non_negative=True)
        w = pair_mmc(ds, "a", "b", MMCMode("original")).weights
        # Unnormalized MMC: ((0.3+0.6)/2, (0.7+0.2)/2) = (0.45, 0.45).
        assert np.allclose(w, [0.5, 0.5])

    def test_simple_mode_hand_computed(self):
        classes = {
            "a": np.array([[0.2, 0.6]]),
            "b": np.array([[0.5, 0.1]]),
        }
        ds = EmbeddingDataset(2, classes, non_negative=True)
        w = pair_mmc(ds, "a", "b", MMCMode("simple", k=1.3)).weights
        expected = 0.5 * (simple_transform(np.array([0.2, 0.6]), 1.3)
                          + simple_transform(np.array([0.5, 0.1]), 1.3))
        expected = expected / expected.sum()
        assert np.allclose(w, expected, rtol=1e-12)

    def test_oracle_mode_emphasizes_discriminative_channel(self):
        rng = np.random.default_rng(0)
        n = 400
        # Channel 0 separates the classes; channel 1 is identical noise.
        a = np.column_stack([rng.normal(0.2, 0.02, n), rng.normal(0.5, 0.1, n)])
        b = np.column_stack([rng.normal(0.8, 0.02, n), rng.normal(0.5, 0.1, n)])
        ds = EmbeddingDataset(2, {"a": np.abs(a), "b": np.abs(b)},
                              non_negative=True)
        w_orig = pair_mmc(ds, "a", "b", MMCMode("original")).weights
        w_oracle = pair_mmc(ds, "a", "b", MMCMode("oracle")).weights
        assert w_oracle[0] / w_oracle[1] > 10.0 * (w_orig[0] / w_orig[1])

    def test_output_normalized(self):
        ds = toy_dataset()
        for kind in ("original", "simple", "oracle"):
            w = pair_mmc(ds, "c0", "c1", MMCMode(kind))
            assert w.normalized
            assert w.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_same_class_rejected(self):
        with pytest.raises(ValueError):
            pair_mmc(toy_dataset(), "c0", "c0", MMCMode("original"))

    def test_unknown_class(self):
        with pytest.raises(KeyError):
            pair_mmc(toy_dataset(), "c0", "zzz", MMCMode("original"))

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            MMCMode("spectral")


class TestDatasetMmc:
    def test_pair_count(self):
        out = dataset_mmc(toy_dataset(n_classes=4), MMCMode("original"))
        assert out.pair_count == 6

    def test_is_mean_of_pair_mmcs(self):
        ds = toy_dataset(n_classes=3)
        out = dataset_mmc(ds, MMCMode("original"))
        total = np.zeros(ds.d)
        from itertools import combinations
        for ci, cj in combinations(ds.class_names, 2):
            total += pair_mmc(ds, ci, cj, MMCMode("original")).weights
        assert np.allclose(out.weights.weights, total / total.sum())

    def test_requires_two_classes(self):
        with pytest.raises(ValueError):
            dataset_mmc(toy_dataset(n_classes=1), MMCMode("original"))


class TestLevelDistances:
    def test_dataset_level_uses_first_as_reference(self):
        ds = toy_dataset()
        a = dataset_mmc(ds, MMCMode("original"))
        b = dataset_mmc(ds, MMCMode("simple"))
        expected = normalized_msd(a.weights.weights, b.weights.weights)
        assert dataset_level_distance(a, b) == expected

    def test_task_level_is_mean_over_pairs(self):
        ds = toy_dataset(n_classes=3)
        ma, mb = MMCMode("original"), MMCMode("simple")
        from itertools import combinations
        dists = [msd(pair_mmc(ds, ci, cj, ma).weights,
                     pair_mmc(ds, ci, cj, mb).weights)
                 for ci, cj in combinations(ds.class_names, 2)]
        assert task_level_distance(ds, ma, mb) == pytest.approx(np.mean(dists))

    def test_image_level_hand_computed(self):
        # One image, identity vs simple: msd of the two l1-normalized vectors.
        x = np.array([[0.1, 0.4]])
        ds = EmbeddingDataset(2, {"a": x}, non_negative=True)
        na = x[0] / x[0].sum()
        fb = simple_transform(x[0], 1.3)
        nb = fb / fb.sum()
        expected = float(np.mean((na - nb) ** 2))
        got = image_level_distance(ds, TransformSpec("none"),
                                   TransformSpec("simple", k=1.3))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_image_level_identical_transforms(self):
        ds = toy_dataset()
        spec = TransformSpec("simple")
        assert image_level_distance(ds, spec, spec) == 0.0

    def test_image_level_zero_norm_rejected(self):
        ds = EmbeddingDataset(1, {"a": np.array([[0.0]])}, non_negative=True)
        with pytest.raises(ZeroDivisionError):
            image_level_distance(ds, TransformSpec("none"),
                                 TransformSpec("simple"))

    def test_distance_is_small_when_transform_is_mild(self):
        # log with tiny slope ~ identity scaling: near-zero image distance.
        ds = toy_dataset()
        d_mild = image_level_distance(ds, TransformSpec("none"),
                                      TransformSpec("log", a=1e-4))
        d_sharp = image_level_distance(ds, TransformSpec("none"),
                                       TransformSpec("simple", k=1.3))
        assert d_mild < d_sharp


class TestChannelTable:
    def test_rows(self):
        ds = toy_dataset(d=3)
        rows = mmc_channel_table(ds, MMCMode("original"), MMCMode("oracle"))
        assert [r[0] for r in rows] == [0, 1, 2]
        before = dataset_mmc(ds, MMCMode("original")).weights.weights
        assert rows[1][1] == pytest.approx(before[1])
