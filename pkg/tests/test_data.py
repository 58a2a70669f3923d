"""
Tests for datasets, imbalance protocols and file loaders.
"""

import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

import numpy as np
import pytest
from sklearn.neighbors import NearestCentroid
from skewbench.data import (Dataset, ImbalanceSpec, align_labels, class_subset, generate_synthetic, implant,
                            implant_long_tail, implant_step, load_csv, load_idx, oversample, save_csv,
                            undersample)
from skewbench.data.dataset import long_tail_counts, relabel, step_counts
from skewbench.errors import (CountMismatchError, InfeasibleImbalanceError, InvalidArgumentError,
                              MagicMismatchError, MissingLabelColumnError, NonNumericCellError,
                              TruncatedPayloadError)


def balanced(num_classes, per_class, dim=2, seed=0, split='train'):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(num_classes * per_class, dim))
    y = np.repeat(np.arange(num_classes), per_class)
    return Dataset(X, y, num_classes, split)


def counts_dataset(counts, seed=0):
    y = np.repeat(np.arange(len(counts)), counts)
    X = np.random.default_rng(seed).normal(size=(len(y), 3))
    return Dataset(X, y, len(counts))


def idx_bytes(magic, dims, payload):
    return np.array([magic, *dims], dtype='>u4').tobytes() + bytes(payload)


class TestDataset:
    """Tests for the Dataset value."""

    def test_counts_and_ratio(self):
        """Counts are the label histogram; the ratio is max over min."""
        d = counts_dataset([6, 3, 2])
        assert d.class_counts.tolist() == [6, 3, 2]
        assert d.imbalance_ratio == 3.0
        assert len(d) == 11
        assert d.input_dim == 3

    def test_canonical_order(self):
        """Classes sort by non-increasing count, ties by index."""
        d = counts_dataset([2, 5, 2, 7])
        assert d.canonical_order().tolist() == [3, 1, 0, 2]

    def test_immutable(self):
        """Stored arrays are read-only."""
        d = balanced(2, 3)
        with pytest.raises(ValueError):
            d.X[0, 0] = 1.0

    def test_invalid_labels(self):
        """Labels outside [0, K) are rejected."""
        with pytest.raises(InvalidArgumentError):
            Dataset(np.zeros((2, 2)), [0, 2], 2)

    def test_class_subset(self):
        """D_j holds exactly the samples of class j."""
        d = counts_dataset([4, 2])
        subset = class_subset(d, 1)
        assert len(subset) == 2
        assert set(subset.y.tolist()) == {1}


class TestLongTail:
    """Tests for long-tailed implantation."""

    def test_counts_formula(self):
        """K=10, n=5000, rho=100 decays from 5000 to 50."""
        counts = long_tail_counts(5000, 10, 100)
        assert counts[0] == 5000
        assert counts[-1] == 50
        assert np.all(np.diff(counts) < 0)

    def test_implant(self):
        """The implanted histogram follows the formula."""
        d = balanced(10, 100)
        out = implant_long_tail(d, 10, seed=1)
        assert out.class_counts.tolist() == long_tail_counts(100, 10, 10).tolist()
        assert out.class_counts[0] == 100
        assert out.class_counts[-1] == 10

    def test_ratio_one_is_identity(self):
        """rho=1 keeps every sample."""
        d = balanced(4, 20)
        out = implant_long_tail(d, 1, seed=3)
        assert out.class_counts.tolist() == [20] * 4
        np.testing.assert_array_equal(np.sort(out.X, axis=0), np.sort(d.X, axis=0))

    def test_deterministic(self):
        """Same inputs and seed select the same samples."""
        d = balanced(5, 40)
        a = implant_long_tail(d, 10, seed=9)
        b = implant_long_tail(d, 10, seed=9)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)

    def test_ratio_below_one(self):
        """rho < 1 is rejected."""
        with pytest.raises(InvalidArgumentError):
            implant_long_tail(balanced(3, 10), 0.5, seed=0)

    def test_infeasible(self):
        """A class rounded to zero samples is infeasible."""
        with pytest.raises(InfeasibleImbalanceError):
            implant_long_tail(balanced(3, 10), 100, seed=0)

    def test_test_split_rejected(self):
        """Imbalance is only implanted into training data."""
        with pytest.raises(InvalidArgumentError):
            implant_long_tail(balanced(3, 10, split='test'), 2, seed=0)


class TestStep:
    """Tests for step implantation."""

    def test_counts(self):
        """200 classes of 500: minority keeps 5 at rho=100 and 50 at rho=10."""
        counts = step_counts(500, 200, 100)
        assert (counts == 500).sum() == 100
        assert (counts == 5).sum() == 100
        assert set(step_counts(500, 200, 10).tolist()) == {500, 50}

    def test_implant_relabels(self):
        """Majority classes come first after relabelling; names follow the classes."""
        d = balanced(6, 30)
        out = implant_step(d, 10, seed=4)
        assert out.class_counts.tolist() == [30, 30, 30, 3, 3, 3]
        assert sorted(out.class_names) == sorted(d.class_names)

    def test_align_test_split(self):
        """The test split is relabelled to the training labelling."""
        train_set = balanced(6, 30, seed=1)
        test_set = balanced(6, 10, seed=2, split='test')
        out = implant_step(train_set, 10, seed=4)
        aligned = align_labels(test_set, out)
        assert aligned.class_names == out.class_names
        for j, name in enumerate(out.class_names):
            original = test_set.class_names.index(name)
            np.testing.assert_array_equal(class_subset(aligned, j).X, class_subset(test_set, original).X)

    def test_ratio_one(self):
        """rho=1 returns the data unchanged."""
        d = balanced(4, 10)
        assert implant_step(d, 1, seed=0) is d

    def test_dispatch(self):
        """implant dispatches on the ImbalanceSpec kind."""
        d = balanced(4, 20)
        assert implant(d, ImbalanceSpec('none')) is d
        assert implant(d, ImbalanceSpec('step', 2.0, 0)).class_counts.tolist() == [20, 20, 10, 10]

    def test_relabel_rejects_non_permutation(self):
        """Relabelling needs a permutation."""
        with pytest.raises(InvalidArgumentError):
            relabel(balanced(3, 2), [0, 0, 1])


class TestResampling:
    """Tests for over- and under-sampling."""

    def test_oversample(self):
        """Counts [100, 10] become [100, 100] by duplicating minority samples."""
        d = counts_dataset([100, 10])
        out = oversample(d, seed=0)
        assert out.class_counts.tolist() == [100, 100]
        minority = {tuple(row) for row in class_subset(d, 1).X}
        assert {tuple(row) for row in class_subset(out, 1).X} == minority

    def test_oversample_singleton(self):
        """A singleton class is repeated to the largest count."""
        d = counts_dataset([100, 10, 1])
        out = oversample(d, seed=0)
        assert out.class_counts.tolist() == [100, 100, 100]
        rows = class_subset(out, 2).X
        assert np.all(rows == rows[0])

    def test_oversample_balanced_unchanged(self):
        """Balanced input is returned as is."""
        d = balanced(3, 5)
        assert oversample(d, seed=0) is d

    def test_undersample(self):
        """Counts [100, 10] become [10, 10] without duplicates."""
        d = counts_dataset([100, 10])
        out = undersample(d, seed=0)
        assert out.class_counts.tolist() == [10, 10]
        assert len({tuple(row) for row in out.X}) == 20

    def test_undersample_singleton(self):
        """A singleton class drags every class down to one sample."""
        out = undersample(counts_dataset([100, 10, 1]), seed=0)
        assert out.class_counts.tolist() == [1, 1, 1]

    def test_empty_class(self):
        """An empty class cannot be resampled."""
        d = Dataset(np.zeros((3, 2)), [0, 0, 0], 2)
        with pytest.raises(InvalidArgumentError):
            oversample(d, seed=0)
        with pytest.raises(InvalidArgumentError):
            undersample(d, seed=0)


class TestSynthetic:
    """Tests for the Gaussian mixture generator."""

    def test_zero_noise(self):
        """Without noise every sample equals its class mean."""
        train_set, _ = generate_synthetic(3, 5, 4, 2.0, 0.0, seed=1)
        for j in range(3):
            rows = class_subset(train_set, j).X
            np.testing.assert_allclose(rows, np.repeat(rows[:1], 5, axis=0))
            assert np.linalg.norm(rows[0]) == pytest.approx(2.0)

    def test_deterministic(self):
        """Same seed, bitwise identical data."""
        a, _ = generate_synthetic(4, 10, 3, 1.0, 1.0, seed=5)
        b, _ = generate_synthetic(4, 10, 3, 1.0, 1.0, seed=5)
        np.testing.assert_array_equal(a.X, b.X)

    def test_nearest_centroid_accuracy(self):
        """Well separated classes are recovered by a nearest-centroid rule."""
        train_set, test_set = generate_synthetic(10, 1000, 32, 4.0, 1.0, seed=7)
        clf = NearestCentroid().fit(train_set.X, train_set.y)
        assert clf.score(test_set.X, test_set.y) > 0.95

    def test_test_count(self):
        """The test split has its own per-class count."""
        train_set, test_set = generate_synthetic(3, 20, 2, 1.0, 1.0, seed=0, test_per_class_count=7)
        assert train_set.class_counts.tolist() == [20] * 3
        assert test_set.class_counts.tolist() == [7] * 3
        assert test_set.split == 'test'

    def test_invalid_dims(self):
        """p < 2 or K < 2 is invalid."""
        with pytest.raises(InvalidArgumentError):
            generate_synthetic(1, 5, 3, 1.0, 1.0, seed=0)
        with pytest.raises(InvalidArgumentError):
            generate_synthetic(3, 5, 1, 1.0, 1.0, seed=0)


class TestIDXLoader:
    """Tests for the IDX loader."""

    def write(self, tmp_path, images, labels):
        (tmp_path / 'images.idx').write_bytes(images)
        (tmp_path / 'labels.idx').write_bytes(labels)
        return tmp_path / 'images.idx', tmp_path / 'labels.idx'

    def test_load(self, tmp_path):
        """3 images of 2x2 pixels give 3 samples of length 4 in [0, 1]."""
        images = idx_bytes(0x803, (3, 2, 2), range(0, 240, 20))
        labels = idx_bytes(0x801, (3,), [7, 3, 7])
        d = load_idx(*self.write(tmp_path, images, labels))
        assert d.X.shape == (3, 4)
        assert d.X.max() <= 1.0
        assert d.X[0, 1] == pytest.approx(20 / 255)
        assert d.class_names == ('3', '7')
        assert d.y.tolist() == [1, 0, 1]

    def test_magic_mismatch(self, tmp_path):
        """A wrong magic number is a parse error."""
        images = idx_bytes(0x801, (3, 2, 2), range(12))
        labels = idx_bytes(0x801, (3,), [0, 1, 0])
        with pytest.raises(MagicMismatchError):
            load_idx(*self.write(tmp_path, images, labels))

    def test_truncated(self, tmp_path):
        """A payload shorter than declared is a parse error."""
        images = idx_bytes(0x803, (3, 2, 2), range(10))
        labels = idx_bytes(0x801, (3,), [0, 1, 0])
        with pytest.raises(TruncatedPayloadError):
            load_idx(*self.write(tmp_path, images, labels))

    def test_count_mismatch(self, tmp_path):
        """Label and image counts must agree."""
        images = idx_bytes(0x803, (3, 2, 2), range(12))
        labels = idx_bytes(0x801, (2,), [0, 1])
        with pytest.raises(CountMismatchError):
            load_idx(*self.write(tmp_path, images, labels))

    def test_missing_file(self, tmp_path):
        """Missing files surface as FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_idx(tmp_path / 'nope', tmp_path / 'nope2')


class TestCSVLoader:
    """Tests for the CSV loader and writer."""

    def test_single_row(self, tmp_path):
        """One labelled row becomes one sample."""
        path = tmp_path / 'one.csv'
        path.write_text("label,f0,f1\n1,0.5,0.25\n")
        d = load_csv(path)
        np.testing.assert_array_equal(d.X, [[0.5, 0.25]])
        assert d.class_names == ('1',)

    def test_missing_label_column(self, tmp_path):
        """A header without 'label' is a parse error."""
        path = tmp_path / 'bad.csv'
        path.write_text("f0,f1\n0.5,0.25\n")
        with pytest.raises(MissingLabelColumnError):
            load_csv(path)

    def test_non_numeric_cell(self, tmp_path):
        """Feature cells must be numbers."""
        path = tmp_path / 'bad.csv'
        path.write_text("label,f0\n1,abc\n")
        with pytest.raises(NonNumericCellError):
            load_csv(path)

    def test_round_trip(self, tmp_path):
        """Saved datasets load back bit for bit."""
        d = balanced(3, 4, dim=5, seed=11)
        path = save_csv(d, tmp_path / 'd.csv')
        back = load_csv(path)
        np.testing.assert_array_equal(back.X, d.X)
        np.testing.assert_array_equal(back.y, d.y)
