import gzip
import struct

import numpy as np
import pytest

from config import MNIST_FILES
from data_loader import (
    GaussianSampler,
    GaussianSource,
    gaussian_split,
    load_idx,
    load_mnist,
    synth_gaussian,
)
from errors import MissingDataError, ParseError, ValidationError


def _images(count=2, rows=2, cols=2, pixels=(0, 255, 0, 255, 255, 0, 255, 0), magic=0x00000803):
    return struct.pack(">IIII", magic, count, rows, cols) + bytes(pixels)


def _labels(values=(3, 7), magic=0x00000801):
    return struct.pack(">II", magic, len(values)) + bytes(values)


@pytest.fixture
def idx_pair(tmp_path):
    images = tmp_path / "images"
    labels = tmp_path / "labels"
    images.write_bytes(_images())
    labels.write_bytes(_labels())
    return images, labels


def test_load_idx_fixture(idx_pair):
    data = load_idx(*idx_pair)
    assert len(data) == 2
    assert data.dim == 4
    assert set(np.unique(data.features)) == {0.0, 1.0}
    assert np.array_equal(data.features[:, 0], [0.0, 1.0, 0.0, 1.0])
    assert np.array_equal(data.labels, [3, 7])


def test_load_idx_gzip(tmp_path):
    images = tmp_path / "images.gz"
    labels = tmp_path / "labels.gz"
    images.write_bytes(gzip.compress(_images()))
    labels.write_bytes(gzip.compress(_labels()))
    assert len(load_idx(images, labels)) == 2


def test_bad_label_magic(idx_pair):
    images, labels = idx_pair
    labels.write_bytes(_labels(magic=0x00000802))
    with pytest.raises(ParseError, match="bad magic") as info:
        load_idx(images, labels)
    assert info.value.offset == 0


def test_truncated_images(idx_pair):
    images, labels = idx_pair
    images.write_bytes(_images()[:-3])
    with pytest.raises(ParseError, match="truncated"):
        load_idx(images, labels)


def test_count_mismatch_and_label_range(idx_pair):
    images, labels = idx_pair
    labels.write_bytes(_labels(values=(1, 2, 3)))
    with pytest.raises(ParseError, match="2 images but 3 labels"):
        load_idx(images, labels)
    labels.write_bytes(_labels(values=(1, 10)))
    with pytest.raises(ParseError, match="outside") as info:
        load_idx(images, labels)
    assert info.value.offset == 9


def test_missing_files(tmp_path):
    with pytest.raises(MissingDataError):
        load_idx(tmp_path / "nope", tmp_path / "nada")
    with pytest.raises(MissingDataError, match=MNIST_FILES["train_images"]):
        load_mnist(tmp_path)


def test_load_mnist_finds_split(tmp_path):
    for key in ("train_images", "test_images"):
        (tmp_path / MNIST_FILES[key]).write_bytes(_images())
    for key in ("train_labels", "test_labels"):
        (tmp_path / f"{MNIST_FILES[key]}.gz").write_bytes(gzip.compress(_labels()))
    train, test = load_mnist(tmp_path)
    assert len(train) == len(test) == 2


def test_synth_gaussian_is_reproducible():
    first = synth_gaussian(5, 50, seed=3)
    second = synth_gaussian(5, 50, seed=3)
    assert np.array_equal(first.features, second.features)
    assert np.array_equal(first.labels, second.labels)
    assert first.labels.max() < 10


def test_synth_gaussian_empty():
    data = synth_gaussian(3, 0)
    assert len(data) == 0
    assert data.features.shape == (3, 0)


def test_sampler_matches_covariance():
    sampler = GaussianSampler(4, seed=1)
    x = sampler.draw(np.random.default_rng(0), 100_000)
    assert np.max(np.abs(x @ x.T / x.shape[1] - sampler.covariance)) < 0.05


def test_non_spd_recipe_rejected():
    with pytest.raises(ValidationError, match="not positive definite"):
        synth_gaussian(2, 10, covariance=np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValidationError, match="shape"):
        synth_gaussian(3, 10, covariance=np.eye(2))


def test_gaussian_split_and_source():
    train, test = gaussian_split(4, 30, 10, seed=2)
    assert (len(train), len(test)) == (30, 10)
    source = GaussianSource(4, 30, 10, seed=2)
    cached_train, _ = source()
    assert np.array_equal(cached_train.features, train.features)
