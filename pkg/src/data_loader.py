# src/data_loader.py
"""
Dataset ingestion: MNIST IDX files, seeded Gaussian datasets, and the
Gaussian sampler used by the stochasticity experiments.

Features are stored column-wise (d×n), matching the layer convention.
"""
import gzip
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from config import MNIST_CLASSES, MNIST_FILES, SAMPLER_RIDGE
from errors import MissingDataError, NotPositiveDefiniteError, ParseError, ValidationError
from linalg import as_symmetric, cholesky

logger = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class Dataset:
    features: np.ndarray # d×n, float64
    labels: np.ndarray # n, int64

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValidationError(f"features must be d×n, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[1],):
            raise ValidationError(
                f"{self.labels.shape[0]} labels for {self.features.shape[1]} samples"
            )

    def __len__(self):
        return self.features.shape[1]

    @property
    def dim(self):
        return self.features.shape[0]

    @property
    def num_classes(self):
        return int(self.labels.max()) + 1 if len(self) else 0

    def subset(self, index):
        return Dataset(features=self.features[:, index], labels=self.labels[index])


# --- IDX parsing ---

def _read_bytes(path):
    path = Path(path)
    if not path.exists():
        raise MissingDataError(f"file not found: {path}")
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _parse_idx(payload, expected_magic, ndim, what):
    header_size = 4 + 4 * ndim
    if len(payload) < header_size:
        raise ParseError(f"{what} file truncated inside the header", len(payload))
    magic = int(np.frombuffer(payload, dtype=">u4", count=1)[0])
    if magic != expected_magic:
        raise ParseError(f"bad magic 0x{magic:08x} in {what} file (expected 0x{expected_magic:08x})", 0)
    dims = [int(v) for v in np.frombuffer(payload, dtype=">u4", count=ndim, offset=4)]
    size = int(np.prod(dims))
    if len(payload) < header_size + size:
        raise ParseError(
            f"{what} file truncated: header declares {size} bytes of data, found {len(payload) - header_size}",
            len(payload),
        )
    data = np.frombuffer(payload, dtype=np.uint8, count=size, offset=header_size)
    return dims, data


def load_idx(images_path, labels_path):
    """
    Loads an IDX image/label pair (plain or gzip-compressed).

    Args:
        images_path (str | Path): IDX3 file, magic 0x00000803.
        labels_path (str | Path): IDX1 file, magic 0x00000801.

    Returns:
        Dataset: Images flattened row-major and scaled by 1/255.
    """
    image_dims, pixels = _parse_idx(_read_bytes(images_path), IDX_IMAGES_MAGIC, 3, "images")
    label_dims, labels = _parse_idx(_read_bytes(labels_path), IDX_LABELS_MAGIC, 1, "labels")
    count, rows, cols = image_dims
    if label_dims[0] != count:
        raise ParseError(f"{count} images but {label_dims[0]} labels", 4)
    if labels.size and labels.max() >= MNIST_CLASSES:
        bad = int(np.argmax(labels >= MNIST_CLASSES))
        raise ParseError(f"label {labels[bad]} outside [0, {MNIST_CLASSES - 1}]", 8 + bad)
    features = pixels.reshape(count, rows * cols).T.astype(np.float64) / 255.0
    logger.info("Loaded %d samples of dimension %d from %s", count, rows * cols, images_path)
    return Dataset(features=features, labels=labels.astype(np.int64))


def _find(directory, stem):
    for candidate in (directory / stem, directory / f"{stem}.gz"):
        if candidate.exists():
            return candidate
    raise MissingDataError(f"{stem}[.gz] not found in {directory}")


def load_mnist(directory):
    """
    Loads the standard MNIST train/test split from a directory.

    Returns:
        tuple: (train Dataset, test Dataset)
    """
    directory = Path(directory)
    train = load_idx(_find(directory, MNIST_FILES["train_images"]), _find(directory, MNIST_FILES["train_labels"]))
    test = load_idx(_find(directory, MNIST_FILES["test_images"]), _find(directory, MNIST_FILES["test_labels"]))
    return train, test


# --- Gaussian data ---

def default_covariance(dim, seed):
    """A Aᵀ/d + 0.5·I with A a seeded standard-normal d×d matrix."""
    a = np.random.default_rng(seed).standard_normal((dim, dim))
    return a @ a.T / dim + SAMPLER_RIDGE * np.eye(dim)


def covariance_from_recipe(recipe, dim, seed):
    if recipe is None or recipe == "default":
        return default_covariance(dim, seed)
    if recipe == "identity":
        return np.eye(dim)
    covariance = as_symmetric(recipe, "covariance recipe")
    if covariance.shape != (dim, dim):
        raise ValidationError(f"covariance recipe has shape {covariance.shape}, expected {(dim, dim)}")
    return covariance


class GaussianSampler:
    """Zero-mean Gaussian source; `draw(rng, n)` returns a d×n matrix."""

    def __init__(self, dim, seed=0, covariance="default"):
        self.dim = dim
        self.covariance = covariance_from_recipe(covariance, dim, seed)
        try:
            self.factor = cholesky(self.covariance)
        except NotPositiveDefiniteError as e:
            raise ValidationError(f"sampler covariance is not positive definite (pivot {e.pivot})") from e

    def draw(self, rng, n):
        return self.factor @ rng.standard_normal((self.dim, n))


def synth_gaussian(dim, n, covariance="default", seed=0, num_classes=MNIST_CLASSES):
    """
    Seeded Gaussian dataset; labels come from a fixed random linear classifier.

    Args:
        dim (int): Feature dimension.
        n (int): Number of samples (0 gives an empty dataset).
        covariance: "default", "identity" or an explicit SPD matrix.
        seed (int): Seed for covariance, samples and labels.
        num_classes (int): Label count of the linear classifier.

    Returns:
        Dataset
    """
    if n < 0 or dim < 1:
        raise ValidationError(f"need dim >= 1 and n >= 0, got dim={dim}, n={n}")
    sampler = GaussianSampler(dim, seed=seed, covariance=covariance)
    rng = np.random.default_rng([seed, 1])
    features = sampler.draw(rng, n)
    projection = rng.standard_normal((num_classes, dim))
    labels = np.argmax(projection @ features, axis=0).astype(np.int64) if n else np.zeros(0, dtype=np.int64)
    return Dataset(features=features, labels=labels)


def gaussian_split(dim, train, test, seed=0, covariance="default"):
    """Disjoint train/test datasets drawn from one seeded Gaussian dataset."""
    data = synth_gaussian(dim, train + test, covariance=covariance, seed=seed)
    return data.subset(slice(0, train)), data.subset(slice(train, train + test))


# --- Picklable data sources for worker processes ---

@lru_cache(maxsize=2)
def cached_mnist(directory):
    return load_mnist(directory)


@lru_cache(maxsize=4)
def cached_gaussian_split(dim, train, test, seed):
    return gaussian_split(dim, train, test, seed)


@dataclass(frozen=True)
class MnistSource:
    directory: str

    def __call__(self):
        return cached_mnist(self.directory)


@dataclass(frozen=True)
class GaussianSource:
    dim: int
    train: int
    test: int
    seed: int = 0

    def __call__(self):
        return cached_gaussian_split(self.dim, self.train, self.test, self.seed)


@dataclass(frozen=True)
class SamplerFactory:
    """dim → GaussianSampler with the default covariance recipe."""

    seed: int = 0
    covariance: str = "default"

    def __call__(self, dim):
        return GaussianSampler(dim, seed=self.seed, covariance=self.covariance)
