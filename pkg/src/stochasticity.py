# src/stochasticity.py
"""
Stochasticity measurements: empirical SND, the probe scatter experiment and
the element-wise diversity of statistic sequences.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from config import HISTOGRAM_BINS, SCATTER_POPULATION
from errors import ValidationError
from parallel import run_cells
from transforms import TransformKind, center, group_slices, grouped_whitening

logger = logging.getLogger(__name__)

SWEEP_AXES = ("dimension", "batch", "group", "iterations")
SND_COLUMNS = ["axis_value", "transform", "group", "snd", "std_over_points"]


@dataclass(frozen=True)
class SndConfig:
    kind: TransformKind
    dim: int
    group_size: int
    batch: int
    num_batches: int
    num_points: int
    seed: int
    probe_in_batch: bool = False


@dataclass
class SndReport:
    config: SndConfig
    label: str
    per_point_disturbance: np.ndarray
    snd: float

    @property
    def std_over_points(self):
        return float(np.std(self.per_point_disturbance))


@dataclass
class DiversityReport:
    std: np.ndarray
    normalized_std: np.ndarray
    skipped: int
    std_histogram: tuple # (counts, bin edges)
    normalized_histogram: tuple

    @property
    def mean_std(self):
        return float(self.std.mean())

    @property
    def mean_normalized_std(self):
        return float(self.normalized_std.mean())


# --- SND ---

def normalize_probe(batch, x, spec, probe_in_batch=False):
    """
    Whitened image of probe `x` under the statistics of `batch`.

    Args:
        batch (np.ndarray): d×B mini-batch.
        x (np.ndarray): d-vector probe.
        spec (WhiteningSpec): Transform configuration.
        probe_in_batch (bool): Include the probe in the statistics instead of transforming it afterwards.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if probe_in_batch:
        x_centered, _ = center(np.column_stack([batch, x]))
        return grouped_whitening(x_centered, spec).x_whitened[:, -1]
    x_centered, mu = center(batch)
    result = grouped_whitening(x_centered, spec)
    shifted = x - mu
    out = np.empty_like(shifted)
    for rows, w in zip(group_slices(shifted.size, result.group_size), result.ws):
        out[rows] = w @ shifted[rows]
    return out


def point_disturbance(outputs):
    """Mean Euclidean distance of the s normalized outputs (rows) to their mean."""
    outputs = np.asarray(outputs, dtype=np.float64)
    return float(np.mean(np.linalg.norm(outputs - outputs.mean(axis=0), axis=1)))


def snd(sampler, spec, batch, num_batches, num_points, seed, probe_in_batch=False):
    """
    Empirical stochastic normalization disturbance of `spec` on `sampler`.

    Every probe and batch draws from its own stream derived from (seed, probe, batch),
    so results do not depend on evaluation order.

    Returns:
        SndReport
    """
    if num_batches < 2:
        raise ValidationError(f"SND needs at least 2 batches, got {num_batches}")
    if num_points < 1 or batch < 1:
        raise ValidationError(f"need num_points >= 1 and batch >= 1, got {num_points}, {batch}")
    dim = sampler.dim
    g = spec.resolve_group_size(dim)
    if spec.kind is not TransformKind.BN and batch < g:
        logger.warning("Batch size %d is below the group size %d; the covariance is near-singular", batch, g)

    disturbances = np.empty(num_points)
    for i in range(num_points):
        probe = sampler.draw(np.random.default_rng([seed, i, 0]), 1)[:, 0]
        outputs = np.stack(
            [
                normalize_probe(sampler.draw(np.random.default_rng([seed, i, j + 1]), batch), probe, spec, probe_in_batch)
                for j in range(num_batches)
            ]
        )
        disturbances[i] = point_disturbance(outputs)

    config = SndConfig(
        kind=spec.kind,
        dim=dim,
        group_size=g,
        batch=batch,
        num_batches=num_batches,
        num_points=num_points,
        seed=seed,
        probe_in_batch=probe_in_batch,
    )
    return SndReport(config=config, label=spec.label, per_point_disturbance=disturbances, snd=float(disturbances.mean()))


def _sweep_cell(cell):
    axis, value, spec, sampler_factory, dim, batch, num_batches, num_points, seed, probe_in_batch = cell
    if axis == "dimension":
        dim = value
    elif axis == "batch":
        batch = value
    elif axis == "group":
        spec = spec.with_(group_size=value)
    else:
        spec = spec.with_(itn_iterations=value)
    sampler = sampler_factory(dim)
    return snd(sampler, spec, batch, num_batches, num_points, seed, probe_in_batch)


def snd_sweep(axis, values, spec, sampler_factory, dim, batch, num_batches, num_points, seed,
              probe_in_batch=False, jobs=1):
    """
    Runs `snd` once per value of one axis, every cell sharing the same seed schedule.

    Args:
        axis (str): "dimension", "batch", "group" or "iterations".
        values (list[int]): Axis values.
        spec (WhiteningSpec): Base configuration.
        sampler_factory (callable): dim -> sampler.
        jobs (int): Worker processes for independent cells.

    Returns:
        list[SndReport]: One report per value, in input order.
    """
    if axis not in SWEEP_AXES:
        raise ValidationError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    if not values:
        raise ValidationError("sweep needs at least one value")
    cells = [
        (axis, value, spec, sampler_factory, dim, batch, num_batches, num_points, seed, probe_in_batch)
        for value in values
    ]
    return run_cells(_sweep_cell, cells, jobs)


def snd_frame(reports, axis_values=None):
    """CSV-ready frame with the snd.csv columns."""
    rows = []
    for index, report in enumerate(reports):
        rows.append(
            {
                "axis_value": axis_values[index] if axis_values is not None else report.config.dim,
                "transform": report.label.split("-")[0],
                "group": report.config.group_size,
                "snd": report.snd,
                "std_over_points": report.std_over_points,
            }
        )
    return pd.DataFrame(rows, columns=SND_COLUMNS)


# --- Scatter probe ---

@dataclass
class ScatterResult:
    population: np.ndarray # n×2 raw coordinates
    normalized: np.ndarray # trials×2 normalized probe coordinates

    def frame(self):
        population = pd.DataFrame({"kind": "population", "x": self.population[:, 0], "y": self.population[:, 1]})
        normalized = pd.DataFrame({"kind": "normalized", "x": self.normalized[:, 0], "y": self.normalized[:, 1]})
        return pd.concat([population, normalized], ignore_index=True)

    @property
    def normalized_std(self):
        return self.normalized.std(axis=0)


def scatter_probe(sampler, spec, batch, trials, probe_dims, seed, population=SCATTER_POPULATION,
                  probe_in_batch=False):
    """
    One fixed probe normalized against `trials` independent mini-batches.

    Args:
        probe_dims (tuple[int, int]): 0-based coordinates to report.

    Returns:
        ScatterResult
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    i, j = probe_dims
    if not (0 <= i < sampler.dim and 0 <= j < sampler.dim):
        raise ValidationError(f"probe dimensions {probe_dims} out of range for dimension {sampler.dim}")
    probe = sampler.draw(np.random.default_rng([seed, 0, 0]), 1)[:, 0]
    points = np.empty((trials, 2))
    for t in range(trials):
        batch_x = sampler.draw(np.random.default_rng([seed, 0, t + 1]), batch)
        out = normalize_probe(batch_x, probe, spec, probe_in_batch)
        points[t] = out[i], out[j]
    raw = sampler.draw(np.random.default_rng([seed, 1, 0]), population)
    return ScatterResult(population=raw[[i, j]].T.copy(), normalized=points)


# --- Sequence diversity ---

def sequence_diversity(sequence, bins=HISTOGRAM_BINS):
    """
    Element-wise population standard deviation of a statistic sequence, plus the
    variant computed on each element's sequence scaled to unit sum of squares.

    Returns:
        DiversityReport
    """
    if len(sequence) < 2:
        raise ValidationError(f"sequence diversity needs at least 2 matrices, got {len(sequence)}")
    shapes = {np.shape(m) for m in sequence}
    if len(shapes) != 1:
        raise ValidationError(f"sequence matrices have differing shapes {sorted(shapes)}")
    stacked = np.asarray(sequence, dtype=np.float64)
    std = stacked.std(axis=0)
    norms = np.sqrt(np.sum(stacked ** 2, axis=0))
    zero = norms == 0
    scaled = np.divide(stacked, norms, out=np.zeros_like(stacked), where=~zero)
    normalized_std = np.where(zero, 0.0, scaled.std(axis=0))
    skipped = int(zero.sum())
    if skipped:
        logger.info("%d all-zero elements skipped in the normalized diversity", skipped)
    return DiversityReport(
        std=std,
        normalized_std=normalized_std,
        skipped=skipped,
        std_histogram=np.histogram(std, bins=bins),
        normalized_histogram=np.histogram(normalized_std, bins=bins),
    )


def diversity_frame(reports):
    """
    Histogram rows for named reports.

    Args:
        reports (dict[str, DiversityReport]): e.g. {"sigma": ..., "whitening": ...}
    """
    frames = []
    for name, report in reports.items():
        for measure, (counts, edges) in (("std", report.std_histogram), ("normalized_std", report.normalized_histogram)):
            frames.append(
                pd.DataFrame(
                    {
                        "statistic": name,
                        "measure": measure,
                        "bin_left": edges[:-1],
                        "bin_right": edges[1:],
                        "count": counts,
                    }
                )
            )
    return pd.concat(frames, ignore_index=True)
