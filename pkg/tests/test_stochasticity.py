import logging

import numpy as np
import pytest

from data_loader import GaussianSampler, SamplerFactory
from errors import ValidationError
from stochasticity import (
    normalize_probe,
    point_disturbance,
    scatter_probe,
    sequence_diversity,
    diversity_frame,
    snd,
    snd_frame,
    snd_sweep,
)
from transforms import WhiteningSpec


def test_point_disturbance():
    assert point_disturbance(np.ones((5, 3))) == 0.0
    assert point_disturbance([[1.0, 0.0], [-1.0, 0.0]]) == pytest.approx(1.0)


def test_point_in_batch_changes_statistics(rng):
    batch = rng.standard_normal((3, 10))
    probe = rng.standard_normal(3) * 5.0
    spec = WhiteningSpec(kind="zca")
    outside = normalize_probe(batch, probe, spec)
    inside = normalize_probe(batch, probe, spec, probe_in_batch=True)
    assert outside.shape == inside.shape == (3,)
    assert not np.allclose(outside, inside)


def test_snd_is_reproducible():
    sampler = GaussianSampler(4, seed=0)
    first = snd(sampler, WhiteningSpec(), batch=16, num_batches=5, num_points=3, seed=7)
    second = snd(sampler, WhiteningSpec(), batch=16, num_batches=5, num_points=3, seed=7)
    assert first.snd == second.snd
    assert first.per_point_disturbance.shape == (3,)
    assert first.snd == pytest.approx(first.per_point_disturbance.mean())


def test_snd_orders_transforms():
    sampler = GaussianSampler(16, seed=0)
    values = {
        kind: snd(sampler, WhiteningSpec(kind=kind), batch=64, num_batches=20, num_points=5, seed=0).snd
        for kind in ("bn", "zca", "cd", "pca")
    }
    assert values["pca"] > values["cd"] > values["zca"] > values["bn"]


def test_snd_validation():
    sampler = GaussianSampler(4)
    with pytest.raises(ValidationError, match="at least 2 batches"):
        snd(sampler, WhiteningSpec(), batch=8, num_batches=1, num_points=2, seed=0)


def test_small_batch_warns(caplog):
    sampler = GaussianSampler(8)
    with caplog.at_level(logging.WARNING):
        snd(sampler, WhiteningSpec(kind="zca"), batch=6, num_batches=2, num_points=1, seed=0)
    assert "below the group size" in caplog.text


def test_sweep_keeps_input_order():
    reports = snd_sweep(
        "group", [4, 1, 2], WhiteningSpec(kind="cd"), SamplerFactory(), dim=4, batch=16,
        num_batches=3, num_points=2, seed=0,
    )
    assert [r.config.group_size for r in reports] == [4, 1, 2]
    frame = snd_frame(reports, [4, 1, 2])
    assert list(frame.columns) == ["axis_value", "transform", "group", "snd", "std_over_points"]
    assert list(frame["transform"]) == ["CD"] * 3


def test_dimension_and_iteration_axes():
    reports = snd_sweep(
        "dimension", [2, 4], WhiteningSpec(), SamplerFactory(), dim=8, batch=16, num_batches=2, num_points=1, seed=0
    )
    assert [r.config.dim for r in reports] == [2, 4]
    reports = snd_sweep(
        "iterations", [1, 7], WhiteningSpec(kind="itn"), SamplerFactory(), dim=4, batch=16,
        num_batches=2, num_points=1, seed=0,
    )
    assert [r.label for r in reports] == ["ItN1", "ItN7"]


def test_sweep_rejects_unknown_axis():
    with pytest.raises(ValidationError, match="unknown sweep axis"):
        snd_sweep("width", [1], WhiteningSpec(), SamplerFactory(), 4, 8, 2, 1, 0)
    with pytest.raises(ValidationError, match="at least one value"):
        snd_sweep("batch", [], WhiteningSpec(), SamplerFactory(), 4, 8, 2, 1, 0)


def test_scatter_clouds():
    sampler = GaussianSampler(16, seed=0)
    single = scatter_probe(sampler, WhiteningSpec(kind="bn"), batch=64, trials=1, probe_dims=(5, 15), seed=0)
    assert single.normalized.shape == (1, 2)
    assert single.population.shape == (1000, 2)
    frame = single.frame()
    assert set(frame["kind"]) == {"population", "normalized"}

    bn = scatter_probe(sampler, WhiteningSpec(kind="bn"), batch=64, trials=50, probe_dims=(5, 15), seed=0)
    pca = scatter_probe(sampler, WhiteningSpec(kind="pca"), batch=64, trials=50, probe_dims=(5, 15), seed=0)
    assert np.all(bn.normalized_std < pca.normalized_std)


def test_scatter_rejects_bad_dims():
    with pytest.raises(ValidationError, match="out of range"):
        scatter_probe(GaussianSampler(4), WhiteningSpec(), batch=8, trials=2, probe_dims=(0, 4), seed=0)


def test_sequence_diversity_values():
    report = sequence_diversity([np.array([[1.0, 0.0]]), np.array([[3.0, 0.0]])], bins=4)
    assert report.std[0, 0] == pytest.approx(1.0)
    assert report.normalized_std[0, 0] == pytest.approx(1.0 / np.sqrt(10.0))
    assert report.skipped == 1
    assert report.normalized_std[0, 1] == 0.0
    assert report.std_histogram[0].sum() == 2


def test_constant_sequence_has_no_diversity():
    report = sequence_diversity([np.eye(2)] * 5)
    assert np.array_equal(report.std, np.zeros((2, 2)))
    assert report.mean_normalized_std == pytest.approx(0.0, abs=1e-15)


def test_sequence_diversity_validation():
    with pytest.raises(ValidationError, match="at least 2"):
        sequence_diversity([np.eye(2)])
    with pytest.raises(ValidationError, match="differing shapes"):
        sequence_diversity([np.eye(2), np.eye(3)])


def test_diversity_frame_rows():
    report = sequence_diversity([np.eye(2), 2.0 * np.eye(2)], bins=5)
    frame = diversity_frame({"sigma": report, "whitening": report})
    assert len(frame) == 2 * 2 * 5
    assert list(frame.columns) == ["statistic", "measure", "bin_left", "bin_right", "count"]


class _ScaledSampler:
    def __init__(self, sampler, alpha):
        self.dim = sampler.dim
        self.sampler = sampler
        self.alpha = alpha

    def draw(self, rng, n):
        return self.alpha * self.sampler.draw(rng, n)


def test_scalar_inputs_make_every_transform_agree():
    sampler = GaussianSampler(1, seed=0)
    values = [
        snd(sampler, WhiteningSpec(kind=kind), batch=16, num_batches=8, num_points=4, seed=3).snd
        for kind in ("bn", "zca", "cd", "pca")
    ]
    assert max(values) - min(values) <= 1e-12


@pytest.mark.parametrize("kind", ["bn", "zca", "cd", "pca"])
@pytest.mark.parametrize("alpha", [0.1, 10.0])
def test_snd_ignores_input_scale(kind, alpha):
    sampler = GaussianSampler(4, seed=0)
    spec = WhiteningSpec(kind=kind, epsilon=0.0)
    plain = snd(sampler, spec, batch=16, num_batches=5, num_points=3, seed=1)
    scaled = snd(_ScaledSampler(sampler, alpha), spec, batch=16, num_batches=5, num_points=3, seed=1)
    assert np.allclose(scaled.per_point_disturbance, plain.per_point_disturbance, atol=1e-8)


def test_disturbance_ignores_batch_order(rng):
    outputs = rng.standard_normal((12, 5))
    shuffled = outputs[rng.permutation(12)]
    assert point_disturbance(shuffled) == pytest.approx(point_disturbance(outputs), abs=1e-12)


def test_sign_flip_sequence_diversity():
    report = sequence_diversity([np.array([[1.0]]), np.array([[-1.0]])])
    assert report.std[0, 0] == pytest.approx(1.0)
    assert report.normalized_std[0, 0] == pytest.approx(1.0 / np.sqrt(2.0))
    assert report.skipped == 0


def test_diversity_matches_two_pass_std(rng):
    sequence = [rng.standard_normal((3, 3)) for _ in range(7)]
    report = sequence_diversity(sequence)
    expected = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            values = [m[i, j] for m in sequence]
            mean = sum(values) / len(values)
            expected[i, j] = np.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
    assert np.max(np.abs(report.std - expected)) <= 1e-12
