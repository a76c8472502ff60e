import numpy as np
import pytest

from data_loader import GaussianSource, synth_gaussian
from errors import DegenerateEigenvaluesError, ValidationError
from gradcheck import check_model_case
from harness import estimation_compare, evaluate, train_mlp
from mlp import Mlp, MlpConfig, softmax_cross_entropy
from transforms import EstimationObject, TransformKind, WhiteningSpec

WIDTHS = (8, 6, 6, 4)


@pytest.fixture(scope="module")
def dataset():
    return synth_gaussian(8, 64, seed=0, num_classes=4)


def _config(**changes):
    fields = dict(layer_widths=WIDTHS, norm=WhiteningSpec(kind="zca"), lr=0.1, batch=16, epochs=2)
    fields.update(changes)
    return MlpConfig(**fields)


def test_softmax_cross_entropy_uniform():
    loss, dlogits, probs = softmax_cross_entropy(np.zeros((4, 3)), np.array([0, 1, 2]))
    assert loss == pytest.approx(np.log(4.0))
    assert np.allclose(probs, 0.25)
    assert np.allclose(dlogits.sum(axis=0), 0.0)


def test_zero_learning_rate_leaves_parameters_unchanged(dataset):
    config = _config(lr=0.0, epochs=1)
    initial = Mlp.initialize(config, seed=5).parameters()
    trained = train_mlp(config, dataset, seed=5).model.parameters()
    assert initial.keys() == trained.keys()
    assert all(np.array_equal(initial[name], trained[name]) for name in initial)


def test_same_seed_replays_exactly(dataset):
    first = train_mlp(_config(), dataset, seed=1, test_data=dataset)
    second = train_mlp(_config(), dataset, seed=1, test_data=dataset)
    assert first.log == second.log
    assert first.log.frame().equals(second.log.frame())
    assert [r.epoch for r in first.log.records] == [1, 2]
    assert all(0.0 <= r.train_error <= 1.0 for r in first.log.records)


def test_unnormalized_baseline_trains(dataset):
    result = train_mlp(_config(norm=None), dataset, seed=0)
    assert len(result.log.records) == 2
    assert result.sequences.sigmas == []


def test_evaluation_is_batch_size_invariant(dataset):
    result = train_mlp(_config(norm=WhiteningSpec(kind="cd", group_size=3)), dataset, seed=2)
    result.model.finalize()
    one = evaluate(result.model, dataset, eval_batch=1)
    many = evaluate(result.model, dataset, eval_batch=256)
    assert one[2] == many[2]
    assert one[1] == pytest.approx(many[1])


def test_statistic_sequences_respect_stride_and_crop(dataset):
    config = _config(record_stride=2, record_dims=3, record_layer=1)
    result = train_mlp(config, dataset, seed=0)
    # 64 samples in batches of 16 over 2 epochs: 8 steps, every other one kept
    assert len(result.sequences.sigmas) == len(result.sequences.ws) == 4
    assert result.sequences.ws[0].shape == (3, 3)


def test_statistic_sequences_keep_only_the_first_group(dataset):
    config = _config(norm=WhiteningSpec(kind="zca", group_size=3), epochs=1)
    result = train_mlp(config, dataset, seed=0)
    assert result.sequences.sigmas[0].shape == (3, 3)
    assert result.sequences.ws[0].shape == (3, 3)


def test_numeric_failure_marks_run_diverged(dataset, monkeypatch):
    calls = {"n": 0}
    original = Mlp.backward

    def failing_backward(self, result, dlogits):
        calls["n"] += 1
        if calls["n"] == 6:
            raise DegenerateEigenvaluesError(pair=(0, 1), gap=0.0, floor=1e-7)
        return original(self, result, dlogits)

    monkeypatch.setattr(Mlp, "backward", failing_backward)
    log = train_mlp(_config(epochs=3), dataset, seed=0).log
    assert log.diverged
    assert log.diverged_at == 2
    frame = log.frame()
    assert list(frame["diverged"]) == [False, True]
    assert log.final_train_error == 1.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@pytest.mark.parametrize("norm", [None, WhiteningSpec(kind="bn"), WhiteningSpec(kind="zca")])
@pytest.mark.parametrize("lr", [1e150, 1e300])
def test_exploding_learning_rate_marks_run_diverged(dataset, norm, lr):
    log = train_mlp(_config(norm=norm, lr=lr, epochs=3), dataset, seed=0, test_data=dataset).log
    assert log.diverged
    assert log.frame()["diverged"].iloc[-1]
    assert log.final_train_error == 1.0


def test_dataset_width_mismatch(dataset):
    with pytest.raises(ValidationError, match="does not match input width"):
        train_mlp(_config(layer_widths=(5, 4)), dataset, seed=0)
    with pytest.raises(ValidationError, match="classes"):
        train_mlp(_config(layer_widths=(8, 2)), dataset, seed=0)


def test_config_validation():
    with pytest.raises(ValidationError):
        MlpConfig(layer_widths=(4,))
    with pytest.raises(ValidationError):
        MlpConfig(layer_widths=(4, 3, 2), norm=WhiteningSpec(), record_layer=1)
    assert MlpConfig().layer_widths == (784, 256, 256, 256, 256, 10)


@pytest.mark.parametrize("kind", ["pca", "zca"])
def test_rank_deficient_eigen_groups_rejected(kind):
    with pytest.raises(ValidationError, match="rank deficient"):
        MlpConfig(layer_widths=(8, 16, 4), norm=WhiteningSpec(kind=kind))
    # Smaller groups, clamped gaps and Cholesky whitening stay trainable
    MlpConfig(layer_widths=(8, 16, 4), norm=WhiteningSpec(kind=kind, group_size=8))
    MlpConfig(layer_widths=(8, 16, 4), norm=WhiteningSpec(kind=kind, clamp_eigengap=True))
    MlpConfig(layer_widths=(8, 16, 4), norm=WhiteningSpec(kind="cd"))
    assert MlpConfig().digest() == MlpConfig().digest()


@pytest.mark.parametrize("kind", ["bn", "zca", "cd", "itn"])
@pytest.mark.parametrize("group", [3, None])
def test_whole_model_gradient(kind, group, rng):
    assert check_model_case(WhiteningSpec(kind=kind, group_size=group), rng) < 1e-4


def test_identical_estimation_objects_give_zero_difference():
    frame, summary = estimation_compare(
        GaussianSource(8, 64, 32, seed=0),
        widths=[6],
        batches=[16],
        kinds=[TransformKind.ZCA],
        lrs=[0.1],
        seeds=[0, 1],
        epochs=1,
        hidden_layers=1,
        objects=(EstimationObject.COVARIANCE, EstimationObject.COVARIANCE),
    )
    assert list(frame["difference"]) == [0.0, 0.0]
    assert summary.loc[0, "replicates"] == 2
    assert summary.loc[0, "mean_difference"] == 0.0


def test_estimation_grid_shape():
    frame, summary = estimation_compare(
        GaussianSource(8, 64, 32, seed=0),
        widths=[4, 6],
        batches=[16],
        kinds=[TransformKind.ZCA, TransformKind.CD],
        lrs=[0.1],
        seeds=[0],
        epochs=1,
        hidden_layers=1,
    )
    assert len(frame) == 4
    assert len(summary) == 4
    assert frame["acc_covariance"].between(0.0, 1.0).all()


def test_empty_estimation_grid():
    with pytest.raises(ValidationError, match="at least one"):
        estimation_compare(GaussianSource(8, 16, 8), [], [16], [TransformKind.ZCA], [0.1], [0], 1)
