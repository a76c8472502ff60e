# src/harness.py
"""
Training drivers: SGD on the manual-backprop MLP, and the estimation-object
comparison grid.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from errors import NumericError, ValidationError
from mlp import Mlp, MlpConfig, softmax_cross_entropy
from parallel import run_cells
from transforms import EstimationObject, TransformKind, WhiteningSpec

logger = logging.getLogger(__name__)

TRAIN_COLUMNS = ["epoch", "train_error", "train_loss", "test_acc", "diverged"]
ESTIMATE_COLUMNS = [
    "transform", "lr", "width", "batch", "seed",
    "acc_covariance", "acc_whitening", "difference", "diverged",
]


@dataclass
class EpochRecord:
    epoch: int
    train_error: float
    train_loss: float
    test_acc: float | None = None
    wall_seconds: float = field(default=0.0, compare=False)


@dataclass
class TrainLog:
    seed: int
    config_digest: str
    records: list = field(default_factory=list)
    diverged: bool = False
    diverged_at: int | None = None

    def frame(self):
        rows = [
            {
                "epoch": r.epoch,
                "train_error": r.train_error,
                "train_loss": r.train_loss,
                "test_acc": r.test_acc,
                "diverged": False,
            }
            for r in self.records
        ]
        if self.diverged:
            rows.append(
                {"epoch": self.diverged_at, "train_error": np.nan, "train_loss": np.nan, "test_acc": np.nan, "diverged": True}
            )
        return pd.DataFrame(rows, columns=TRAIN_COLUMNS)

    def to_csv(self, path):
        self.frame().to_csv(path, index=False)
        return path

    @property
    def final_train_error(self):
        """Last recorded training error; a diverged run counts as error 1."""
        if self.diverged or not self.records:
            return 1.0
        return self.records[-1].train_error


@dataclass
class StatisticSequences:
    sigmas: list = field(default_factory=list)
    ws: list = field(default_factory=list)


@dataclass
class TrainResult:
    log: TrainLog
    model: Mlp
    sequences: StatisticSequences


# --- Evaluation ---

def evaluate(model, data, eval_batch):
    """
    Error rate, mean loss and accuracy of an inference-mode model.

    Returns:
        tuple: (error_rate, loss, accuracy)
    """
    n = len(data)
    if n == 0:
        return 0.0, 0.0, 1.0
    correct = 0
    loss_sum = 0.0
    for start in range(0, n, eval_batch):
        stop = min(start + eval_batch, n)
        x = data.features[:, start:stop]
        y = data.labels[start:stop]
        logits = model.predict_logits(x)
        loss, _, _ = softmax_cross_entropy(logits, y)
        loss_sum += loss * (stop - start)
        correct += int(np.sum(np.argmax(logits, axis=0) == y))
    accuracy = correct / n
    return 1.0 - accuracy, loss_sum / n, accuracy


def _check_data(config, data):
    if data.dim != config.layer_widths[0]:
        raise ValidationError(f"dataset dimension {data.dim} does not match input width {config.layer_widths[0]}")
    if len(data) and data.num_classes > config.layer_widths[-1]:
        raise ValidationError(f"dataset has {data.num_classes} classes but the output width is {config.layer_widths[-1]}")


def _batches(n, batch, rng):
    order = rng.permutation(n)
    for start in range(0, n, batch):
        index = order[start:start + batch]
        if index.size >= 2:
            yield index


def _record(config, result, sequences):
    # group 0 of the designated layer, leading record_dims block
    whitening = result.caches[config.record_layer].bw.whitening
    k = min(config.record_dims, whitening.ws[0].shape[0])
    sequences.sigmas.append(whitening.sigmas[0][:k, :k].copy())
    sequences.ws.append(whitening.ws[0][:k, :k].copy())


# --- Training ---

def train_mlp(config, data, seed, test_data=None, record=True):
    """
    Plain SGD training of a BW-equipped MLP.

    Numeric failures (degenerate eigenvalues, loss of positive definiteness,
    non-finite activations or loss) end the run and mark the log diverged.

    Args:
        config (MlpConfig): Model and optimization settings.
        data (Dataset): Training set with features in column layout.
        seed (int): Seed for initialization and shuffling.
        test_data (Dataset, optional): Evaluated at every epoch end.
        record (bool): Keep the per-step Σ_t / W_t of the designated layer.

    Returns:
        TrainResult
    """
    _check_data(config, data)
    if len(data) < 2:
        raise ValidationError(f"training needs at least 2 samples, got {len(data)}")
    if test_data is not None:
        _check_data(config, test_data)
    model = Mlp.initialize(config, seed)
    log = TrainLog(seed=seed, config_digest=config.digest())
    sequences = StatisticSequences()
    record = record and config.norm is not None and len(model.norms) > 0
    rng = np.random.default_rng([seed, 1])
    step = 0

    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        try:
            for index in _batches(len(data), config.batch, rng):
                x = data.features[:, index]
                y = data.labels[index]
                result = model.forward_train(x)
                loss, dlogits, _ = softmax_cross_entropy(result.logits, y)
                if not np.isfinite(loss):
                    raise NumericError(f"non-finite loss {loss} at step {step}", residual=loss)
                if record and step % config.record_stride == 0:
                    _record(config, result, sequences)
                grads = model.backward(result, dlogits)
                model.sgd_step(grads, config.lr)
                step += 1
            model.finalize()
            train_error, train_loss, _ = evaluate(model, data, config.eval_batch)
            test_acc = evaluate(model, test_data, config.eval_batch)[2] if test_data is not None else None
            model.set_training()
        except NumericError as e:
            logger.warning("Run diverged at epoch %d: %s", epoch, e)
            log.diverged = True
            log.diverged_at = epoch
            break
        if not np.isfinite(train_loss):
            logger.warning("Run diverged at epoch %d: non-finite evaluation loss", epoch)
            log.diverged = True
            log.diverged_at = epoch
            break
        log.records.append(
            EpochRecord(
                epoch=epoch,
                train_error=train_error,
                train_loss=train_loss,
                test_acc=test_acc,
                wall_seconds=time.perf_counter() - started,
            )
        )
        logger.info(
            "epoch %d  train_error %.4f  train_loss %.4f  test_acc %s",
            epoch, train_error, train_loss, "n/a" if test_acc is None else f"{test_acc:.4f}",
        )
    return TrainResult(log=log, model=model, sequences=sequences)


# --- Estimation-object comparison ---

def mlp_widths(input_dim, width, hidden_layers, classes):
    return (input_dim,) + (width,) * hidden_layers + (classes,)


def _estimate_cell(cell):
    (data_source, kind, lr, width, batch, seed, epochs, hidden_layers, base_spec, objects) = cell
    train, test = data_source()
    widths = mlp_widths(train.dim, width, hidden_layers, max(train.num_classes, test.num_classes))
    accuracies = []
    diverged = False
    for obj in objects:
        spec = base_spec.with_(kind=kind, estimation_object=obj)
        config = MlpConfig(layer_widths=widths, norm=spec, lr=lr, batch=batch, epochs=epochs)
        result = train_mlp(config, train, seed, test_data=test, record=False)
        if result.log.diverged or not result.log.records:
            diverged = True
            accuracies.append(np.nan)
        else:
            accuracies.append(result.log.records[-1].test_acc)
    return {
        "transform": TransformKind(kind).value,
        "lr": lr,
        "width": width,
        "batch": batch,
        "seed": seed,
        "acc_covariance": accuracies[0],
        "acc_whitening": accuracies[1],
        "difference": accuracies[0] - accuracies[1],
        "diverged": diverged,
    }


def estimation_compare(data_source, widths, batches, kinds, lrs, seeds, epochs, hidden_layers=4,
                       base_spec=None, objects=(EstimationObject.COVARIANCE, EstimationObject.WHITENING), jobs=1):
    """
    Test-accuracy difference AC(Σ̂) − AC(Ŵ) over a width × batch grid.

    Each cell trains two models that differ only in the estimation object and share seeds.

    Args:
        data_source (callable): Returns (train Dataset, test Dataset); must be picklable when jobs > 1.
        widths, batches, lrs, seeds (list): Grid axes and seed replicates.
        kinds (list[TransformKind]): Transforms to compare.
        epochs (int): Training epochs per arm.
        objects (tuple): The two estimation objects compared (first minus second).

    Returns:
        tuple: (per-replicate DataFrame, per-cell summary DataFrame)
    """
    if not (widths and batches and kinds and lrs and seeds):
        raise ValidationError("estimation grid needs at least one width, batch, transform, lr and seed")
    base_spec = base_spec or WhiteningSpec()
    cells = [
        (data_source, kind, lr, width, batch, seed, epochs, hidden_layers, base_spec, tuple(objects))
        for kind in kinds
        for lr in lrs
        for width in widths
        for batch in batches
        for seed in seeds
    ]
    rows = run_cells(_estimate_cell, cells, jobs)
    frame = pd.DataFrame(rows, columns=ESTIMATE_COLUMNS)
    return frame, summarize_estimation(frame)


def summarize_estimation(frame):
    grouped = frame.groupby(["transform", "lr", "width", "batch"], sort=False)
    summary = grouped["difference"].agg(["mean", "sem", "count"]).reset_index()
    summary["diverged"] = grouped["diverged"].any().to_numpy()
    return summary.rename(columns={"mean": "mean_difference", "sem": "stderr", "count": "replicates"})
