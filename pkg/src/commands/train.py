# src/commands/train.py
import logging
from pathlib import Path

from bw_layer import finalize
from charts import training_chart
from checkpoint import save_layer_state, save_sequence
from commands import data_source, whitening_spec
from config import EXIT_OK
from harness import mlp_widths, train_mlp
from mlp import MlpConfig

logger = logging.getLogger(__name__)


def training_config(args, train, test):
    """MlpConfig from the training flags; the output width covers every label seen."""
    classes = max(train.num_classes, test.num_classes if test is not None else 0)
    norm = None if args.norm == "none" else whitening_spec(
        args,
        args.norm,
        estimation_object=args.estimation,
        recovery=args.recovery,
        momentum=args.momentum,
    )
    return MlpConfig(
        layer_widths=mlp_widths(train.dim, args.width, args.layers, classes),
        norm=norm,
        lr=args.lr,
        batch=args.batch,
        epochs=args.epochs,
        record_layer=args.record_layer,
        record_stride=args.record_stride,
        record_dims=args.record_dims,
    )


def run_training(args):
    train, test = data_source(args)()
    config = training_config(args, train, test)
    label = "none" if config.norm is None else config.norm.label
    logger.info("Training %s on %s (%d samples), widths %s", label, args.dataset, len(train), config.layer_widths)
    return train_mlp(config, train, args.seed, test_data=test), label


def save_sequences(sequences, out_dir):
    directory = Path(out_dir) / "sequences"
    directory.mkdir(parents=True, exist_ok=True)
    save_sequence(directory / "sigma.bws", "sigma", sequences.sigmas)
    save_sequence(directory / "w.bws", "whitening", sequences.ws)
    return directory


def run_train_command(args):
    result, label = run_training(args)
    frame = result.log.frame()
    frame.to_csv(Path(args.out) / "train.csv", index=False)
    training_chart(frame, Path(args.out) / "train.svg", f"{label}, lr={args.lr}, batch={args.batch}")
    if result.log.diverged:
        logger.warning("Run diverged at epoch %d; curves are truncated there", result.log.diverged_at)
        return EXIT_OK

    checkpoints = Path(args.out) / "checkpoints"
    for index, state in enumerate(result.model.norms):
        if state is None or state.steps == 0:
            continue
        checkpoints.mkdir(exist_ok=True)
        finalize(state)
        save_layer_state(checkpoints / f"bw{index}.bwl", state)
    if result.sequences.sigmas:
        save_sequences(result.sequences, args.out)
    return EXIT_OK
