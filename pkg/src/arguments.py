# src/arguments.py
"""
Command-line surface: one subparser per experiment, sharing the run-level
flags (output directory, seed, workers, logging, solver options).
"""
import argparse

from config import (
    DEFAULT_EPOCHS,
    DEFAULT_EPSILON,
    DEFAULT_HIDDEN_LAYERS,
    DEFAULT_HIDDEN_WIDTH,
    DEFAULT_ITN_ITERATIONS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MOMENTUM,
    DEFAULT_RECORD_DIMS,
    DEFAULT_SND_BATCHES,
    DEFAULT_SND_POINTS,
    DEFAULT_TRAIN_BATCH,
    EIG_SOLVERS,
    HISTOGRAM_BINS,
    MNIST_INPUT_DIM,
    VERSION,
    default_eig_solver,
    default_mnist_dir,
    default_seed,
)
from transforms import EstimationObject, Recovery, TransformKind

TRANSFORM_CHOICES = [kind.value for kind in TransformKind]
SWEEP_CHOICES = {"dim": "dimension", "batch": "batch", "group": "group", "iterations": "iterations"}


# --- Value parsers ---

def _split(text):
    return [part.strip() for part in text.split(",") if part.strip()]


def int_list(text):
    try:
        values = [int(part) for part in _split(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"values must be positive, got {text!r}")
    return values


def float_list(text):
    try:
        return [float(part) for part in _split(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def transform_list(text):
    values = [part.lower() for part in _split(text)]
    unknown = [v for v in values if v not in TRANSFORM_CHOICES]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown transform(s) {unknown}; choose from {TRANSFORM_CHOICES}")
    return [TransformKind(v) for v in values]


def axes_pair(text):
    values = int_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"--axes takes exactly two 1-based dimensions, got {text!r}")
    return tuple(values)


# --- Shared flag groups ---

def _run_flags():
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("run")
    group.add_argument("--out", default="results", help="output directory (created if missing)")
    group.add_argument("--seed", type=int, default=default_seed(), help="base seed (default: $BWLAB_SEED or 0)")
    group.add_argument("--jobs", type=int, default=1, help="worker processes for independent sweep cells")
    group.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    group.add_argument("--eig-solver", default=default_eig_solver(), choices=EIG_SOLVERS)
    group.add_argument("--clamp-eigengap", action="store_true", help="clamp near-degenerate eigenvalue gaps instead of failing")
    group.add_argument("--probe-in-batch", action="store_true", help="include the probe sample in the batch statistics")
    return parent


def _whitening_flags(parser, default_transform):
    parser.add_argument("--group", type=int, default=None, help="group size (default: full dimension)")
    parser.add_argument("--itn-t", type=int, default=DEFAULT_ITN_ITERATIONS, help="ItN iteration count")
    parser.add_argument("--eps", type=float, default=DEFAULT_EPSILON, help="ridge ε added to Σ")
    if default_transform is not None:
        parser.add_argument("--transform", type=transform_list, default=transform_list(default_transform))


def _dataset_flags(parser):
    parser.add_argument("--dataset", choices=["mnist", "gaussian"], default="mnist")
    parser.add_argument("--mnist-dir", default=default_mnist_dir(), help="directory with the MNIST IDX files")
    parser.add_argument("--gaussian-dim", type=int, default=MNIST_INPUT_DIM, help="Gaussian input dimension")
    parser.add_argument("--train-size", type=int, default=10000, help="Gaussian training samples")
    parser.add_argument("--test-size", type=int, default=2000, help="Gaussian test samples")
    parser.add_argument("--layers", type=int, default=DEFAULT_HIDDEN_LAYERS, help="hidden layers")
    parser.add_argument("--epochs", type=int, default=DEFAULT_EPOCHS)


def _training_flags(parser):
    _dataset_flags(parser)
    _whitening_flags(parser, None)
    parser.add_argument("--norm", choices=["none"] + TRANSFORM_CHOICES, default="zca")
    parser.add_argument("--lr", type=float, default=DEFAULT_LEARNING_RATE)
    parser.add_argument("--batch", type=int, default=DEFAULT_TRAIN_BATCH)
    parser.add_argument("--width", type=int, default=DEFAULT_HIDDEN_WIDTH)
    parser.add_argument("--estimation", choices=[o.value for o in EstimationObject], default=EstimationObject.COVARIANCE.value)
    parser.add_argument("--recovery", choices=[r.value for r in Recovery], default=Recovery.SCALE_SHIFT.value)
    parser.add_argument("--momentum", type=float, default=DEFAULT_MOMENTUM)
    parser.add_argument("--record-layer", type=int, default=0, help="hidden layer whose Σ_t/W_t are recorded")
    parser.add_argument("--record-stride", type=int, default=1)
    parser.add_argument("--record-dims", type=int, default=DEFAULT_RECORD_DIMS)


def build_parser():
    """
    Builds the `bwlab` argument parser.

    Returns:
        argparse.ArgumentParser: Parser whose namespaces carry `command`.
    """
    run = _run_flags()
    parser = argparse.ArgumentParser(prog="bwlab", description="Batch-whitening stochasticity and training experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    snd = sub.add_parser("snd", parents=[run], help="stochastic normalization disturbance")
    _whitening_flags(snd, "zca")
    snd.add_argument("--dim", type=int, default=128)
    snd.add_argument("--batch", type=int, default=1024)
    snd.add_argument("--sweep", choices=list(SWEEP_CHOICES), default=None)
    snd.add_argument("--values", type=int_list, default=None, help="comma-separated axis values")
    snd.add_argument("--s", dest="num_batches", type=int, default=DEFAULT_SND_BATCHES, help="mini-batches per probe")
    snd.add_argument("--points", type=int, default=DEFAULT_SND_POINTS, help="probe samples")

    scatter = sub.add_parser("scatter", parents=[run], help="one probe normalized against many mini-batches")
    _whitening_flags(scatter, "bn,pca,zca,cd,itn")
    scatter.add_argument("--dim", type=int, default=16)
    scatter.add_argument("--batch", type=int, default=64)
    scatter.add_argument("--trials", type=int, default=100)
    scatter.add_argument("--axes", type=axes_pair, default=(6, 16), help="two 1-based dimensions to plot")

    spectrum = sub.add_parser("spectrum", parents=[run], help="eigenvalues of the group-whitened output covariance")
    _whitening_flags(spectrum, "zca")
    spectrum.add_argument("--dim", type=int, default=64)
    spectrum.add_argument("--batch", type=int, default=1024)
    spectrum.add_argument("--groups", type=int_list, default=[1, 4, 16, 64])

    train = sub.add_parser("train", parents=[run], help="train the MLP and log per-epoch errors")
    _training_flags(train)

    estimate = sub.add_parser("estimate", parents=[run], help="covariance vs whitening-matrix estimation grid")
    _dataset_flags(estimate)
    _whitening_flags(estimate, "zca,cd")
    estimate.add_argument("--widths", type=int_list, default=[64, 128, 256, 512])
    estimate.add_argument("--batches", type=int_list, default=[32, 64, 128, 256])
    estimate.add_argument("--lrs", type=float_list, default=[1.0, 0.5])
    estimate.add_argument("--replicates", type=int, default=3, help="seed replicates per cell (seed, seed+1, ...)")
    estimate.set_defaults(epochs=10)

    diversity = sub.add_parser("diversity", parents=[run], help="element-wise diversity of the Σ_t and W_t sequences")
    _training_flags(diversity)
    diversity.add_argument("--bins", type=int, default=HISTOGRAM_BINS)
    diversity.add_argument("--from", dest="from_dir", default=None, help="reuse sequences saved by a previous `train` run")

    gradcheck = sub.add_parser("gradcheck", parents=[run], help="finite-difference check of every backward pass")
    gradcheck.add_argument("--transform", type=transform_list, default=transform_list(",".join(TRANSFORM_CHOICES)))
    gradcheck.add_argument("--cases", type=int, default=50)
    gradcheck.add_argument("--levels", type=lambda t: _split(t), default=["transform", "layer", "model"])

    return parser


def flag_details(args):
    """Flat name → value mapping of a parsed namespace, for the run manifest."""
    details = {}
    for key, value in sorted(vars(args).items()):
        if isinstance(value, (list, tuple)):
            value = ",".join(getattr(v, "value", str(v)) for v in value)
        details[key] = getattr(value, "value", value)
    return details
