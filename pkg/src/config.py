# src/config.py
import os

VERSION = "0.4.0"

# --- Whitening defaults ---
DEFAULT_EPSILON = 1e-5
DEFAULT_ITN_ITERATIONS = 5 # "ItN5"
DEFAULT_MOMENTUM = 0.1
DEFAULT_GAP_FLOOR = 1e-7 # relative to the largest eigenvalue
SYMMETRY_TOLERANCE = 1e-8
JACOBI_TOLERANCE = 1e-12
JACOBI_MAX_SWEEPS = 100
TINY_PIVOT = 1e-300

EIG_SOLVERS = ("jacobi", "lapack")

# --- Stochasticity defaults ---
DEFAULT_SND_BATCHES = 200 # s
DEFAULT_SND_POINTS = 20 # N
HISTOGRAM_BINS = 50
SCATTER_POPULATION = 1000
SAMPLER_RIDGE = 0.5

# --- Harness defaults ---
MNIST_INPUT_DIM = 784
MNIST_CLASSES = 10
DEFAULT_HIDDEN_WIDTH = 256
DEFAULT_HIDDEN_LAYERS = 4
DEFAULT_TRAIN_BATCH = 1024
DEFAULT_LEARNING_RATE = 1.0
DEFAULT_EPOCHS = 50
DEFAULT_EVAL_BATCH = 4096
DEFAULT_RECORD_DIMS = 64

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}
MNIST_HINT = (
    "Download the four MNIST IDX files (train-images-idx3-ubyte, train-labels-idx1-ubyte, "
    "t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte, optionally .gz) and pass --mnist-dir."
)

# --- Exit codes ---
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_MISSING_DATA = 3


def default_seed():
    """Seed used when --seed is not given (BWLAB_SEED, else 0)."""
    raw = os.environ.get("BWLAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        return 0


def default_eig_solver():
    """Eigensolver the CLI uses unless --eig-solver is passed."""
    solver = os.environ.get("BWLAB_EIG_SOLVER", "lapack").lower()
    return solver if solver in EIG_SOLVERS else "lapack"


def default_mnist_dir():
    return os.environ.get("BWLAB_MNIST_DIR", "data/mnist")
