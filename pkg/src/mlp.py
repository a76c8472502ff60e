# src/mlp.py
"""
Manual-backprop multilayer perceptron with optional batch-whitening layers.

Each hidden block is linear → BW (optional) → ReLU; the output block is
linear → softmax cross-entropy. Activations are d×m matrices.
"""
import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from bw_layer import LayerState, backward_train, finalize, forward_infer, forward_train, set_training
from config import (
    DEFAULT_EPOCHS,
    DEFAULT_EVAL_BATCH,
    DEFAULT_HIDDEN_LAYERS,
    DEFAULT_HIDDEN_WIDTH,
    DEFAULT_LEARNING_RATE,
    DEFAULT_RECORD_DIMS,
    DEFAULT_TRAIN_BATCH,
    MNIST_CLASSES,
    MNIST_INPUT_DIM,
)
from errors import ValidationError
from transforms import TransformKind, WhiteningSpec

logger = logging.getLogger(__name__)

DEFAULT_WIDTHS = (MNIST_INPUT_DIM,) + (DEFAULT_HIDDEN_WIDTH,) * DEFAULT_HIDDEN_LAYERS + (MNIST_CLASSES,)


@dataclass(frozen=True)
class MlpConfig:
    """
    Model and optimization settings of one training run.

    `record_layer`, `record_stride` and `record_dims` select the recorded
    statistic sequences: only group 0 of hidden layer `record_layer` is kept,
    every `record_stride` steps, cropped to its leading `record_dims` x
    `record_dims` block (64 x 64 by default).
    """

    layer_widths: tuple = DEFAULT_WIDTHS
    norm: WhiteningSpec | None = None
    lr: float = DEFAULT_LEARNING_RATE
    batch: int = DEFAULT_TRAIN_BATCH
    epochs: int = DEFAULT_EPOCHS
    record_layer: int = 0
    record_stride: int = 1
    record_dims: int = DEFAULT_RECORD_DIMS
    eval_batch: int = DEFAULT_EVAL_BATCH

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if len(self.layer_widths) < 2 or min(self.layer_widths) < 1:
            raise ValidationError(f"layer widths must be >= 1 with at least input and output, got {self.layer_widths}")
        if self.batch < 2:
            raise ValidationError(f"batch must be >= 2, got {self.batch}")
        if self.epochs < 0 or self.lr < 0:
            raise ValidationError(f"epochs and lr must be non-negative, got {self.epochs}, {self.lr}")
        if self.record_stride < 1 or self.record_dims < 1:
            raise ValidationError("record_stride and record_dims must be >= 1")
        hidden = len(self.layer_widths) - 2
        if self.norm is not None and hidden and not 0 <= self.record_layer < hidden:
            raise ValidationError(f"record_layer {self.record_layer} outside the {hidden} hidden layers")
        if self.norm is not None and hidden:
            self._check_first_layer_rank()

    def _check_first_layer_rank(self):
        # A group wider than input_dim + 1 has a repeated ε eigenvalue at every step
        if self.norm.kind not in (TransformKind.PCA, TransformKind.ZCA) or self.norm.clamp_eigengap:
            return
        input_dim, first = self.layer_widths[0], self.layer_widths[1]
        group = first if self.norm.group_size is None else min(self.norm.group_size, first)
        if group > input_dim + 1:
            raise ValidationError(
                f"{self.norm.kind.value} groups of {group} after a {input_dim}-dimensional input are rank "
                f"deficient; use a group size <= {input_dim + 1}, a wider input or eigengap clamping"
            )

    @property
    def hidden_widths(self):
        return self.layer_widths[1:-1]

    def digest(self):
        """Short stable hash identifying the configuration."""
        return hashlib.sha256(repr(self).encode("utf-8")).hexdigest()[:12]


@dataclass
class HiddenCache:
    x: np.ndarray
    z: np.ndarray # post-normalization pre-activation
    bw: object = None


@dataclass
class ForwardResult:
    logits: np.ndarray
    caches: list
    last_hidden: np.ndarray


@dataclass
class Mlp:
    config: MlpConfig
    weights: list
    biases: list
    norms: list = field(default_factory=list)

    @classmethod
    def initialize(cls, config, seed):
        """He fan-in initialization from a seeded stream; biases start at zero."""
        rng = np.random.default_rng([seed, 0])
        widths = config.layer_widths
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            weights.append(rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in))
            biases.append(np.zeros(fan_out))
        norms = [
            LayerState.create(width, config.norm) if config.norm is not None else None
            for width in config.hidden_widths
        ]
        return cls(config=config, weights=weights, biases=biases, norms=norms)

    # --- Parameters ---

    def parameters(self):
        """Flat name → array mapping of every learnable array (shared, not copied)."""
        params = {}
        for index, (w, b) in enumerate(zip(self.weights, self.biases)):
            params[f"linear{index}.weight"] = w
            params[f"linear{index}.bias"] = b
        for index, state in enumerate(self.norms):
            if state is not None:
                for name, values in state.parameters().items():
                    params[f"bw{index}.{name}"] = values
        return params

    def sgd_step(self, grads, lr):
        for name, values in self.parameters().items():
            values -= lr * grads[name]

    # --- Passes ---

    def forward_train(self, x, update_statistics=True):
        caches = []
        h = x
        for index, state in enumerate(self.norms):
            z = self.weights[index] @ h + self.biases[index][:, None]
            bw_cache = None
            if state is not None:
                z, bw_cache = forward_train(state, z, update_statistics=update_statistics)
            caches.append(HiddenCache(x=h, z=z, bw=bw_cache))
            h = np.maximum(z, 0.0)
        logits = self.weights[-1] @ h + self.biases[-1][:, None]
        return ForwardResult(logits=logits, caches=caches, last_hidden=h)

    def backward(self, result, dlogits):
        grads = {}
        last = len(self.weights) - 1
        grads[f"linear{last}.weight"] = dlogits @ result.last_hidden.T
        grads[f"linear{last}.bias"] = dlogits.sum(axis=1)
        dh = self.weights[-1].T @ dlogits
        for index in range(len(self.norms) - 1, -1, -1):
            cache = result.caches[index]
            dz = dh * (cache.z > 0)
            state = self.norms[index]
            if state is not None:
                layer_grads = backward_train(state, cache.bw, dz)
                for name, values in layer_grads.parameters().items():
                    grads[f"bw{index}.{name}"] = values
                dz = layer_grads.dx
            grads[f"linear{index}.weight"] = dz @ cache.x.T
            grads[f"linear{index}.bias"] = dz.sum(axis=1)
            dh = self.weights[index].T @ dz
        return grads

    def predict_logits(self, x):
        """Inference-mode logits; BW layers must be finalized."""
        h = x
        for index, state in enumerate(self.norms):
            z = self.weights[index] @ h + self.biases[index][:, None]
            if state is not None:
                z = forward_infer(state, z)
            h = np.maximum(z, 0.0)
        return self.weights[-1] @ h + self.biases[-1][:, None]

    def finalize(self):
        for state in self.norms:
            if state is not None:
                finalize(state)

    def set_training(self):
        for state in self.norms:
            if state is not None:
                set_training(state)


# --- Loss ---

def softmax_cross_entropy(logits, labels):
    """
    Mean softmax cross-entropy and its gradient with respect to the logits.

    Returns:
        tuple: (loss, dlogits, probabilities)
    """
    shifted = logits - logits.max(axis=0, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=0, keepdims=True)
    m = logits.shape[1]
    columns = np.arange(m)
    log_probs = shifted - np.log(exp.sum(axis=0, keepdims=True))
    loss = float(-log_probs[labels, columns].mean())
    dlogits = probs.copy()
    dlogits[labels, columns] -= 1.0
    return loss, dlogits / m, probs
