# src/bw_layer.py
"""
The batch-whitening layer: centering, grouped whitening, population
statistics under either estimation object, recovery, and the
training/inference split.

Inputs are d×m matrices (one sample per column).
"""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import block_diag

from errors import StateError, ValidationError
from gradients import backward_layer_input
from linalg import as_matrix
from transforms import (
    EstimationObject,
    Recovery,
    WhiteningSpec,
    center,
    group_slices,
    grouped_whitening,
    whitening_matrix,
)

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    TRAINING = "training"
    INFERENCE = "inference"


@dataclass
class LayerState:
    spec: WhiteningSpec
    dim: int
    running_mean: np.ndarray
    running_stat: list
    gamma: np.ndarray | None = None
    beta: np.ndarray | None = None
    color_w: np.ndarray | None = None
    color_b: np.ndarray | None = None
    mode: Mode = Mode.TRAINING
    finalized_w: list | None = None
    steps: int = 0

    @classmethod
    def create(cls, dim, spec):
        """New layer with identity recovery and identity population statistics."""
        if dim < 1:
            raise ValidationError(f"layer dimension must be >= 1, got {dim}")
        g = spec.resolve_group_size(dim)
        state = cls(
            spec=spec,
            dim=dim,
            running_mean=np.zeros(dim),
            running_stat=[np.eye(g) for _ in range(dim // g)],
        )
        if spec.recovery is Recovery.SCALE_SHIFT:
            state.gamma = np.ones(dim)
            state.beta = np.zeros(dim)
        else:
            state.color_w = np.eye(dim)
            state.color_b = np.zeros(dim)
        return state

    @property
    def group_size(self):
        return self.spec.resolve_group_size(self.dim)

    def parameters(self):
        """Learnable recovery parameters by name (arrays are shared, not copied)."""
        if self.spec.recovery is Recovery.SCALE_SHIFT:
            return {"gamma": self.gamma, "beta": self.beta}
        return {"color_w": self.color_w, "color_b": self.color_b}


@dataclass
class LayerCache:
    dim: int
    spec: WhiteningSpec
    x_centered: np.ndarray
    x_hat: np.ndarray
    whitening: object = field(repr=False)


@dataclass
class LayerGrads:
    dx: np.ndarray
    d_gamma: np.ndarray | None = None
    d_beta: np.ndarray | None = None
    d_color_w: np.ndarray | None = None
    d_color_b: np.ndarray | None = None

    def parameters(self):
        if self.d_color_w is None:
            return {"gamma": self.d_gamma, "beta": self.d_beta}
        return {"color_w": self.d_color_w, "color_b": self.d_color_b}


def _check_input(state, x):
    x = as_matrix(x, "x")
    if x.shape[0] != state.dim:
        raise ValidationError(f"layer of dimension {state.dim} got input with shape {x.shape}")
    return x


def _recover(state, x_hat):
    if state.spec.recovery is Recovery.SCALE_SHIFT:
        return state.gamma[:, None] * x_hat + state.beta[:, None]
    return state.color_w @ x_hat + state.color_b[:, None]


def _update_population(state, mu, whitening):
    lam = state.spec.momentum
    state.running_mean = (1.0 - lam) * state.running_mean + lam * mu
    if state.spec.estimation_object is EstimationObject.COVARIANCE:
        batch_stats = whitening.covariances
    else:
        batch_stats = whitening.ws
    updated = []
    for running, batch in zip(state.running_stat, batch_stats):
        stat = (1.0 - lam) * running + lam * batch
        if state.spec.estimation_object is EstimationObject.COVARIANCE:
            stat = 0.5 * (stat + stat.T)
        updated.append(stat)
    state.running_stat = updated
    state.steps += 1


# --- Forward ---

def forward_train(state, x, update_statistics=True):
    """
    Training-mode forward pass.

    Args:
        state (LayerState): Layer in training mode.
        x (array-like): d×m mini-batch, m >= 2.
        update_statistics (bool): Apply the running-average update (disabled by gradient checks).

    Returns:
        tuple: (y, LayerCache)
    """
    if state.mode is not Mode.TRAINING:
        raise StateError("forward_train called on a layer in inference mode; call set_training() first")
    x = _check_input(state, x)
    if x.shape[1] < 2:
        raise ValidationError(f"training needs at least 2 samples per batch, got {x.shape[1]}")
    x_centered, mu = center(x)
    whitening = grouped_whitening(x_centered, state.spec)
    if update_statistics:
        _update_population(state, mu, whitening)
    y = _recover(state, whitening.x_whitened)
    cache = LayerCache(
        dim=state.dim,
        spec=state.spec,
        x_centered=x_centered,
        x_hat=whitening.x_whitened,
        whitening=whitening,
    )
    return y, cache


def finalize(state):
    """
    Freezes the population whitening matrices and switches the layer to inference.

    Covariance-estimated layers whiten Σ̂ + εI once here; whitening-estimated
    layers use the accumulated Ŵ directly.
    """
    if state.steps == 0:
        raise StateError("finalize() needs at least one training step")
    spec = state.spec
    if spec.estimation_object is EstimationObject.COVARIANCE:
        g = state.group_size
        state.finalized_w = [
            whitening_matrix(stat + spec.epsilon * np.eye(g), spec.kind, spec.itn_iterations, spec.eig_solver)[0]
            for stat in state.running_stat
        ]
    else:
        state.finalized_w = [stat.copy() for stat in state.running_stat]
    state.mode = Mode.INFERENCE


def set_training(state):
    """Returns a finalized layer to training mode; the frozen matrices are dropped."""
    state.mode = Mode.TRAINING
    state.finalized_w = None


def population_whitening_matrix(state):
    """The d×d block-diagonal Ŵ used at inference."""
    if state.finalized_w is None:
        raise StateError("layer has not been finalized")
    return block_diag(*state.finalized_w)


def forward_infer(state, x):
    """
    Inference forward pass: a fixed affine map applied to every column independently.

    Raises:
        StateError: when finalize() has not been called.
    """
    if state.mode is not Mode.INFERENCE or state.finalized_w is None:
        raise StateError("forward_infer needs a finalized layer; call finalize() first")
    x = _check_input(state, x)
    x_centered = x - state.running_mean[:, None]
    x_hat = np.empty_like(x_centered)
    for rows, w in zip(group_slices(state.dim, state.group_size), state.finalized_w):
        x_hat[rows] = w @ x_centered[rows]
    return _recover(state, x_hat)


# --- Backward ---

def backward_train(state, cache, dy):
    """
    Gradients of the layer with respect to its input and recovery parameters.

    Args:
        state (LayerState): The layer that produced `cache`.
        cache (LayerCache): Output of the matching forward_train call.
        dy (array-like): d×m upstream gradient.

    Returns:
        LayerGrads
    """
    if not isinstance(cache, LayerCache) or cache.dim != state.dim or cache.spec != state.spec:
        raise StateError("cache does not belong to this layer")
    dy = as_matrix(dy, "dY")
    if dy.shape != cache.x_hat.shape:
        raise StateError(f"dY shape {dy.shape} does not match the cached batch {cache.x_hat.shape}")

    x_hat = cache.x_hat
    if state.spec.recovery is Recovery.SCALE_SHIFT:
        grads = LayerGrads(
            dx=None,
            d_gamma=np.sum(dy * x_hat, axis=1),
            d_beta=dy.sum(axis=1),
        )
        dx_hat = state.gamma[:, None] * dy
    else:
        grads = LayerGrads(
            dx=None,
            d_color_w=dy @ x_hat.T,
            d_color_b=dy.sum(axis=1),
        )
        dx_hat = state.color_w.T @ dy

    whitening = cache.whitening
    grads.dx = backward_layer_input(
        dx_hat,
        whitening.caches,
        whitening.ws,
        cache.x_centered,
        cache.x_centered.shape[1],
        gap_floor=state.spec.gap_floor,
        clamp_eigengap=state.spec.clamp_eigengap,
    )
    return grads
