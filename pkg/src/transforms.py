# src/transforms.py
"""
Mini-batch whitening matrices for BN, PCA, ZCA, CD and ItN, and the grouping
wrapper that whitens contiguous blocks of dimensions independently.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from config import (
    DEFAULT_EPSILON,
    DEFAULT_GAP_FLOOR,
    DEFAULT_ITN_ITERATIONS,
    DEFAULT_MOMENTUM,
    EIG_SOLVERS,
)
from errors import NumericError, ValidationError
from linalg import as_matrix, as_square, cholesky, sym_eig, tri_lower_inverse

logger = logging.getLogger(__name__)


class TransformKind(str, Enum):
    BN = "bn"
    PCA = "pca"
    ZCA = "zca"
    CD = "cd"
    ITN = "itn"


class EstimationObject(str, Enum):
    COVARIANCE = "covariance"
    WHITENING = "whitening"


class Recovery(str, Enum):
    SCALE_SHIFT = "scale_shift"
    COLORING = "coloring"


@dataclass(frozen=True)
class WhiteningSpec:
    """
    Full configuration of one batch-whitening instance.

    `group_size=None` means a single group spanning every dimension.
    """

    kind: TransformKind = TransformKind.ZCA
    group_size: int | None = None
    epsilon: float = DEFAULT_EPSILON
    itn_iterations: int = DEFAULT_ITN_ITERATIONS
    estimation_object: EstimationObject = EstimationObject.COVARIANCE
    recovery: Recovery = Recovery.SCALE_SHIFT
    momentum: float = DEFAULT_MOMENTUM
    eig_solver: str = "jacobi"
    clamp_eigengap: bool = False
    gap_floor: float = DEFAULT_GAP_FLOOR

    def __post_init__(self):
        # Accept plain strings from the CLI and config files
        object.__setattr__(self, "kind", TransformKind(self.kind))
        object.__setattr__(self, "estimation_object", EstimationObject(self.estimation_object))
        object.__setattr__(self, "recovery", Recovery(self.recovery))
        if self.group_size is not None and self.group_size < 1:
            raise ValidationError(f"group_size must be >= 1, got {self.group_size}")
        if self.epsilon < 0:
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.itn_iterations < 1:
            raise ValidationError(f"itn_iterations must be >= 1, got {self.itn_iterations}")
        if not 0.0 < self.momentum <= 1.0:
            raise ValidationError(f"momentum must lie in (0, 1], got {self.momentum}")
        if self.eig_solver not in EIG_SOLVERS:
            raise ValidationError(f"eig_solver must be one of {EIG_SOLVERS}, got {self.eig_solver!r}")
        if self.gap_floor < 0:
            raise ValidationError(f"gap_floor must be >= 0, got {self.gap_floor}")

    def resolve_group_size(self, dim):
        """Returns the effective group size for a layer of dimension `dim`."""
        g = dim if self.group_size is None else self.group_size
        if g > dim or dim % g != 0:
            raise ValidationError(f"group size {g} does not divide the dimension {dim}")
        return g

    def with_(self, **changes):
        return replace(self, **changes)

    @property
    def label(self):
        name = self.kind.value.upper()
        if self.kind is TransformKind.ITN:
            name = f"ItN{self.itn_iterations}"
        return name if self.group_size is None else f"{name}-{self.group_size}"


@dataclass
class ForwardCache:
    """
    Saved intermediates of one group's whitening matrix, enough to run its backward pass.

    Only the fields relevant to `kind` are populated.
    """

    kind: TransformKind
    w: np.ndarray
    sigma: np.ndarray
    eigenvalues: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None
    cholesky_factor: np.ndarray | None = None
    sigma_n: np.ndarray | None = None
    powers: list = field(default_factory=list) # P_0 ... P_T
    trace: float | None = None
    diag: np.ndarray | None = None
    x_centered: np.ndarray | None = None


@dataclass
class GroupedWhitening:
    x_whitened: np.ndarray
    caches: list
    sigmas: list # ridge-regularized per-group covariance
    ws: list
    covariances: list # per-group (1/m) X Xᵀ without the ridge
    group_size: int


# --- Single-group whitening matrices ---

def _inverse_sqrt_eigenvalues(eigenvalues, kind):
    if eigenvalues[-1] <= 0:
        raise NumericError(
            f"{kind.value.upper()} whitening needs a positive-definite covariance "
            f"(smallest eigenvalue {eigenvalues[-1]:.3e})",
            residual=float(eigenvalues[-1]),
        )
    return 1.0 / np.sqrt(eigenvalues)


def whitening_matrix(sigma, kind, itn_iterations=DEFAULT_ITN_ITERATIONS, eig_solver="jacobi"):
    """
    Whitening matrix W of a ridge-regularized covariance Σ.

    Args:
        sigma (array-like): Symmetric positive-definite g×g matrix (Σ + εI already applied).
        kind (TransformKind): Which transform to use.
        itn_iterations (int): Newton iteration count T (ItN only).
        eig_solver (str): "jacobi" or "lapack" (PCA/ZCA only).

    Returns:
        tuple: (W, ForwardCache)
    """
    kind = TransformKind(kind)
    sigma = as_square(sigma, "sigma")
    tr = float(np.trace(sigma))
    if tr <= 0:
        raise ValidationError(f"covariance trace must be positive, got {tr:.3e}")

    if kind is TransformKind.BN:
        diag = np.diag(sigma).copy()
        if np.any(diag <= 0):
            raise NumericError("BN needs strictly positive variances", residual=float(diag.min()))
        w = np.diag(1.0 / np.sqrt(diag))
        return w, ForwardCache(kind=kind, w=w, sigma=sigma, diag=diag)

    if kind in (TransformKind.PCA, TransformKind.ZCA):
        eig = sym_eig(sigma, method=eig_solver)
        inv_sqrt = _inverse_sqrt_eigenvalues(eig.eigenvalues, kind)
        d = eig.eigenvectors
        if kind is TransformKind.PCA:
            w = inv_sqrt[:, None] * d.T
        else:
            w = (d * inv_sqrt) @ d.T
        cache = ForwardCache(kind=kind, w=w, sigma=sigma, eigenvalues=eig.eigenvalues, eigenvectors=d)
        return w, cache

    if kind is TransformKind.CD:
        l = cholesky(sigma)
        w = tri_lower_inverse(l)
        return w, ForwardCache(kind=kind, w=w, sigma=sigma, cholesky_factor=l)

    if itn_iterations < 1:
        raise ValidationError(f"itn_iterations must be >= 1, got {itn_iterations}")
    sigma_n = sigma / tr
    p = np.eye(sigma.shape[0])
    powers = [p]
    for _ in range(itn_iterations):
        p = 0.5 * (3.0 * p - np.linalg.matrix_power(p, 3) @ sigma_n)
        powers.append(p)
    w = p / np.sqrt(tr)
    return w, ForwardCache(kind=kind, w=w, sigma=sigma, sigma_n=sigma_n, powers=powers, trace=tr)


# --- Group-based whitening ---

def group_slices(dim, group_size):
    return [slice(start, start + group_size) for start in range(0, dim, group_size)]


def grouped_whitening(x_centered, spec):
    """
    Whitens contiguous groups of rows independently.

    Args:
        x_centered (array-like): d×m matrix with zero row means.
        spec (WhiteningSpec): Transform configuration.

    Returns:
        GroupedWhitening: Whitened output in the original row order plus per-group state.
    """
    x = as_matrix(x_centered, "x_centered")
    dim, m = x.shape
    g = spec.resolve_group_size(dim)
    x_hat = np.empty_like(x)
    caches, sigmas, ws, covariances = [], [], [], []
    for rows in group_slices(dim, g):
        xg = x[rows]
        covariance = (xg @ xg.T) / m
        sigma = covariance + spec.epsilon * np.eye(g)
        w, cache = whitening_matrix(sigma, spec.kind, spec.itn_iterations, spec.eig_solver)
        cache.x_centered = xg
        x_hat[rows] = w @ xg
        caches.append(cache)
        sigmas.append(sigma)
        ws.append(w)
        covariances.append(covariance)
    return GroupedWhitening(
        x_whitened=x_hat, caches=caches, sigmas=sigmas, ws=ws, covariances=covariances, group_size=g
    )


def center(x):
    """Returns (x - μ1ᵀ, μ) with μ the per-row mean."""
    x = as_matrix(x, "x")
    mu = x.mean(axis=1)
    return x - mu[:, None], mu


def output_spectrum(x, spec):
    """
    Descending eigenvalues of the covariance of the group-whitened output.

    Args:
        x (array-like): d×m raw batch (centered internally).
        spec (WhiteningSpec): Transform configuration.

    Returns:
        np.ndarray: d eigenvalues, largest first.
    """
    x_centered, _ = center(x)
    result = grouped_whitening(x_centered, spec)
    x_hat = result.x_whitened
    covariance = (x_hat @ x_hat.T) / x_hat.shape[1]
    return np.sort(np.linalg.eigvalsh(0.5 * (covariance + covariance.T)))[::-1]
