# src/gradients.py
"""
Analytic backward passes through the whitening transforms.

Each `backward_*` maps ∂L/∂W to ∂L/∂Σ for one group, where Σ's entries are
treated as independent variables (only the symmetric part of the result
matters). `backward_layer_input` assembles ∂L/∂X for the centered,
group-whitened layer input.
"""
import logging

import numpy as np

from config import DEFAULT_GAP_FLOOR
from errors import DegenerateEigenvaluesError, ValidationError
from linalg import as_matrix
from transforms import TransformKind

logger = logging.getLogger(__name__)


def eigengap_matrix(eigenvalues, gap_floor=DEFAULT_GAP_FLOOR, clamp=False):
    """
    K with K_ij = 1/(σ_i − σ_j) off the diagonal and 0 on it.

    Args:
        eigenvalues (np.ndarray): Descending eigenvalues.
        gap_floor (float): Minimum admissible gap, relative to the largest eigenvalue.
        clamp (bool): Clamp small gaps to the floor instead of raising.

    Raises:
        DegenerateEigenvaluesError: when a pair is closer than the floor and clamp is False.
    """
    sigma = np.asarray(eigenvalues, dtype=np.float64)
    n = sigma.size
    diff = sigma[:, None] - sigma[None, :]
    floor = gap_floor * max(abs(float(sigma.max())), np.finfo(np.float64).tiny)
    off_diag = ~np.eye(n, dtype=bool)
    small = off_diag & (np.abs(diff) <= floor)
    if np.any(small):
        if not clamp:
            i, j = np.argwhere(small)[0]
            raise DegenerateEigenvaluesError(pair=(int(i), int(j)), gap=float(abs(diff[i, j])), floor=floor)
        upper = np.triu(np.ones((n, n), dtype=bool), k=1)
        # Eigenvalues are descending, so σ_i − σ_j >= 0 above the diagonal
        diff = np.where(small & upper, floor, diff)
        diff = np.where(small & ~upper, -floor, diff)
    k = np.zeros((n, n))
    k[off_diag] = 1.0 / diff[off_diag]
    return k


def _assemble_eigen_gradient(d, k, d_d, d_lambda):
    inner = k.T * (d.T @ d_d) + np.diag(np.diag(d_lambda))
    return d @ inner @ d.T


def backward_pca(dw, cache, gap_floor=DEFAULT_GAP_FLOOR, clamp_eigengap=False):
    dw = as_matrix(dw, "dW")
    lam = cache.eigenvalues
    d = cache.eigenvectors
    k = eigengap_matrix(lam, gap_floor, clamp_eigengap)
    d_lambda = (dw @ d) * (-0.5 * lam ** -1.5)[None, :]
    d_d = dw.T * (lam ** -0.5)[None, :]
    return _assemble_eigen_gradient(d, k, d_d, d_lambda)


def backward_zca(dw, cache, gap_floor=DEFAULT_GAP_FLOOR, clamp_eigengap=False):
    dw = as_matrix(dw, "dW")
    lam = cache.eigenvalues
    d = cache.eigenvectors
    k = eigengap_matrix(lam, gap_floor, clamp_eigengap)
    d_lambda = (d.T @ dw @ d) * (-0.5 * lam ** -1.5)[None, :]
    d_d = (dw + dw.T) @ d * (lam ** -0.5)[None, :]
    return _assemble_eigen_gradient(d, k, d_d, d_lambda)


def cholesky_mask(n):
    """Lower-triangular ones with ½ on the diagonal."""
    return np.tril(np.ones((n, n))) - 0.5 * np.eye(n)


def backward_cd(dw, cache, **_):
    dw = as_matrix(dw, "dW")
    l = cache.cholesky_factor
    w = cache.w
    d_l = -w.T @ dw @ w.T
    masked = cholesky_mask(l.shape[0]) * (l.T @ d_l)
    return 0.5 * w.T @ (masked + masked.T) @ w


def backward_itn(dw, cache, **_):
    dw = as_matrix(dw, "dW")
    powers = cache.powers
    sigma_n = cache.sigma_n
    tr = cache.trace
    sigma = cache.sigma
    d_p = dw / np.sqrt(tr)
    d_sigma_n = np.zeros_like(sigma_n)
    for k in range(len(powers) - 1, 0, -1):
        p = powers[k - 1]
        p2 = p @ p
        d_sigma_n -= 0.5 * (p2 @ p).T @ d_p
        d_p = (
            1.5 * d_p
            - 0.5 * d_p @ (p2 @ sigma_n).T
            - 0.5 * p2.T @ d_p @ sigma_n.T
            - 0.5 * p.T @ d_p @ (p @ sigma_n).T
        )
    eye = np.eye(sigma.shape[0])
    return (
        d_sigma_n / tr
        - np.trace(d_sigma_n.T @ sigma) / tr ** 2 * eye
        - np.trace(dw.T @ powers[-1]) / (2.0 * tr ** 1.5) * eye
    )


def backward_bn(dw, cache, **_):
    dw = as_matrix(dw, "dW")
    return np.diag(-0.5 * cache.diag ** -1.5 * np.diag(dw))


BACKWARD_FUNCTIONS = {
    TransformKind.BN: backward_bn,
    TransformKind.PCA: backward_pca,
    TransformKind.ZCA: backward_zca,
    TransformKind.CD: backward_cd,
    TransformKind.ITN: backward_itn,
}


def backward_whitening(dw, cache, gap_floor=DEFAULT_GAP_FLOOR, clamp_eigengap=False):
    """Dispatches ∂L/∂W → ∂L/∂Σ on the cache's transform kind."""
    backward = BACKWARD_FUNCTIONS[cache.kind]
    return backward(dw, cache, gap_floor=gap_floor, clamp_eigengap=clamp_eigengap)


def backward_layer_input(dxhat, caches, ws, x_centered, m, gap_floor=DEFAULT_GAP_FLOOR, clamp_eigengap=False):
    """
    ∂L/∂X of the centered, group-whitened map X ↦ X̂.

    Args:
        dxhat (array-like): d×m gradient with respect to the whitened output.
        caches (list): Per-group ForwardCache from the forward pass.
        ws (list): Per-group whitening matrices.
        x_centered (array-like): d×m centered input of the forward pass.
        m (int): Batch size.

    Returns:
        np.ndarray: d×m gradient with respect to the raw (uncentered) input.
    """
    dxhat = as_matrix(dxhat, "dXhat")
    x_centered = as_matrix(x_centered, "x_centered")
    if dxhat.shape != x_centered.shape or dxhat.shape[1] != m:
        raise ValidationError(
            f"dXhat shape {dxhat.shape} does not match the forward input {x_centered.shape} (m={m})"
        )
    if len(caches) != len(ws) or not caches:
        raise ValidationError(f"got {len(caches)} caches for {len(ws)} whitening matrices")
    g = ws[0].shape[0]
    if g * len(ws) != dxhat.shape[0]:
        raise ValidationError(f"{len(ws)} groups of size {g} do not cover {dxhat.shape[0]} rows")

    dx = np.empty_like(dxhat)
    for index, (cache, w) in enumerate(zip(caches, ws)):
        rows = slice(index * g, (index + 1) * g)
        xg = x_centered[rows]
        dxg = dxhat[rows]
        dw = dxg @ xg.T
        d_sigma = backward_whitening(dw, cache, gap_floor=gap_floor, clamp_eigengap=clamp_eigengap)
        dx[rows] = w.T @ dxg + ((d_sigma + d_sigma.T) @ xg) / m
    # Jacobian of the centering step
    return dx - dx.mean(axis=1, keepdims=True)
