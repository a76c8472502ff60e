# src/linalg.py
"""
Dense small-matrix linear algebra used by every whitening transform.

Matrices are plain 2-D float64 numpy arrays. Every public function validates
its inputs and raises ValidationError naming the offending shape.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from config import JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE, SYMMETRY_TOLERANCE, TINY_PIVOT
from errors import (
    NonFiniteError,
    NotPositiveDefiniteError,
    NumericError,
    SingularMatrixError,
    ValidationError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending; column k of `eigenvectors` pairs with eigenvalue k."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


# --- Validation helpers ---

def as_matrix(a, name="matrix"):
    """
    Converts `a` into a finite float64 2-D array.

    Args:
        a (array-like): Input values.
        name (str): Name used in error messages.

    Returns:
        np.ndarray: A float64 array with ndim == 2.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} with shape {arr.shape} contains NaN or Inf")
    return arr


def as_square(a, name="matrix"):
    arr = as_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    return arr


def as_symmetric(a, name="matrix", tol=SYMMETRY_TOLERANCE):
    """Validates symmetry within `tol` (absolute) and returns (A + Aᵀ)/2."""
    arr = as_square(a, name)
    asym = np.max(np.abs(arr - arr.T))
    if asym > tol:
        raise ValidationError(f"{name} with shape {arr.shape} is not symmetric (max |A - Aᵀ| = {asym:.3e})")
    return 0.5 * (arr + arr.T)


# --- Elementary arithmetic ---

def matmul(a, b):
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ValidationError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def transpose(a):
    return as_matrix(a).T.copy()


def trace(a):
    return float(np.trace(as_square(a)))


def frobenius_norm(a):
    return float(np.linalg.norm(as_matrix(a), "fro"))


def diag_extract(a):
    """Returns the diagonal of a square matrix as a 1-D vector."""
    return np.diag(as_square(a)).copy()


def diag_embed(v):
    """Builds a square diagonal matrix from a vector (or from the diagonal of a square matrix)."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 2:
        arr = np.diag(as_square(arr))
    if arr.ndim != 1 or arr.size < 1:
        raise ValidationError(f"diag_embed expects a non-empty vector, got shape {arr.shape}")
    return np.diag(arr)


def off_diagonal_norm(a):
    return float(np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0)))


# --- Eigendecomposition ---

def _normalize_eigenpairs(eigenvalues, eigenvectors):
    """Sorts descending and flips each eigenvector so its largest-magnitude entry is non-negative."""
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order].copy()
    eigenvectors = eigenvectors[:, order].copy()
    lead = np.argmax(np.abs(eigenvectors), axis=0)
    signs = np.where(eigenvectors[lead, np.arange(eigenvectors.shape[1])] < 0, -1.0, 1.0)
    eigenvectors *= signs
    return EigenDecomposition(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def _jacobi(a, max_sweeps):
    d = a.shape[0]
    v = np.eye(d)
    scale = np.linalg.norm(a, "fro")
    threshold = JACOBI_TOLERANCE * scale
    off = off_diagonal_norm(a)
    for _ in range(max_sweeps):
        if off <= threshold:
            return np.diag(a).copy(), v
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
        off = off_diagonal_norm(a)
    if off <= threshold:
        return np.diag(a).copy(), v
    raise NumericError(
        f"Jacobi eigensolver did not converge after {max_sweeps} sweeps (off-diagonal norm {off:.3e})",
        residual=off,
    )


def sym_eig(sigma, method="jacobi", max_sweeps=JACOBI_MAX_SWEEPS):
    """
    Symmetric eigendecomposition Σ = D Λ Dᵀ.

    Args:
        sigma (array-like): Symmetric d×d matrix (symmetric within 1e-8).
        method (str): "jacobi" for cyclic Jacobi rotations, "lapack" for numpy.linalg.eigh.
            Both paths return the same ordering and sign convention.
        max_sweeps (int): Sweep budget of the Jacobi path.

    Returns:
        EigenDecomposition: Descending eigenvalues and sign-normalized eigenvectors.
    """
    a = as_symmetric(sigma, "sigma")
    if method == "jacobi":
        eigenvalues, eigenvectors = _jacobi(a.copy(), max_sweeps)
    elif method == "lapack":
        eigenvalues, eigenvectors = np.linalg.eigh(a)
    else:
        raise ValidationError(f"unknown eigensolver {method!r}; expected 'jacobi' or 'lapack'")
    return _normalize_eigenpairs(eigenvalues, eigenvectors)


# --- Cholesky ---

def cholesky(sigma):
    """
    Lower Cholesky factor L with L Lᵀ = Σ and strictly positive diagonal.

    Raises:
        NotPositiveDefiniteError: with the 0-based index of the failing pivot.
    """
    a = as_symmetric(sigma, "sigma")
    factor, info = lapack.dpotrf(a, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(pivot=info - 1, value=float(a[info - 1, info - 1]))
    if info < 0:
        raise ValidationError(f"dpotrf rejected argument {-info} for shape {a.shape}")
    diag = np.diag(factor)
    if np.any(diag <= 0):
        pivot = int(np.argmax(diag <= 0))
        raise NotPositiveDefiniteError(pivot=pivot, value=float(diag[pivot]))
    return np.tril(factor)


def tri_lower_inverse(l):
    """
    Inverse of a lower-triangular matrix; the result's upper triangle is exactly zero.

    Raises:
        SingularMatrixError: when a diagonal entry has magnitude <= 1e-300.
    """
    l = as_square(l, "l")
    diag = np.abs(np.diag(l))
    small = np.flatnonzero(diag <= TINY_PIVOT)
    if small.size:
        index = int(small[0])
        raise SingularMatrixError(index=index, value=float(l[index, index]))
    inverse, info = lapack.dtrtri(np.tril(l), lower=1)
    if info > 0:
        raise SingularMatrixError(index=info - 1, value=float(l[info - 1, info - 1]))
    return np.tril(inverse)
