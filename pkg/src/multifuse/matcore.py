"""Dense symmetric-matrix algebra used by every solver.

All functions operate on plain ``numpy`` arrays.  Matrices are symmetrized
once, at construction time (``sym_matrix``); downstream code may then assume
exact symmetry.  Eigenvector signs follow a fixed convention so that every
derived quantity is deterministic.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionError, InvalidInput, InvalidParameter, SingularMatrix

__all__ = [
    "EigenPair",
    "sym_matrix",
    "sym_eigen",
    "mat_fn",
    "frobenius_inner",
    "fro_norm",
    "is_psd",
    "eig_floor",
    "MATRIX_FUNCTIONS",
]

#: Relative floor below which an eigenvalue is treated as zero in ``log`` and
#: ``invsqrt`` (scaled by max(1, trace/n)).
EIG_FLOOR_REL = 1e-12

#: How negative an eigenvalue may be (same scaling) before ``sqrt`` refuses to
#: clip it to zero.  Covers roundoff on matrices that are PSD by construction.
SQRT_CLIP_REL = 1e-8

MATRIX_FUNCTIONS = ("sqrt", "invsqrt", "log", "exp")


class EigenPair(NamedTuple):
    """Eigendecomposition with values sorted in nonincreasing order."""

    values: np.ndarray   # shape (n,)
    vectors: np.ndarray  # shape (n, n), orthonormal columns


def sym_matrix(entries) -> np.ndarray:
    """Validate a square real matrix and return its symmetric part.

    Symmetry is enforced by averaging ``(M + M.T) / 2``; doing this once at
    construction keeps all later operations drift-free.

    Raises
    ------
    InvalidInput
        If the array is not square, is empty, or contains non-finite values.
    """
    m = np.array(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise InvalidInput("matrix dimension must be >= 1")
    if not np.isfinite(m).all():
        raise InvalidInput("matrix contains non-finite entries")
    return (m + m.T) / 2.0


def sym_eigen(M) -> EigenPair:
    """Eigendecomposition of a symmetric matrix.

    Returns eigenvalues in nonincreasing order and unit eigenvectors whose
    first nonzero component is positive, which makes repeated calls (and all
    downstream results) deterministic.
    """
    m = sym_matrix(M)
    values, vectors = np.linalg.eigh(m)
    values = values[::-1].copy()
    vectors = np.ascontiguousarray(vectors[:, ::-1])
    for j in range(vectors.shape[1]):
        nonzero = np.flatnonzero(vectors[:, j])
        if nonzero.size and vectors[nonzero[0], j] < 0:
            vectors[:, j] = -vectors[:, j]
    return EigenPair(values, vectors)


def eig_floor(M) -> float:
    """Smallest eigenvalue magnitude treated as positive for ``M``.

    Scale-adaptive: ``1e-12 * max(1, trace(M)/n)``.
    """
    m = np.asarray(M, dtype=float)
    n = m.shape[0]
    return EIG_FLOOR_REL * max(1.0, float(np.trace(m)) / n)


def _recompose(values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    out = (vectors * values) @ vectors.T
    return (out + out.T) / 2.0


def mat_fn(M, f: str) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its spectrum.

    Parameters
    ----------
    M : array_like
        Symmetric matrix.
    f : {"sqrt", "invsqrt", "log", "exp"}
        Function applied to the eigenvalues; eigenvectors are reused.

    Raises
    ------
    SingularMatrix
        For ``log``/``invsqrt`` when an eigenvalue falls below the positivity
        floor, or for ``sqrt`` when an eigenvalue is too negative to be
        attributed to roundoff.
    """
    if f not in MATRIX_FUNCTIONS:
        raise InvalidParameter(f"unknown matrix function tag {f!r}")
    values, vectors = sym_eigen(M)
    n = values.shape[0]
    scale = max(1.0, float(values.sum()) / n)
    if f == "sqrt":
        if values.min() < -SQRT_CLIP_REL * scale:
            raise SingularMatrix(
                f"sqrt needs a PSD matrix; min eigenvalue {values.min():.3e}"
            )
        mapped = np.sqrt(np.clip(values, 0.0, None))
    elif f in ("invsqrt", "log"):
        floor = EIG_FLOOR_REL * scale
        if values.min() < floor:
            raise SingularMatrix(
                f"{f} needs eigenvalues >= {floor:.3e}; got {values.min():.3e}"
            )
        mapped = 1.0 / np.sqrt(values) if f == "invsqrt" else np.log(values)
    else:  # exp
        mapped = np.exp(values)
    return _recompose(mapped, vectors)


def frobenius_inner(X, Y) -> float:
    """Frobenius inner product ``tr(X.T @ Y)`` of two same-order matrices."""
    x = np.asarray(X, dtype=float)
    y = np.asarray(Y, dtype=float)
    if x.shape != y.shape or x.ndim != 2:
        raise DimensionError(f"incompatible shapes {x.shape} and {y.shape}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InvalidInput("non-finite entries")
    return float(np.sum(x * y))


def fro_norm(X) -> float:
    """Frobenius norm of a matrix."""
    return float(np.linalg.norm(np.asarray(X, dtype=float), "fro"))


def is_psd(M, tol: float = 0.0) -> bool:
    """True iff the smallest eigenvalue of the symmetric part is >= -tol."""
    if tol < 0:
        raise InvalidInput("tol must be nonnegative")
    m = sym_matrix(M)
    return bool(np.linalg.eigvalsh(m).min() >= -tol)
