"""Barycenter-based averaging of similarity matrices.

Layers are combined into a single matrix by minimizing the weighted sum of
squared distances under one of three metrics:

* Frobenius: the weighted arithmetic mean (closed form).
* Riemannian (affine-invariant): the unique solution of
  ``sum_l w_l log(X^{1/2} S_l^{-1} X^{1/2}) = 0``, found by the fixed-point
  iteration ``X <- X^{1/2} exp(sum_l w_l log(X^{-1/2} S_l X^{-1/2})) X^{1/2}``.
* Wasserstein (Bures): the unique solution of
  ``X = sum_l w_l (X^{1/2} S_l X^{1/2})^{1/2}``, found by the fixed-point
  iteration ``X <- X^{-1/2} (sum_l w_l (X^{1/2} S_l X^{1/2})^{1/2})^2 X^{-1/2}``.

Layer weights come from the matrix of RV coefficients: either its leading
eigenvector (the natural companion of the arithmetic mean) or its normalized
off-diagonal row sums (the companion of the two metric means).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrum,
    DimensionError,
    InvalidInput,
    InvalidParameter,
    SingularMatrix,
)
from .matcore import SQRT_CLIP_REL, eig_floor, fro_norm, frobenius_inner, sym_eigen, sym_matrix
from .simbuild import Multiplex, SimilarityLayer
from .snf import FusionResult

__all__ = [
    "BarycenterConfig",
    "METRICS",
    "rv_matrix",
    "weights_frobenius",
    "weights_rowsum",
    "uniform_weights",
    "check_weights",
    "barycenter_frobenius",
    "barycenter_riemannian",
    "barycenter_wasserstein",
    "solve_barycenter",
]

METRICS = ("frobenius", "riemannian", "wasserstein")

#: Gap under which the two largest RV eigenvalues count as coincident.
SPECTRAL_GAP_TOL = 1e-10

WEIGHT_SUM_TOL = 1e-12


@dataclass
class BarycenterConfig:
    """Solver settings for one barycenter computation.

    ``jitter=None`` resolves to the metric default: 1e-8 for the Riemannian
    metric (whose machinery needs strictly positive definite layers) and 0
    for the others.  A positive jitter adds ``jitter * (trace/n) * I`` to any
    layer whose smallest eigenvalue sits below the positivity floor.
    """

    metric: str
    tol: float = 1e-10
    max_iter: int = 1000
    jitter: float | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise InvalidParameter(f"unknown metric {self.metric!r}")
        if not self.tol > 0:
            raise InvalidParameter("tol must be positive")
        if self.max_iter < 1:
            raise InvalidParameter("max_iter must be >= 1")
        if self.jitter is not None and self.jitter < 0:
            raise InvalidParameter("jitter must be nonnegative")

    @property
    def resolved_jitter(self) -> float:
        if self.jitter is not None:
            return self.jitter
        return 1e-8 if self.metric == "riemannian" else 0.0


def _coerce_layers(layers) -> tuple[tuple[str, ...], list[np.ndarray]]:
    """Accept a Multiplex, a sequence of layers, or raw symmetric arrays."""
    if isinstance(layers, Multiplex):
        return layers.labels, [np.asarray(s, dtype=float) for s in layers.matrices()]
    items = list(layers)
    if not items:
        raise InvalidInput("need at least one layer")
    if isinstance(items[0], SimilarityLayer):
        labels = items[0].labels
        for lay in items[1:]:
            if not isinstance(lay, SimilarityLayer) or lay.labels != labels:
                raise DimensionError("layers must share one node-label list")
        return labels, [lay.S for lay in items]
    mats = [sym_matrix(m) for m in items]
    n = mats[0].shape[0]
    for m in mats[1:]:
        if m.shape[0] != n:
            raise DimensionError("layers must share one dimension")
    return tuple(str(i) for i in range(n)), mats


def check_weights(w, m: int) -> np.ndarray:
    """Validate a weight vector: length m, nonnegative, summing to one."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != m:
        raise DimensionError(f"expected {m} weights, got {w.shape[0]}")
    if not np.isfinite(w).all():
        raise InvalidInput("weights contain non-finite values")
    if w.min() < -WEIGHT_SUM_TOL:
        raise InvalidInput(f"weights must be nonnegative; min {w.min():.3e}")
    if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidInput(f"weights must sum to 1; got {w.sum()!r}")
    return np.clip(w, 0.0, None)


def uniform_weights(m: int) -> np.ndarray:
    """The vector (1/m, ..., 1/m)."""
    if m < 1:
        raise InvalidParameter("need at least one layer")
    return np.full(m, 1.0 / m)


def rv_matrix(layers) -> np.ndarray:
    """Matrix of RV coefficients between all layer pairs.

    ``r_ij = <S_i, S_j>_F / (||S_i||_F ||S_j||_F)``; by Cauchy-Schwarz this
    never exceeds one, so roundoff above 1 is clipped.  The diagonal is set
    to exactly one.
    """
    _, mats = _coerce_layers(layers)
    m = len(mats)
    if m < 2:
        raise InvalidInput("RV matrix needs at least two layers")
    norms = np.array([fro_norm(s) for s in mats])
    if norms.min() == 0.0:
        raise InvalidInput("RV coefficient is undefined for an all-zero layer")
    r = np.ones((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            val = frobenius_inner(mats[i], mats[j]) / (norms[i] * norms[j])
            r[i, j] = r[j, i] = min(val, 1.0)
    return r


def _check_rv(R) -> np.ndarray:
    r = sym_matrix(R)
    if r.shape[0] < 2:
        raise InvalidInput("need at least two layers")
    return r


def weights_frobenius(R) -> np.ndarray:
    """Leading-eigenvector weights for the arithmetic (Frobenius) mean.

    The first eigenvector of the RV matrix is sign-fixed so its component
    sum is positive, then rescaled to sum to one.

    Raises
    ------
    DegenerateSpectrum
        When the leading eigenvalue is not simple, so no canonical leading
        eigenvector exists.
    """
    r = _check_rv(R)
    values, vectors = sym_eigen(r)
    if values.shape[0] > 1 and values[0] - values[1] < SPECTRAL_GAP_TOL:
        raise DegenerateSpectrum(
            f"leading RV eigenvalue is not simple (gap {values[0] - values[1]:.3e})"
        )
    q1 = vectors[:, 0]
    total = float(q1.sum())
    if total == 0.0:
        raise InvalidInput("leading eigenvector has zero component sum")
    if total < 0:
        q1 = -q1
        total = -total
    w = q1 / total
    if w.min() < -SPECTRAL_GAP_TOL:
        raise InvalidInput(
            f"leading eigenvector yields negative weights (min {w.min():.3e})"
        )
    w = np.clip(w, 0.0, None)
    return w / w.sum()


def weights_rowsum(R) -> np.ndarray:
    """Off-diagonal row-sum weights, the companion of the metric means.

    ``w = (R - I) 1 / (1' (R - I) 1)``: a layer highly correlated with the
    others is the most representative and receives the largest weight.
    """
    r = _check_rv(R)
    rowsums = r.sum(axis=1) - np.diag(r)
    total = float(rowsums.sum())
    if not total > 0:
        raise InvalidInput("all off-diagonal RV coefficients are zero")
    if rowsums.min() < 0:
        raise InvalidInput("off-diagonal RV coefficients must be nonnegative")
    return rowsums / total


def _prepare_pd(mats: list[np.ndarray], jitter: float, require_pd: bool) -> list[np.ndarray]:
    """Ensure layers meet the definiteness needs of a metric solver."""
    out = []
    for idx, m in enumerate(mats):
        floor = eig_floor(m)
        psd_tol = SQRT_CLIP_REL * max(1.0, float(np.trace(m)) / m.shape[0])
        lam_min = float(np.linalg.eigvalsh(m).min())
        if lam_min < -psd_tol and not require_pd:
            # Wasserstein tolerates semidefinite layers but not indefinite ones.
            raise InvalidInput(f"layer {idx} is not positive semidefinite")
        if lam_min < floor and jitter > 0:
            n = m.shape[0]
            m = m + jitter * (float(np.trace(m)) / n) * np.eye(n)
            lam_min = float(np.linalg.eigvalsh(m).min())
        if require_pd and lam_min < floor:
            raise SingularMatrix(
                f"layer {idx} is singular (min eigenvalue {lam_min:.3e}); "
                "pass a positive jitter to regularize"
            )
        out.append(m)
    return out


def _split_sqrt(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Square root and inverse square root of a PD matrix from one eigh."""
    values, vectors = sym_eigen(X)
    if values.min() < eig_floor(X):
        raise SingularMatrix(
            f"iterate lost positive definiteness (min eigenvalue {values.min():.3e})"
        )
    root = np.sqrt(values)
    xs = (vectors * root) @ vectors.T
    xis = (vectors / root) @ vectors.T
    return (xs + xs.T) / 2.0, (xis + xis.T) / 2.0


def _sym_fn(values: np.ndarray, vectors: np.ndarray, mapped: np.ndarray) -> np.ndarray:
    out = (vectors * mapped) @ vectors.T
    return (out + out.T) / 2.0


def _log_pd(M: np.ndarray) -> np.ndarray:
    values, vectors = sym_eigen(M)
    if values.min() < eig_floor(M):
        raise SingularMatrix(
            f"matrix log needs positive definiteness (min eigenvalue {values.min():.3e})"
        )
    return _sym_fn(values, vectors, np.log(values))


def _sqrt_psd(M: np.ndarray) -> np.ndarray:
    values, vectors = sym_eigen(M)
    return _sym_fn(values, vectors, np.sqrt(np.clip(values, 0.0, None)))


def _exp_sym(M: np.ndarray) -> np.ndarray:
    values, vectors = sym_eigen(M)
    return _sym_fn(values, vectors, np.exp(values))


def _weighted_sum(mats: list[np.ndarray], w: np.ndarray) -> np.ndarray:
    acc = w[0] * mats[0]
    for wl, m in zip(w[1:], mats[1:]):
        acc = acc + wl * m
    return (acc + acc.T) / 2.0


def _result(labels, matrix, method, converged, iterations, history, w) -> FusionResult:
    return FusionResult(
        labels=labels,
        matrix=matrix,
        method=method,
        converged=converged,
        iterations=iterations,
        residual=history[-1] if history else 0.0,
        residual_history=tuple(history),
        weights=w.copy(),
    )


def barycenter_frobenius(layers, w) -> FusionResult:
    """Weighted arithmetic mean of the layers (exact, no iteration)."""
    labels, mats = _coerce_layers(layers)
    w = check_weights(w, len(mats))
    return _result(labels, _weighted_sum(mats, w), "sma-frobenius", True, 0, [], w)


def barycenter_riemannian(layers, w, cfg: BarycenterConfig | None = None) -> FusionResult:
    """Affine-invariant (Karcher) mean of positive definite layers.

    Starts from the arithmetic mean and iterates the exponential-map update
    until the tangent-space residual ``||sum_l w_l log(X^{-1/2} S_l
    X^{-1/2})||_F`` drops to ``tol * m``.  Hitting ``max_iter`` returns a
    result flagged ``converged=False``.
    """
    cfg = cfg or BarycenterConfig("riemannian")
    if cfg.metric != "riemannian":
        raise InvalidParameter(f"config is for metric {cfg.metric!r}")
    labels, mats = _coerce_layers(layers)
    w = check_weights(w, len(mats))
    mats = _prepare_pd(mats, cfg.resolved_jitter, require_pd=True)

    x = _weighted_sum(mats, w)
    history: list[float] = []
    converged = False
    iterations = 0
    while True:
        xs, xis = _split_sqrt(x)
        tangent = np.zeros_like(x)
        for wl, s in zip(w, mats):
            tangent += wl * _log_pd(xis @ s @ xis)
        tangent = (tangent + tangent.T) / 2.0
        residual = fro_norm(tangent)
        history.append(residual)
        if residual <= cfg.tol * len(mats):
            converged = True
            break
        if iterations >= cfg.max_iter:
            break
        x = xs @ _exp_sym(tangent) @ xs
        x = (x + x.T) / 2.0
        iterations += 1
    return _result(labels, x, "sma-riemannian", converged, iterations, history, w)


def barycenter_wasserstein(layers, w, cfg: BarycenterConfig | None = None) -> FusionResult:
    """Bures-Wasserstein mean of positive semidefinite layers.

    Starts from the arithmetic mean and iterates the fixed-point map until
    ``||X - sum_l w_l (X^{1/2} S_l X^{1/2})^{1/2}||_F <= tol``.  Layers may
    be semidefinite as long as the iterate stays positive definite.
    """
    cfg = cfg or BarycenterConfig("wasserstein")
    if cfg.metric != "wasserstein":
        raise InvalidParameter(f"config is for metric {cfg.metric!r}")
    labels, mats = _coerce_layers(layers)
    w = check_weights(w, len(mats))
    mats = _prepare_pd(mats, cfg.resolved_jitter, require_pd=False)

    x = _weighted_sum(mats, w)
    history: list[float] = []
    converged = False
    iterations = 0
    while True:
        xs, xis = _split_sqrt(x)
        mean_root = np.zeros_like(x)
        for wl, s in zip(w, mats):
            mean_root += wl * _sqrt_psd(xs @ s @ xs)
        mean_root = (mean_root + mean_root.T) / 2.0
        residual = fro_norm(x - mean_root)
        history.append(residual)
        if residual <= cfg.tol:
            converged = True
            break
        if iterations >= cfg.max_iter:
            break
        x = xis @ (mean_root @ mean_root) @ xis
        x = (x + x.T) / 2.0
        iterations += 1
    return _result(labels, x, "sma-wasserstein", converged, iterations, history, w)


def solve_barycenter(layers, w, cfg: BarycenterConfig) -> FusionResult:
    """Dispatch to the solver matching ``cfg.metric``."""
    if cfg.metric == "frobenius":
        return barycenter_frobenius(layers, w)
    if cfg.metric == "riemannian":
        return barycenter_riemannian(layers, w, cfg)
    return barycenter_wasserstein(layers, w, cfg)
