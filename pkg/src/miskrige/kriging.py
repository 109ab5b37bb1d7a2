"""Gram assembly, the (nugget-regularized) kriging solve, and prediction.

Factorization failure at zero nugget raises instead of silently
regularizing: the invertibility conditions of the kernel families (rank
2N+1 for the trigonometric family, separation above the support width for
wavelets, separation above the mesh size for finite elements) are part of
the tested surface, and masking a violation with an automatic nugget would
hide exactly the failures the studies are meant to exhibit.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import LinAlgError, cho_factor, cho_solve, ldl

from .kernels.wavelet import WaveletKernel


class FactorizationFailed(Exception):
    """K + lambda*I is numerically non-positive-definite.

    Signals rank deficiency or a violated invertibility condition.  Carries a
    heuristic ``suggested_nugget`` (ten times the magnitude of the most
    negative pivot) that would make the factorization succeed.
    """

    def __init__(self, message, suggested_nugget=None):
        super().__init__(message)
        self.suggested_nugget = suggested_nugget


class NumericalBreakdown(Exception):
    """A solve or variance evaluation fell below the trusted accuracy."""


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric matrix of pairwise kernel values with a storage tag."""

    values: np.ndarray
    storage: str = "dense"
    nnz_fraction: float = None

    @property
    def n(self):
        return self.values.shape[0]


def assemble_gram(kernel, design, storage="auto"):
    """Kernel matrix on the design points, exactly symmetric by construction.

    ``storage='auto'`` selects banded/sparse bookkeeping for wavelet kernels
    whenever the finest level is diagonal across distinct points, i.e. when
    2^-N (2p-1) < 2q.  The banded path is an optimization only; its values
    match the dense path entrywise.
    """
    X = design.points
    if storage not in ("auto", "dense", "banded"):
        raise ValueError("storage must be 'auto', 'dense', or 'banded'")
    if storage == "banded" and not isinstance(kernel, WaveletKernel):
        raise ValueError("banded storage is only available for wavelet kernels")
    banded_ok = isinstance(kernel, WaveletKernel) and (
        2.0 ** (-kernel.spec.N) * kernel.support_width < 2.0 * design.q
    )
    use_banded = banded_ok if storage == "auto" else storage == "banded"
    if use_banded:
        K = kernel.matrix_sparse(X)
        dense = K.toarray()
        return GramMatrix(values=dense, storage="banded", nnz_fraction=_nnz_fraction(dense))
    dense = kernel.matrix(X)
    nnz = _nnz_fraction(dense) if isinstance(kernel, WaveletKernel) else None
    return GramMatrix(values=dense, storage="dense", nnz_fraction=nnz)


def _nnz_fraction(K):
    return float(np.count_nonzero(K)) / K.size


def gram_from_scalar_eval(kernel, X):
    """Pair-driven dense assembly: upper triangle by scalar evaluation, mirrored.

    Independent of the vectorized assembly; used as its cross-check.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    K = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            K[i, j] = kernel.eval(X[i], X[j])
    return np.triu(K) + np.triu(K, 1).T


@dataclass
class KrigingModel:
    """Fitted interpolant state; immutable once returned by ``fit``.

    ``alpha`` solves (K + lambda I) alpha = Y to relative residual 1e-8
    (one step of iterative refinement is applied).  ``sigma_min_estimate``
    is the cheap smallest-pivot diagnostic (an upper bound on the smallest
    eigenvalue of K + lambda I); use ``min_eigenvalue`` for the real thing.
    Prediction is thread-safe.
    """

    kernel: object
    design: object
    nugget: float
    y: np.ndarray
    alpha: np.ndarray
    gram: GramMatrix
    rel_residual: float
    sigma_min_estimate: float = None
    _cho: tuple = None

    def regularized(self):
        A = self.gram.values.copy()
        A[np.diag_indices_from(A)] += self.nugget
        return A


def _suggest_nugget(A):
    """Heuristic repair nugget: ten times the most negative LDL pivot."""
    try:
        _, D, _ = ldl(A, lower=True)
        pivots = np.diag(D)
        worst = float(np.min(pivots))
    except Exception:
        worst = -float(np.max(np.abs(np.diag(A)))) * np.finfo(float).eps
    if worst < 0.0:
        return 10.0 * abs(worst)
    return 10.0 * np.finfo(float).eps * float(np.max(np.abs(np.diag(A))))


def fit(kernel, design, y, nugget=0.0):
    """Solve the kriging system for coefficient vector alpha.

    Raises FactorizationFailed when K + lambda I is numerically
    non-positive-definite (rank deficiency; no silent nugget injection) and
    NumericalBreakdown when the refined solve cannot reach relative residual
    1e-8.
    """
    if nugget < 0.0:
        raise ValueError("nugget must be nonnegative")
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n,):
        raise ValueError(f"observations must be a length-{design.n} vector")
    gram = assemble_gram(kernel, design)
    A = gram.values.copy()
    idx = np.diag_indices_from(A)
    A[idx] = A[idx] + nugget
    try:
        cho = cho_factor(A, lower=True, check_finite=False)
    except (LinAlgError, np.linalg.LinAlgError):
        raise FactorizationFailed(
            f"kernel matrix plus nugget {nugget:g} is not positive definite "
            "(rank deficiency or violated invertibility condition)",
            suggested_nugget=_suggest_nugget(A),
        )
    # a vanishing Cholesky pivot means numerical rank deficiency even if the
    # factorization nominally succeeded
    pivots2 = np.diag(cho[0]) ** 2
    tol = A.shape[0] * np.finfo(float).eps * float(np.max(A[idx]))
    if float(np.min(pivots2)) <= tol:
        raise FactorizationFailed(
            f"kernel matrix plus nugget {nugget:g} is numerically rank deficient "
            f"(pivot {float(np.min(pivots2)):.3e} at tolerance {tol:.3e})",
            suggested_nugget=_suggest_nugget(A),
        )
    alpha = cho_solve(cho, y, check_finite=False)
    alpha = alpha + cho_solve(cho, y - A @ alpha, check_finite=False)  # one refinement step
    ynorm = float(np.linalg.norm(y))
    rel = float(np.linalg.norm(y - A @ alpha)) / ynorm if ynorm > 0 else 0.0
    if rel > 1e-8:
        raise NumericalBreakdown(
            f"kriging solve residual {rel:.3e} exceeds 1e-8; system too ill-conditioned"
        )
    return KrigingModel(
        kernel=kernel,
        design=design,
        nugget=float(nugget),
        y=y,
        alpha=alpha,
        gram=gram,
        rel_residual=rel,
        sigma_min_estimate=float(np.min(pivots2)),
        _cho=cho,
    )


def _cross(model, X):
    return model.kernel.matrix(np.atleast_1d(np.asarray(X, dtype=float)), model.design.points)


def predict_mean(model, x):
    """Posterior mean k(x)^T alpha at a single point."""
    return float((_cross(model, [x] if np.ndim(x) == 0 else x) @ model.alpha)[0])


def predict_mean_many(model, X):
    k = _cross(model, X)
    k = np.asarray(k.todense()) if sparse.issparse(k) else k
    return k @ model.alpha


def predict_variance(model, x):
    return float(predict_variance_many(model, [x] if np.ndim(x) == 0 else x)[0])


def predict_variance_many(model, X):
    """Predictive variance Phi(x,x) - k(x)^T (K + lambda I)^{-1} k(x).

    Negative values above -1e-8 * Phi(x,x) are clamped to zero as roundoff;
    anything lower raises NumericalBreakdown.
    """
    X = np.atleast_1d(np.asarray(X, dtype=float))
    k = _cross(model, X)
    k = np.asarray(k.todense()) if sparse.issparse(k) else k
    W = cho_solve(model._cho, k.T, check_finite=False)
    var = model.kernel.diag(X) - np.einsum("ij,ji->i", k, W)
    floor = -1e-8 * np.maximum(model.kernel.diag(X), np.finfo(float).tiny)
    if np.any(var < floor):
        worst = float(np.min(var))
        raise NumericalBreakdown(f"predictive variance {worst:.3e} fell below the roundoff floor")
    return np.maximum(var, 0.0)


def residual_on_design(model):
    """Exact data residual Y - K alpha at the design points (zero when lambda = 0)."""
    return model.y - model.gram.values @ model.alpha


def interpolant_rkhs_norm(model):
    """Native-space norm of the fitted interpolant, sqrt(alpha^T K alpha)."""
    val = float(model.alpha @ (model.gram.values @ model.alpha))
    return float(np.sqrt(max(val, 0.0)))


def min_eigenvalue(gram, rtol=1e-6):
    """Smallest eigenvalue of a symmetric matrix.

    Dense eigendecomposition up to n = 2000; shift-inverted Lanczos above.
    """
    K = gram.values if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=float)
    if K.shape[0] != K.shape[1]:
        raise ValueError("need a square symmetric matrix")
    if K.shape[0] <= 2000:
        return float(np.linalg.eigvalsh(K)[0])
    from scipy.sparse.linalg import eigsh

    shift = -max(float(np.trace(K)) * 1e-12, np.finfo(float).tiny)
    vals = eigsh(
        sparse.csc_matrix(K), k=1, sigma=shift, which="LM", tol=rtol, return_eigenvectors=False
    )
    return float(vals[0])
