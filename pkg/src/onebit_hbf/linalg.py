"""Complex dense linear-algebra kernel.

Thin, contract-checked wrappers over LAPACK (via numpy). Matrices are plain
``numpy.ndarray`` objects of dtype ``complex128``; :func:`as_complex_matrix`
enforces the shape/finiteness invariants at the boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinalgError",
    "ConvergenceError",
    "SingularMatrixError",
    "NotHermitianPDError",
    "SvdResult",
    "as_complex_matrix",
    "svd",
    "solve_regularized",
    "logdet2_hermitian_pd",
]


class LinalgError(ValueError):
    """Base class for kernel failures."""


class ConvergenceError(LinalgError):
    """The SVD iteration did not converge."""


class SingularMatrixError(LinalgError):
    """A linear system is singular to working precision."""


class NotHermitianPDError(LinalgError):
    """Input is not Hermitian positive definite."""


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite, nonempty 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return m


@dataclass(frozen=True)
class SvdResult:
    """``a = left @ diag(singular) @ right.conj().T`` with unitary factors.

    ``left`` is m x m and ``right`` is n x n unless the decomposition was
    requested in economy form, in which case both have min(m, n) columns.
    """

    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = self.singular.size
        return (self.left[:, :k] * self.singular) @ self.right[:, :k].conj().T


def _canonical_phase(vectors: np.ndarray) -> np.ndarray:
    """Unit-modulus factor per column that makes its leading entry real positive.

    The leading entry is the first one whose modulus exceeds a tiny fraction
    of the column's largest modulus, so round-off zeros are skipped.
    """
    mags = np.abs(vectors)
    thresh = 1e-12 * mags.max(axis=0, keepdims=True)
    lead = np.argmax(mags > thresh, axis=0)
    entries = vectors[lead, np.arange(vectors.shape[1])]
    mod = np.abs(entries)
    phase = np.ones_like(entries)
    nz = mod > 0
    phase[nz] = entries[nz].conj() / mod[nz]
    return phase


def svd(a, full_matrices: bool = True) -> SvdResult:
    """Singular value decomposition with a deterministic phase convention.

    Each left singular vector is rotated so that its first nonzero entry is
    real and positive; the matching right singular vector gets the same
    rotation, which keeps the product unchanged. Right vectors beyond
    min(m, n) (null space, full form only) are normalized the same way on
    their own.

    Raises:
        ConvergenceError: LAPACK's iterative driver failed to converge.
    """
    a = as_complex_matrix(a, "svd input")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc
    v = vh.conj().T
    k = s.size
    ph = _canonical_phase(u)
    u = u * ph
    v[:, :k] = v[:, :k] * ph[:k]
    if v.shape[1] > k:
        v[:, k:] = v[:, k:] * _canonical_phase(v[:, k:])
    return SvdResult(left=u, singular=s, right=v)


def solve_regularized(m, alpha: float, b) -> np.ndarray:
    """Solve ``(alpha*I + m) x = b``.

    Raises:
        SingularMatrixError: the regularized system is still numerically
            singular, or the solution misses the residual bound
            ``1e-8 * ||b||_F``.
    """
    m = as_complex_matrix(m, "m")
    b = as_complex_matrix(b, "b")
    n = m.shape[0]
    if m.shape[1] != n:
        raise ValueError(f"m must be square, got {m.shape}")
    if b.shape[0] != n:
        raise ValueError(f"b has {b.shape[0]} rows, m has {n}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    lhs = m + alpha * np.eye(n)
    if np.linalg.cond(lhs) * np.finfo(float).eps >= 1.0:
        raise SingularMatrixError("regularized system is singular to working precision")
    try:
        x = np.linalg.solve(lhs, b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    bnorm = np.linalg.norm(b)
    if not np.all(np.isfinite(x)) or np.linalg.norm(lhs @ x - b) > 1e-8 * bnorm:
        raise SingularMatrixError("regularized solve failed the residual check")
    return x


def logdet2_hermitian_pd(a, herm_tol: float = 1e-10) -> float:
    """log2 of the determinant of a Hermitian positive-definite matrix.

    Uses a Cholesky factorization: log2|A| = 2 * sum(log2(diag(L))).
    ``herm_tol`` is relative to ``max(1, ||A||_F)``.
    """
    a = as_complex_matrix(a, "logdet input")
    if a.shape[0] != a.shape[1]:
        raise NotHermitianPDError(f"matrix must be square, got {a.shape}")
    scale = max(1.0, float(np.linalg.norm(a)))
    if np.linalg.norm(a - a.conj().T) > herm_tol * scale:
        raise NotHermitianPDError("matrix is not Hermitian")
    try:
        chol = np.linalg.cholesky(0.5 * (a + a.conj().T))
    except np.linalg.LinAlgError as exc:
        raise NotHermitianPDError("matrix is not positive definite") from exc
    return float(2.0 * np.sum(np.log2(np.diag(chol).real)))
