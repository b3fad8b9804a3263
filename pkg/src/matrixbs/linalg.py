"""Dense matrix kernels and special functions used throughout the package.

Everything here is a thin, deterministic layer over LAPACK (via numpy)
with fixed sign conventions and explicit rank/symmetry gates, so that
downstream branch inversions and golden tests are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import (
    DomainError,
    NotSpdError,
    NotSymmetricError,
    RankDeficientError,
)

# Relative threshold below which a singular value counts as zero.
RANK_TOL = 1e-12
# Relative symmetry tolerance for symmetric/SPD inputs.
SYM_TOL = 1e-12

__all__ = [
    "SvdFactors",
    "as_matrix",
    "check_spd",
    "commutation",
    "kron",
    "log_mv_gamma",
    "pinv",
    "spd_sqrt",
    "svd_thin",
    "sym_eig",
    "sym_part",
    "vec",
]


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array with finite entries."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise DomainError(f"{name} must be 2-dimensional, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise DomainError(f"{name} contains non-finite entries")
    return A


def sym_part(S: np.ndarray) -> np.ndarray:
    return 0.5 * (S + S.T)


def _check_symmetric(S, name: str, tol: float = SYM_TOL) -> np.ndarray:
    S = as_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise NotSymmetricError(f"{name} must be square, got shape {S.shape}")
    scale = max(np.abs(S).max(), 1.0)
    if np.abs(S - S.T).max() > tol * scale:
        raise NotSymmetricError(f"{name} is not symmetric within {tol:g} relative")
    return sym_part(S)


def check_spd(S, name: str = "matrix", tol: float = SYM_TOL) -> np.ndarray:
    """Validate a symmetric positive definite matrix; returns its symmetrised copy."""
    S = _check_symmetric(S, name, tol)
    w = np.linalg.eigvalsh(S)
    if w.min() <= 0.0:
        raise NotSpdError(f"{name} has non-positive eigenvalue {w.min():g}")
    return S


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD A = left @ diag(singulars) @ right.T with fixed column signs."""

    left: np.ndarray       # (n, m), orthonormal columns
    singulars: np.ndarray  # (m,), descending, >= 0
    right: np.ndarray      # (m, m), orthogonal

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singulars) @ self.right.T


def _signed_thin_svd(A: np.ndarray):
    """Thin SVD with the largest-magnitude entry of each left column positive.

    No rank gate; used internally where zero singular values are legitimate.
    """
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    for j in range(U.shape[1]):
        k = int(np.argmax(np.abs(U[:, j])))
        if U[k, j] < 0.0:
            U[:, j] = -U[:, j]
            Vt[j, :] = -Vt[j, :]
    return U, s, Vt.T


def svd_thin(A) -> SvdFactors:
    """Thin SVD of a full-column-rank n x m matrix (n >= m)."""
    A = as_matrix(A, "A")
    n, m = A.shape
    if n < m:
        raise DomainError(f"need n >= m, got shape {A.shape}")
    U, s, V = _signed_thin_svd(A)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficientError(
            f"smallest singular value {s[-1]:g} below {RANK_TOL:g} of largest {s[0]:g}"
        )
    return SvdFactors(left=U, singulars=s, right=V)


def sym_eig(S, tol: float = SYM_TOL):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns (values, vectors) with S = vectors @ diag(values) @ vectors.T.
    """
    S = _check_symmetric(S, "S", tol)
    w, V = np.linalg.eigh(S)
    return w[::-1].copy(), V[:, ::-1].copy()


def spd_sqrt(B) -> np.ndarray:
    """Symmetric positive definite square root of an SPD matrix."""
    B = _check_symmetric(B, "B")
    w, V = sym_eig(B)
    if w[-1] <= 0.0:
        raise NotSpdError(f"matrix has non-positive eigenvalue {w[-1]:g}")
    return sym_part((V * np.sqrt(w)) @ V.T)


def pinv(A) -> np.ndarray:
    """Moore-Penrose inverse of a full-column-rank matrix: (A'A)^{-1} A'."""
    A = as_matrix(A, "A")
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficientError(
            f"smallest singular value {s[-1]:g} below {RANK_TOL:g} of largest {s[0]:g}"
        )
    return np.linalg.solve(A.T @ A, A.T)


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A, dtype=float), np.asarray(B, dtype=float))


def commutation(n: int, m: int) -> np.ndarray:
    """Permutation matrix K with K @ vec(A) = vec(A') for every n x m matrix A.

    vec stacks columns (column-major order).
    """
    if n < 1 or m < 1:
        raise DomainError(f"dimensions must be positive, got ({n}, {m})")
    K = np.zeros((n * m, n * m))
    rows = np.add.outer(m * np.arange(n), np.arange(m)).ravel()   # j + m*i
    cols = np.add.outer(np.arange(n), n * np.arange(m)).ravel()   # i + n*j
    K[rows, cols] = 1.0
    return K


def vec(A) -> np.ndarray:
    """Column-stacking vectorisation."""
    return np.asarray(A, dtype=float).flatten(order="F")


def log_mv_gamma(m: int, a: float) -> float:
    """log of the multivariate gamma: (m(m-1)/4) ln pi + sum_i ln Gamma(a - (i-1)/2)."""
    if m < 1:
        raise DomainError(f"dimension must be positive, got {m}")
    if a <= (m - 1) / 2:
        raise DomainError(f"need a > (m-1)/2 = {(m - 1) / 2:g}, got a = {a:g}")
    return float(m * (m - 1) / 4 * np.log(np.pi)
                 + sum(gammaln(a - (i - 1) / 2) for i in range(1, m + 1)))
