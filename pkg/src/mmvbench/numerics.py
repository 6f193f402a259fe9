"""Dense linear-algebra primitives: range bases, pseudo-inverses and spark."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

DEFAULT_REL_TOL = 1e-10
SPARK_SIZE_GUARD = 20


class RankDeficientError(ValueError):
    """Raised when a matrix that must have full column rank does not."""


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis of a numerical range.

    ``columns`` is m x r with orthonormal columns, ``rank`` is r and
    ``tolerance`` the relative singular-value cutoff that produced it.
    """

    columns: np.ndarray
    rank: int
    tolerance: float

    def projector_complement(self) -> np.ndarray:
        """Return ``I - U U^T``."""
        U = self.columns
        return np.eye(U.shape[0]) - U @ U.T


def singular_values(M: np.ndarray) -> np.ndarray:
    return np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)


def numerical_rank(M: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Count singular values above ``rel_tol * sigma_1``."""
    s = singular_values(M)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def orthonormal_range_basis(
    M: np.ndarray, rel_tol: float = DEFAULT_REL_TOL, scale: float | None = None
) -> SubspaceBasis:
    """Orthonormal basis for the range of ``M`` via a truncated SVD.

    Singular values at or below ``rel_tol * sigma_ref`` are discarded, where
    ``sigma_ref`` is the largest singular value of ``M`` unless ``scale`` is
    given. Pursuit loops pass the leading singular value of the original data
    as ``scale`` so that round-off in a shrinking residual is never promoted
    to a signal direction.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if not 0.0 <= rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in [0, 1), got {rel_tol}")
    if not np.any(np.abs(M) > 0):
        raise ValueError("zero matrix has no range basis")
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    ref = s[0] if scale is None else scale
    r = int(np.count_nonzero(s > rel_tol * ref))
    if r == 0:
        raise ValueError("zero matrix has no range basis")
    return SubspaceBasis(columns=U[:, :r], rank=r, tolerance=rel_tol)


def pseudo_inverse(A: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Pseudo-inverse of a full-column-rank matrix through its SVD.

    Only the full-column-rank case is supported; anything else raises
    :class:`RankDeficientError`.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    m, s_cols = A.shape
    if s_cols > m:
        raise RankDeficientError("rank-deficient pseudo-inverse request")
    if s_cols == 0:
        return np.zeros((0, m))
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= rel_tol * s[0]:
        raise RankDeficientError("rank-deficient pseudo-inverse request")
    return (Vt.T / s) @ U.T


def spark(Phi: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Smallest number of linearly dependent columns, by brute force.

    Returns ``n + 1`` when every subset of columns is independent.
    """
    Phi = np.asarray(Phi, dtype=float)
    m, n = Phi.shape
    if n > SPARK_SIZE_GUARD:
        raise ValueError("spark brute force exceeds size guard")
    for size in range(1, n + 1):
        if size > m:
            # more columns than ambient dimension are always dependent
            return size
        for subset in combinations(range(n), size):
            if numerical_rank(Phi[:, subset], rel_tol) < size:
                return size
    return n + 1


def dependent_subset(
    Phi: np.ndarray, max_size: int, start_size: int = 1, rel_tol: float = DEFAULT_REL_TOL
) -> tuple[int, ...] | None:
    """First (smallest, then lexicographic) linearly dependent column subset.

    Unlike :func:`spark` this has no size guard: any ``m + 1`` columns are
    dependent, so the search stops there at the latest.
    """
    Phi = np.asarray(Phi, dtype=float)
    m, n = Phi.shape
    for size in range(max(start_size, 1), min(max_size, n) + 1):
        if size > m:
            return tuple(range(size))
        for subset in combinations(range(n), size):
            if numerical_rank(Phi[:, subset], rel_tol) < size:
                return subset
    return None


def null_vector(A: np.ndarray) -> np.ndarray:
    """Unit right singular vector for the smallest singular value of ``A``."""
    _, _, Vt = np.linalg.svd(np.asarray(A, dtype=float), full_matrices=True)
    return Vt[-1]
