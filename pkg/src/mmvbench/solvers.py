"""Joint sparse recovery algorithms.

All solvers take a dictionary ``Phi`` (m x n, unit-norm columns), data
``Y`` (m x l, or a length-m vector) and a target sparsity ``k``, and return a
:class:`RecoveryResult`. Argmax ties go to the lowest atom index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from mmvbench.conditions import MUSIC_ZERO_TOL, music_criterion
from mmvbench.numerics import (
    DEFAULT_REL_TOL,
    RankDeficientError,
    orthonormal_range_basis,
    pseudo_inverse,
)

RESIDUAL_STOP_TOL = 1e-10
EXHAUSTED_ATOM_TOL = 1e-10
# scores this close (relative) to the maximum are ties; lowest index wins
TIE_REL_TOL = 1e-10
SEARCH_GUARD = 2_000_000

STATUS_OK = "ok"
STATUS_UNRECOVERABLE = "unrecoverable"
STATUS_SPAN_EXHAUSTED = "span exhausted"


@dataclass
class IterationDiag:
    step: int
    selected_atom: int
    residual_rank: int
    criterion_values: np.ndarray | None = None


@dataclass
class RecoveryResult:
    support: tuple[int, ...]
    coefficients: np.ndarray
    algorithm: str
    q_norm: float | None = None
    iterations: list[IterationDiag] = field(default_factory=list)
    selection_order: tuple[int, ...] = ()
    criterion_values: np.ndarray | None = None
    status: str = STATUS_OK

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


def parse_q(q) -> float:
    """Normalize a q-norm tag (1, 2, inf or their string forms)."""
    if isinstance(q, str):
        q = q.strip().lower()
        q = np.inf if q in ("inf", "infinity", "max") else float(q)
    q = float(q)
    if q not in (1.0, 2.0, np.inf):
        raise ValueError(f"q must be 1, 2 or inf, got {q}")
    return q


def _prepare(Phi, Y, k: int):
    Phi = np.asarray(Phi, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Phi.ndim != 2 or Y.shape[0] != Phi.shape[0]:
        raise ValueError(f"dimension mismatch: Phi is {Phi.shape}, Y is {Y.shape}")
    if not 1 <= k <= Phi.shape[0]:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={Phi.shape[0]}")
    return Phi, Y


def _finish(Phi, Y, order, algorithm, **kwargs) -> RecoveryResult:
    """Least-squares coefficients on the selected atoms."""
    n, l = Phi.shape[1], Y.shape[1]
    support = tuple(sorted(int(i) for i in order))
    X = np.zeros((n, l))
    status = kwargs.pop("status", STATUS_OK)
    if support:
        try:
            X[list(support)] = pseudo_inverse(Phi[:, support]) @ Y
        except RankDeficientError:
            X[:] = 0.0
            status = STATUS_UNRECOVERABLE
    return RecoveryResult(
        support=support,
        coefficients=X,
        algorithm=algorithm,
        selection_order=tuple(int(i) for i in order),
        status=status,
        **kwargs,
    )


def _top_k(values: np.ndarray, k: int) -> list[int]:
    return [int(i) for i in np.argsort(-values, kind="stable")[:k]]


def _argmax(scores: np.ndarray, usable: np.ndarray) -> int:
    best = scores[usable].max()
    ties = usable & (scores >= best - TIE_REL_TOL * abs(best))
    return int(np.flatnonzero(ties)[0])


def _rank_of(R: np.ndarray, cutoff: float) -> int:
    s = np.linalg.svd(R, compute_uv=False)
    return int(np.count_nonzero(s > cutoff))


def _sigma_max(Y: np.ndarray) -> float:
    return float(np.linalg.norm(Y, 2))


class _Orthogonalizer:
    """Incremental Gram-Schmidt basis for the selected atoms."""

    def __init__(self, m: int):
        self.Q = np.zeros((m, 0))

    def project_out(self, v: np.ndarray) -> np.ndarray:
        return v - self.Q @ (self.Q.T @ v)

    def add(self, v: np.ndarray) -> np.ndarray | None:
        # two passes keep the basis orthonormal to working precision
        w = self.project_out(self.project_out(v))
        norm = np.linalg.norm(w)
        if norm <= EXHAUSTED_ATOM_TOL:
            return None
        q = w / norm
        self.Q = np.column_stack([self.Q, q])
        return q


def q_thresholding(Phi, Y, k: int, q=2) -> RecoveryResult:
    """Keep the k atoms with the largest ``||phi_i^T Y||_q``."""
    Phi, Y = _prepare(Phi, Y, k)
    q = parse_q(q)
    scores = np.linalg.norm(Phi.T @ Y, ord=q, axis=1)
    order = _top_k(scores, k)
    return _finish(Phi, Y, order, "thresh", q_norm=q, criterion_values=scores)


def ra_thresholding(Phi, Y, k: int, rel_tol: float = DEFAULT_REL_TOL) -> RecoveryResult:
    """Rank-aware thresholding: rank atoms by ``||phi_i^T U||_2`` with U = orth(Y).

    With rank(Y) = k this is discrete MUSIC.
    """
    Phi, Y = _prepare(Phi, Y, k)
    if not np.any(Y):
        return _finish(Phi, Y, [], "ra-thresh")
    U = orthonormal_range_basis(Y, rel_tol).columns
    scores = np.linalg.norm(Phi.T @ U, axis=1)
    order = _top_k(scores, k)
    return _finish(Phi, Y, order, "ra-thresh", criterion_values=scores)


def somp(Phi, Y, k: int, q=2, rel_tol: float = DEFAULT_REL_TOL) -> RecoveryResult:
    """Simultaneous OMP with q-norm atom selection.

    Runs k iterations or stops once the residual falls below
    ``1e-10 * ||Y||_F``. Already chosen atoms are never reselected.
    """
    Phi, Y = _prepare(Phi, Y, k)
    q = parse_q(q)
    return _pursuit(Phi, Y, k, rel_tol, "somp", q=q)


def ra_omp(Phi, Y, k: int, rel_tol: float = DEFAULT_REL_TOL) -> RecoveryResult:
    """SOMP with the rank-aware selection ``argmax ||phi_i^T orth(R)||_2``."""
    Phi, Y = _prepare(Phi, Y, k)
    return _pursuit(Phi, Y, k, rel_tol, "ra-omp")


def _pursuit(Phi, Y, k, rel_tol, algorithm, q=None) -> RecoveryResult:
    m, n = Phi.shape
    y_norm = np.linalg.norm(Y)
    if y_norm == 0.0:
        return _finish(Phi, Y, [], algorithm, q_norm=q)
    sigma_y = _sigma_max(Y)
    cutoff = rel_tol * sigma_y
    basis = _Orthogonalizer(m)
    R = Y.copy()
    selected = np.zeros(n, dtype=bool)
    order: list[int] = []
    iterations: list[IterationDiag] = []
    for step in range(1, k + 1):
        if algorithm == "somp":
            scores = np.linalg.norm(Phi.T @ R, ord=q, axis=1)
        else:
            try:
                U = orthonormal_range_basis(R, rel_tol, scale=sigma_y).columns
            except ValueError:
                break
            scores = np.linalg.norm(Phi.T @ U, axis=1)
        i = _argmax(scores, ~selected)
        selected[i] = True
        order.append(i)
        if basis.add(Phi[:, i]) is None:
            iterations.append(IterationDiag(step, i, _rank_of(R, cutoff), scores))
            return _finish(Phi, Y, order, algorithm, q_norm=q, iterations=iterations,
                           status=STATUS_UNRECOVERABLE)
        R = Y - basis.Q @ (basis.Q.T @ Y)
        iterations.append(IterationDiag(step, i, _rank_of(R, cutoff), scores))
        if np.linalg.norm(R) <= RESIDUAL_STOP_TOL * y_norm:
            break
    return _finish(Phi, Y, order, algorithm, q_norm=q, iterations=iterations)


def ra_ormp(Phi, Y, k: int, rel_tol: float = DEFAULT_REL_TOL) -> RecoveryResult:
    """Rank-aware order recursive matching pursuit.

    Each step selects against a basis of the residual using the remaining
    atoms projected orthogonally to the chosen ones and renormalized. Atoms
    whose projection falls below 1e-10 lie in the chosen span and are skipped;
    if none remain before k picks the result is flagged ``span exhausted``.
    """
    Phi, Y = _prepare(Phi, Y, k)
    m, n = Phi.shape
    y_norm = np.linalg.norm(Y)
    if y_norm == 0.0:
        return _finish(Phi, Y, [], "ra-ormp")
    sigma_y = _sigma_max(Y)
    cutoff = rel_tol * sigma_y
    basis = _Orthogonalizer(m)
    R = Y.copy()
    P = Phi.copy()
    norms = np.linalg.norm(P, axis=0)
    selected = np.zeros(n, dtype=bool)
    order: list[int] = []
    iterations: list[IterationDiag] = []
    status = STATUS_OK
    for step in range(1, k + 1):
        try:
            U = orthonormal_range_basis(R, rel_tol, scale=sigma_y).columns
        except ValueError:
            break
        usable = ~selected & (norms > EXHAUSTED_ATOM_TOL)
        if not usable.any():
            status = STATUS_SPAN_EXHAUSTED
            break
        scores = np.zeros(n)
        scores[usable] = np.linalg.norm(P[:, usable].T @ U, axis=1) / norms[usable]
        i = _argmax(scores, usable)
        selected[i] = True
        order.append(i)
        q = basis.add(P[:, i])
        if q is None:
            status = STATUS_SPAN_EXHAUSTED
            iterations.append(IterationDiag(step, i, _rank_of(R, cutoff), scores))
            break
        P -= np.outer(q, q @ P)
        norms = np.linalg.norm(P, axis=0)
        R = R - np.outer(q, q @ R)
        iterations.append(IterationDiag(step, i, _rank_of(R, cutoff), scores))
        if np.linalg.norm(R) <= RESIDUAL_STOP_TOL * y_norm:
            break
    return _finish(Phi, Y, order, "ra-ormp", iterations=iterations, status=status)


def _check_guard(n: int, size: int) -> None:
    if math.comb(n, size) > SEARCH_GUARD:
        raise ValueError(
            f"combinatorial search over C({n}, {size}) subsets exceeds guard {SEARCH_GUARD}"
        )


def exhaustive_oracle(Phi, Y, k: int, rel_tol: float = DEFAULT_REL_TOL) -> RecoveryResult:
    """Least-residual k-subset by full enumeration.

    Subsets whose columns are numerically dependent are skipped. Residuals
    within ``1e-12 * ||Y||_F`` of the incumbent count as ties and keep the
    lexicographically smaller subset.
    """
    Phi = np.asarray(Phi, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    m, n = Phi.shape
    if Y.shape[0] != m or not 1 <= k <= n:
        raise ValueError("dimension mismatch or k out of range")
    _check_guard(n, k)
    tie_tol = 1e-12 * np.linalg.norm(Y)
    best, best_res = None, np.inf
    for subset in combinations(range(n), k):
        U, s, _ = np.linalg.svd(Phi[:, subset], full_matrices=False)
        if s[-1] <= rel_tol * s[0]:
            continue
        res = np.linalg.norm(Y - U @ (U.T @ Y))
        if res < best_res - tie_tol:
            best, best_res = subset, res
    if best is None:
        return _finish(Phi, Y, [], "oracle", status=STATUS_UNRECOVERABLE)
    result = _finish(Phi, Y, best, "oracle")
    result.criterion_values = np.array([best_res])
    return result


def reduced_rank_search(Phi, Y, k: int, rel_tol: float = DEFAULT_REL_TOL) -> RecoveryResult:
    """Combinatorial search over only ``k - rank(Y)`` atoms.

    For each candidate set ``g`` the range of ``[Phi_g, Y]`` is formed and
    the atoms outside ``g`` that stay off that range are counted; the set
    with the fewest (lowest lexicographic on ties) wins. The support is then
    completed by MUSIC against the winning augmented range.
    """
    Phi, Y = _prepare(Phi, Y, k)
    n = Phi.shape[1]
    if not np.any(Y):
        return _finish(Phi, Y, [], "rr-search")
    tau = orthonormal_range_basis(Y, rel_tol).rank
    if tau > k:
        raise ValueError("rank exceeds sparsity")
    size = k - tau
    _check_guard(n, size)
    best, best_score, best_crit = None, None, None
    for gamma in combinations(range(n), size):
        Q = orthonormal_range_basis(np.hstack([Phi[:, gamma], Y]), rel_tol)
        crit = music_criterion(Phi, Q)
        outside = np.ones(n, dtype=bool)
        outside[list(gamma)] = False
        score = int(np.count_nonzero(crit[outside] > MUSIC_ZERO_TOL))
        if best_score is None or score < best_score:
            best, best_score, best_crit = gamma, score, crit
    crit = best_crit.copy()
    crit[list(best)] = np.inf
    completion = [int(i) for i in np.argsort(crit, kind="stable")[: k - size]]
    result = _finish(Phi, Y, list(best) + completion, "rr-search")
    result.criterion_values = best_crit
    return result


SOLVERS = {
    "somp": somp,
    "ra-omp": ra_omp,
    "ra-ormp": ra_ormp,
    "ra-thresh": ra_thresholding,
    "thresh": q_thresholding,
}
