"""Problem instances: data model, seeded generators and adversarial constructions.

Index sets are zero-based tuples of sorted column (atom) indices throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from os import PathLike
from typing import TYPE_CHECKING, Sequence

import numpy as np

from mmvbench.conditions import erc
from mmvbench.numerics import (
    DEFAULT_REL_TOL,
    RankDeficientError,
    dependent_subset,
    null_vector,
    numerical_rank,
    pseudo_inverse,
)

if TYPE_CHECKING:
    from mmvbench.solvers import RecoveryResult

UNIT_NORM_TOL = 1e-10
SUCCESS_REL_TOL = 1e-6
ERC_SEARCH_BUDGET = 10_000


class DegenerateDrawError(RuntimeError):
    """A random draw missed its rank target (a probability-zero event)."""


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def trial_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the substream ``(master_seed, *key)``.

    Streams depend only on the key, never on the order in which they are
    requested, so parallel and serial runs draw identical instances.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Measurement operator with unit-norm columns.

    ``compressive=False`` marks square or tall fixtures used in unit tests.
    """

    entries: np.ndarray
    compressive: bool = True

    def __post_init__(self):
        A = np.array(self.entries, dtype=float)
        if A.ndim != 2:
            raise ValueError("dictionary must be a 2-D matrix")
        A.setflags(write=False)
        object.__setattr__(self, "entries", A)
        norms = np.linalg.norm(A, axis=0)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
            raise ValueError("dictionary columns must have unit l2 norm")
        if self.compressive and not A.shape[0] < A.shape[1]:
            raise ValueError(
                f"compressive dictionary needs m < n, got {A.shape}; "
                "pass compressive=False for fixtures"
            )

    @classmethod
    def normalized(cls, M, compressive: bool | None = None) -> "Dictionary":
        """Scale the columns of ``M`` to unit norm and wrap them."""
        M = np.asarray(M, dtype=float)
        if compressive is None:
            compressive = M.shape[0] < M.shape[1]
        return cls(M / np.linalg.norm(M, axis=0), compressive=compressive)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class JointSparseSignal:
    """Row-sparse n x l coefficient matrix with its support and rank."""

    entries: np.ndarray
    support: tuple[int, ...]
    rank: int

    @classmethod
    def from_matrix(cls, X, tol: float = 0.0, rel_tol: float = DEFAULT_REL_TOL):
        X = np.array(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        X.setflags(write=False)
        return cls(entries=X, support=row_support(X, tol), rank=numerical_rank(X, rel_tol))

    @property
    def sparsity(self) -> int:
        return len(self.support)

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class Measurements:
    entries: np.ndarray

    @property
    def channels(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class TrialConfig:
    n: int
    m: int
    l: int
    k: int
    tau: int
    master_seed: int = 0
    trial_index: int = 0

    def __post_init__(self):
        for name in ("n", "m", "l", "k", "tau"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.tau > min(self.k, self.l):
            raise ValueError("tau must not exceed min(k, l)")
        if self.k > self.n or self.m > self.n:
            raise ValueError("need k <= n and m <= n")
        if self.trial_index < 0 or not 0 <= self.master_seed < 2**64:
            raise ValueError("seed and trial index must be nonnegative")

    def rng(self, attempt: int = 0) -> np.random.Generator:
        return trial_rng(
            self.master_seed, self.n, self.m, self.l, self.k, self.tau, self.trial_index, attempt
        )


def gen_dictionary(m: int, n: int, seed=None) -> Dictionary:
    """Gaussian dictionary with columns normalized to unit length."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = _as_rng(seed)
    return Dictionary.normalized(rng.standard_normal((m, n)))


def gen_signal(n: int, l: int, k: int, tau: int, seed=None) -> JointSparseSignal:
    """Random k-row-sparse signal of rank tau.

    The support is a uniform k-subset. Full rank draws use i.i.d. Gaussian
    rows; lower ranks use a Gaussian outer product ``A @ B.T``.
    """
    if min(n, l, k, tau) < 1 or k > n:
        raise ValueError("need positive n, l, k, tau with k <= n")
    if tau > min(k, l):
        raise ValueError("tau must not exceed min(k, l)")
    rng = _as_rng(seed)
    support = np.sort(rng.choice(n, size=k, replace=False))
    if tau == min(k, l):
        block = rng.standard_normal((k, l))
    else:
        block = rng.standard_normal((k, tau)) @ rng.standard_normal((l, tau)).T
    X = np.zeros((n, l))
    X[support] = block
    signal = JointSparseSignal.from_matrix(X)
    if signal.rank != tau or signal.support != tuple(int(i) for i in support):
        raise DegenerateDrawError("degenerate random draw")
    return signal


def measure(Phi, X) -> Measurements:
    Phi = np.asarray(Phi, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Phi.shape[1] != X.shape[0]:
        raise ValueError(f"dimension mismatch: Phi is {Phi.shape}, X is {X.shape}")
    return Measurements(Phi @ X)


def row_support(X, tol: float = 0.0) -> tuple[int, ...]:
    """Indices of rows whose l2 norm exceeds ``tol``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    norms = np.linalg.norm(X, axis=1)
    return tuple(int(i) for i in np.flatnonzero(norms > tol))


def construct_nonunique_pair(
    Phi, k: int, tau: int, l: int | None = None, spark_value: int | None = None
) -> tuple[JointSparseSignal, JointSparseSignal]:
    """Two distinct k-joint-sparse signals with identical measurements.

    Requires ``2k >= spark - 1 + tau``. A null vector ``v`` of a dependent
    column set T, ``|T| = 2k - tau + 1``, is split across the two signals:
    X holds v on the first k - tau + 1 rows of T plus an identity block for
    the remaining rank, and ``X~ = X - [v, ..., v]``.
    """
    Phi = np.asarray(Phi, dtype=float)
    m, n = Phi.shape
    l = tau if l is None else l
    if not 1 <= tau <= k:
        raise ValueError("need 1 <= tau <= k")
    if l < tau:
        raise ValueError("need l >= tau")
    size_T = 2 * k - tau + 1
    if size_T > n:
        raise ValueError(f"need 2k - tau + 1 <= n, got {size_T} > {n}")

    start = 1 if spark_value is None else spark_value
    subset = dependent_subset(Phi, max_size=size_T, start_size=start)
    if subset is None and spark_value is not None and spark_value > 1:
        subset = dependent_subset(Phi, max_size=size_T)
    if subset is None:
        raise ValueError("uniqueness regime: no counterexample exists")
    spark_found = len(subset) if spark_value is None else spark_value
    if 2 * k < spark_found - 1 + tau:
        raise ValueError("uniqueness regime: no counterexample exists")

    rest = [j for j in range(n) if j not in subset]
    T = list(subset) + rest[: size_T - len(subset)]
    v = np.zeros(size_T)
    v[: len(subset)] = null_vector(Phi[:, subset])
    if v[0] < 0:
        v = -v

    head = k - tau + 1
    X_T = np.zeros((size_T, l))
    X_T[:head] = v[:head, None]
    X_T[head : head + tau - 1, : tau - 1] = np.eye(tau - 1)
    X = np.zeros((n, l))
    X[T] = X_T
    X_tilde = X.copy()
    X_tilde[T] -= v[:, None]

    first = JointSparseSignal.from_matrix(X)
    second = JointSparseSignal.from_matrix(X_tilde)
    gap = np.max(np.abs(Phi @ X - Phi @ X_tilde))
    if (
        first.sparsity > k
        or second.sparsity > k
        or first.rank != tau
        or gap > 1e-9
        or np.array_equal(X, X_tilde)
    ):
        raise RuntimeError("non-unique pair construction failed its own checks")
    return first, second


def find_erc_failing_support(
    Phi, k: int, seed=None, budget: int = ERC_SEARCH_BUDGET
) -> tuple[int, ...]:
    """Random search for a k-subset on which the exact recovery condition fails."""
    Phi = np.asarray(Phi, dtype=float)
    n = Phi.shape[1]
    rng = _as_rng(seed)
    for _ in range(budget):
        support = tuple(int(i) for i in np.sort(rng.choice(n, size=k, replace=False)))
        try:
            if erc(Phi, support) > 1.0:
                return support
        except RankDeficientError:
            continue
    raise LookupError(f"no ERC-failing support of size {k} found in {budget} draws")


def construct_somp_defeating_instance(
    Phi, support: Sequence[int], tau: int, l: int, slack: float = 0.5, seed=None
) -> JointSparseSignal:
    """Rank-tau signal on ``support`` whose first SOMP pick is off-support.

    The rank-one core replicates the worst-case OMP vector for the atom that
    violates the exact recovery condition; a small outer-product perturbation
    on the support raises the rank to tau while keeping every atom
    correlation within ``slack * eps / 2`` of the rank-one values, where
    ``eps`` is the realized correlation gap.
    """
    Phi = np.asarray(Phi, dtype=float)
    n = Phi.shape[1]
    omega = sorted(int(i) for i in support)
    k = len(omega)
    if not 0.0 < slack < 1.0:
        raise ValueError("slack must lie in (0, 1)")
    if not 1 <= tau <= min(k, l):
        raise ValueError("need 1 <= tau <= min(|support|, l)")
    rng = _as_rng(0 if seed is None else seed)

    P = pseudo_inverse(Phi[:, omega])
    off = np.array([j for j in range(n) if j not in set(omega)])
    l1 = np.abs(P @ Phi[:, off]).sum(axis=0)
    if l1.size == 0 or l1.max() <= 1.0:
        raise ValueError("ERC satisfied: no defeating instance")
    j_star = int(off[np.argmax(l1)])

    signs = np.sign(P @ Phi[:, j_star])
    y_star = P.T @ signs
    x = np.zeros(n)
    x[omega] = P @ y_star
    corr = np.abs(Phi.T @ (Phi @ x))
    eps = corr[j_star] - corr[omega].max()
    if eps <= 0:
        raise RuntimeError("worst-case vector does not separate the off-support atom")

    X = np.tile(x[:, None], (1, l))
    gram = Phi.T @ Phi
    for _ in range(16):
        if tau > 1:
            A = np.zeros((n, tau - 1))
            A[omega] = rng.standard_normal((k, tau - 1))
            E = A @ rng.standard_normal((l, tau - 1)).T
            E *= slack * eps / 2 / np.max(np.abs(gram @ E))
        else:
            E = np.zeros_like(X)
        signal = JointSparseSignal.from_matrix(X + E)
        if signal.rank == tau:
            break
    else:
        raise DegenerateDrawError("degenerate random draw")

    Y = Phi @ signal.entries
    C = Phi.T @ Y
    for q in (1, 2, np.inf):
        if int(np.argmax(np.linalg.norm(C, ord=q, axis=1))) in omega:
            raise RuntimeError("constructed instance does not defeat SOMP")
    return signal


def recovery_success(X_true, result: "RecoveryResult", rel_tol: float = SUCCESS_REL_TOL) -> bool:
    """Exact support match plus relative Frobenius error at most ``rel_tol``."""
    X = np.asarray(X_true, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    X_hat = np.asarray(result.coefficients, dtype=float).reshape(X.shape)
    if set(result.support) != set(row_support(X)):
        return False
    return bool(np.linalg.norm(X_hat - X) <= rel_tol * np.linalg.norm(X))


def load_matrix(path: str | PathLike) -> np.ndarray:
    """Read a row-major comma-separated matrix fixture."""
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read matrix from {path}: {exc}") from exc


def save_matrix(path: str | PathLike, M) -> None:
    """Write a matrix as comma-separated rows with 17 significant digits."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    try:
        np.savetxt(path, M, delimiter=",", fmt="%.17g")
    except OSError as exc:
        raise OSError(f"cannot write matrix to {path}: {exc}") from exc
