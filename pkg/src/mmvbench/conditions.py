"""Identifiability and recovery diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from mmvbench.numerics import SubspaceBasis, pseudo_inverse

MUSIC_ZERO_TOL = 1e-8


def erc(Phi, support: Sequence[int]) -> float:
    """Exact recovery condition value ``max_{j not in support} ||pinv(Phi_S) phi_j||_1``.

    Values below one certify SOMP (any q) for every signal on ``support``.
    """
    Phi = np.asarray(Phi, dtype=float)
    omega = sorted(int(i) for i in support)
    off = np.setdiff1d(np.arange(Phi.shape[1]), omega)
    if off.size == 0:
        return 0.0
    coef = pseudo_inverse(Phi[:, omega]) @ Phi[:, off]
    return float(np.abs(coef).sum(axis=0).max())


def projected_erc(Phi, selected: Sequence[int], support: Sequence[int]) -> float:
    """ERC of the remaining support in the projected, renormalized dictionary.

    This is the dictionary RA-ORMP sees after choosing ``selected``; nothing
    is known about whether it inherits the ERC of the original one, so the
    value is a diagnostic only.
    """
    Phi = np.asarray(Phi, dtype=float)
    selected = sorted(int(i) for i in selected)
    keep = [j for j in range(Phi.shape[1]) if j not in set(selected)]
    if selected:
        Q, _ = np.linalg.qr(Phi[:, selected])
        proj = Phi[:, keep] - Q @ (Q.T @ Phi[:, keep])
    else:
        proj = Phi[:, keep]
    proj = proj / np.linalg.norm(proj, axis=0)
    remaining = [keep.index(i) for i in support if i not in set(selected)]
    return erc(proj, remaining)


@dataclass(frozen=True)
class UniquenessReport:
    spark_value: int
    rank_used: int
    bound: Fraction
    k: int
    unique: bool


def uniqueness_report(spark_value: int, rank: int, k: int) -> UniquenessReport:
    """Check ``k < (spark - 1 + rank) / 2``.

    ``rank`` may be either rank(X) or rank(Y); the two agree whenever the
    bound can hold.
    """
    if spark_value < 2:
        raise ValueError("spark must be at least 2")
    if not 1 <= rank <= k:
        raise ValueError("need 1 <= rank <= k")
    bound = Fraction(spark_value - 1 + rank, 2)
    return UniquenessReport(
        spark_value=spark_value, rank_used=rank, bound=bound, k=k, unique=k < bound
    )


def music_criterion(Phi, U) -> np.ndarray:
    """Norm of each atom's component orthogonal to ``range(U)``.

    Zero exactly on the support in the identifiable full-rank case.
    """
    Phi = np.asarray(Phi, dtype=float)
    U = U.columns if isinstance(U, SubspaceBasis) else np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.shape[0] != Phi.shape[0]:
        raise ValueError("basis and dictionary dimensions disagree")
    resid = Phi - U @ (U.T @ Phi)
    return np.linalg.norm(resid, axis=0)
