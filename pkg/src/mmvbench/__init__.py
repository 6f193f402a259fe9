"""Rank-aware joint sparse recovery for multiple measurement vectors."""

from mmvbench.numerics import (
    RankDeficientError,
    SubspaceBasis,
    orthonormal_range_basis,
    pseudo_inverse,
    spark,
)
from mmvbench.problem import (
    DegenerateDrawError,
    Dictionary,
    JointSparseSignal,
    Measurements,
    TrialConfig,
    construct_nonunique_pair,
    construct_somp_defeating_instance,
    find_erc_failing_support,
    gen_dictionary,
    gen_signal,
    measure,
    recovery_success,
    row_support,
    trial_rng,
)
from mmvbench.conditions import (
    UniquenessReport,
    erc,
    music_criterion,
    uniqueness_report,
)
from mmvbench.solvers import (
    IterationDiag,
    RecoveryResult,
    exhaustive_oracle,
    q_thresholding,
    ra_omp,
    ra_ormp,
    ra_thresholding,
    reduced_rank_search,
    somp,
)

__version__ = "0.1.0"
