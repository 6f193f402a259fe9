"""End-to-end acceptance checks.

Each test appends a PASS/FAIL line to the log printed in the terminal
summary, then asserts. Run on their own with ``pytest tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LOG, ols_reference, omp_reference
from mmvbench import (
    construct_nonunique_pair,
    construct_somp_defeating_instance,
    erc,
    exhaustive_oracle,
    find_erc_failing_support,
    gen_dictionary,
    gen_signal,
    measure,
    q_thresholding,
    ra_omp,
    ra_ormp,
    ra_thresholding,
    recovery_success,
    reduced_rank_search,
    somp,
    spark,
    trial_rng,
    uniqueness_report,
)
from mmvbench.bench import ExperimentSpec, run_experiment
from mmvbench.numerics import numerical_rank

SWEEP_ALGOS = ("somp", "ra-omp", "ra-ormp", "ra-thresh", "thresh")


def record(name, passed, detail):
    ACCEPTANCE_LOG.append((name, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
    assert passed, f"{name}: {detail}"


def timed_run(spec):
    start = time.perf_counter()
    rows = run_experiment(spec)
    return {(r.algorithm, r.l, r.k): r for r in rows}, time.perf_counter() - start


def erc_normal_equations(Phi, support):
    A = Phi[:, list(support)]
    gram = A.T @ A
    return max(
        np.abs(np.linalg.solve(gram, A.T @ Phi[:, j])).sum()
        for j in range(Phi.shape[1]) if j not in support
    )


@pytest.mark.parametrize(
    "label,algo,budget",
    [("c01 ra-thresh exact at k=l=10", "ra-thresh", 10.0),
     ("c02 ra-ormp exact at k=l=10", "ra-ormp", 20.0)],
)
def test_full_rank_exactness_small(label, algo, budget):
    spec = ExperimentSpec(n=64, m=16, l_values=(10,), k_values=(10,), trials=200,
                          algorithms=(algo,), master_seed=1)
    rows, secs = timed_run(spec)
    row = rows[(algo, 10, 10)]
    ok = row.rate == 1.0 and row.errors == 0 and secs < budget
    record(label, ok, f"rate={row.rate:.3f} time={secs:.1f}s (limit {budget:.0f}s)")


def test_full_rank_frontier_k31():
    spec = ExperimentSpec(n=256, m=32, l_values=(32,), k_values=(31,), trials=100,
                          algorithms=("ra-ormp", "ra-thresh"), master_seed=3)
    rows, secs = timed_run(spec)
    rates = {a: rows[(a, 32, 31)].rate for a in spec.algorithms}
    ok = all(r == 1.0 for r in rates.values()) and secs < 600
    record("c03a rank-aware exact at k=31, l=32", ok, f"rates={rates} time={secs:.1f}s")


def test_somp_frontier_k16():
    spec = ExperimentSpec(n=256, m=32, l_values=(32,), k_values=(16,), trials=100,
                          algorithms=("somp",), master_seed=3)
    rows, secs = timed_run(spec)
    rate = rows[("somp", 32, 16)].rate
    record("c03b somp <= 0.05 at k=16, l=32", rate <= 0.05 and secs < 600,
           f"rate={rate:.2f} time={secs:.1f}s")


@pytest.fixture(scope="module")
def fig2_sweep():
    spec = ExperimentSpec(n=256, m=32, l_values=range(1, 33), k_values=(16,), trials=500,
                          algorithms=SWEEP_ALGOS, master_seed=42)
    return timed_run(spec)


def test_rank_sweep_plateau(fig2_sweep):
    rows, secs = fig2_sweep
    somp32 = rows[("somp", 32, 16)].rate
    ormp_high = [rows[("ra-ormp", l, 16)].rate for l in range(16, 33)]
    at_one = {a: rows[(a, 1, 16)].rate for a in SWEEP_ALGOS}
    ok = (
        0.70 <= somp32 <= 0.90
        and all(abs(r - 1.0) <= 0.01 for r in ormp_high)
        and all(r <= 0.05 for r in at_one.values())
        and secs < 1800
    )
    record("c04 rank sweep plateau", ok,
           f"somp(l=32)={somp32:.3f} min ra-ormp(l>=16)={min(ormp_high):.3f} "
           f"max(l=1)={max(at_one.values()):.3f} time={secs:.0f}s")


def test_rank_sweep_monotone_dominance(fig2_sweep):
    rows, _ = fig2_sweep
    parts, ok = [], True
    for l in (2, 4):
        s = rows[("somp", l, 16)]
        p = s.rate
        margin = 2 * math.sqrt(p * (1 - p) / s.trials)
        r = rows[("ra-omp", l, 16)].rate
        ok &= r >= p - margin
        parts.append(f"l={l}: ra-omp={r:.3f} somp={p:.3f} 2se={margin:.3f}")
    record("c05 ra-omp dominates somp at l=2,4", ok, "; ".join(parts))


def test_oracle_equivalence():
    start = time.perf_counter()
    misses, disagreements = [], 0
    for tau in (1, 2, 3):
        for i in range(50):
            rng = trial_rng(606, tau, i)
            Phi = gen_dictionary(6, 12, rng)
            X = gen_signal(12, 3, 3, tau, rng)
            assert uniqueness_report(spark(Phi), tau, 3).unique
            Y = measure(Phi, X)
            oracle = exhaustive_oracle(Phi, Y, 3)
            if oracle.support != X.support:
                misses.append((tau, i))
            if tau == 2 and reduced_rank_search(Phi, Y, 3).support != oracle.support:
                disagreements += 1
    secs = time.perf_counter() - start
    ok = not misses and disagreements == 0 and secs < 30
    record("c06 oracle and reduced-rank search", ok,
           f"oracle misses={len(misses)}/150 reduced-rank disagreements={disagreements}/50 "
           f"time={secs:.1f}s")


NONUNIQUE_CASES = {(4, 8): [(3, 1), (3, 2), (4, 1), (4, 2), (4, 3), (4, 4)],
                   (6, 12): [(4, 1), (4, 2), (5, 3), (6, 5)]}


def test_nonunique_construction():
    failures = []
    for i in range(20):
        shape = (4, 8) if i % 2 == 0 else (6, 12)
        cases = NONUNIQUE_CASES[shape]
        k, tau = cases[(i // 2) % len(cases)]
        Phi = np.asarray(gen_dictionary(*shape, trial_rng(707, i)))
        sp = spark(Phi)
        assert 2 * k >= sp - 1 + tau
        X, Xt = construct_nonunique_pair(Phi, k, tau, l=tau + 1, spark_value=sp)
        good = (
            np.abs(Phi @ X.entries - Phi @ Xt.entries).max() <= 1e-9
            and not np.array_equal(X.entries, Xt.entries)
            and len(X.support) <= k and len(Xt.support) <= k
            and numerical_rank(X.entries) == tau
        )
        if not good:
            failures.append((i, k, tau))
    record("c07 non-unique pairs", not failures, f"failures={failures} of 20")


def test_somp_rank_blindness():
    first_pick_hits, ra_failures, full_rank_cases = [], [], 0
    for i in range(20):
        k = 3 if i % 2 == 0 else 4
        tau = 1 + (i // 2) % k
        Phi = gen_dictionary(8, 24, trial_rng(808, i))
        omega = find_erc_failing_support(Phi, k, trial_rng(809, i))
        assert erc(Phi, omega) > 1
        X = construct_somp_defeating_instance(Phi, omega, tau, max(k, 4), seed=i)
        assert X.support == omega and X.rank == tau
        Y = measure(Phi, X)
        for q in (1, 2, np.inf):
            if somp(Phi, Y, k, q=q).selection_order[0] in omega:
                first_pick_hits.append((i, q))
        if tau == k:
            full_rank_cases += 1
            if not recovery_success(X, ra_thresholding(Phi, Y, k)):
                ra_failures.append(i)
    ok = not first_pick_hits and not ra_failures and full_rank_cases > 0
    record("c08 somp misled on ERC-failing supports", ok,
           f"on-support first picks={first_pick_hits} ra-thresh failures at tau=k="
           f"{ra_failures} of {full_rank_cases}")


def test_single_channel_reductions():
    mismatches = []
    for i in range(100):
        rng = trial_rng(909, i)
        k = 2 + i % 6
        Phi = gen_dictionary(16, 48, rng)
        y = measure(Phi, gen_signal(48, 1, k, 1, rng)).entries[:, 0]
        A = np.asarray(Phi)
        if list(somp(Phi, y, k).selection_order) != omp_reference(A, y, k):
            mismatches.append(("somp", i))
        if list(ra_ormp(Phi, y, k).selection_order) != ols_reference(A, y, k):
            mismatches.append(("ra-ormp", i))
        ra, th = ra_thresholding(Phi, y, k), q_thresholding(Phi, y, k, q=2)
        scaled = np.asarray(ra.criterion_values) * np.linalg.norm(y)
        if ra.support != th.support or not np.allclose(scaled, th.criterion_values, atol=1e-10):
            mismatches.append(("ra-thresh", i))
    record("c09 single-channel reductions", not mismatches, f"mismatches={mismatches[:5]} of 100")


def test_invariance_suite():
    support_changes, erc_gap, rank_violations, checked_steps = [], 0.0, [], 0
    for i in range(50):
        rng = trial_rng(1010, i)
        l, k = (6, 6) if i % 2 == 0 else (8, 5)
        tau = min(k, l) if i % 3 else max(1, min(k, l) - 2)
        Phi = gen_dictionary(20, 60, rng)
        X = gen_signal(60, l, k, tau, rng)
        Y = measure(Phi, X).entries
        while True:
            G = rng.standard_normal((l, l))
            if np.linalg.cond(G) < 1e3:
                break
        for solver in (ra_thresholding, ra_omp, ra_ormp):
            if solver(Phi, Y, k).support != solver(Phi, Y @ G, k).support:
                support_changes.append((solver.__name__, i))
        A = np.asarray(Phi)
        erc_gap = max(erc_gap, abs(erc(A, X.support) - erc_normal_equations(A, X.support)))
        if tau == k:
            for d in ra_omp(Phi, Y, k).iterations:
                if d.selected_atom not in X.support:
                    break
                checked_steps += 1
                if d.residual_rank != k - d.step:
                    rank_violations.append((i, d.step, d.residual_rank))
    ok = not support_changes and erc_gap <= 1e-8 and not rank_violations and checked_steps > 0
    record("c10 invariance and diagnostics", ok,
           f"support changes={support_changes} max erc gap={erc_gap:.1e} "
           f"rank violations={rank_violations} over {checked_steps} steps")
