"""Seeded Monte Carlo phase-transition experiments."""

from __future__ import annotations

import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from os import PathLike
from typing import Sequence

from mmvbench.problem import (
    SUCCESS_REL_TOL,
    DegenerateDrawError,
    gen_dictionary,
    gen_signal,
    measure,
    recovery_success,
    trial_rng,
)
from mmvbench.solvers import SOLVERS

logger = logging.getLogger(__name__)

CSV_HEADER = ("algorithm", "n", "m", "l", "k", "tau", "trials", "successes", "rate", "wall_time_ms")
DEFAULT_ALGORITHMS = ("somp", "ra-omp", "ra-ormp", "ra-thresh")
THREADS_ENV = "MMVBENCH_THREADS"
MAX_DRAW_ATTEMPTS = 8
CHUNK_TRIALS = 25
# spawn-key tag separating the shared dictionary stream from per-trial streams
_FIXED_DICTIONARY_TAG = 2**31 - 1


@dataclass(frozen=True)
class ExperimentSpec:
    n: int
    m: int
    l_values: tuple[int, ...]
    k_values: tuple[int, ...]
    tau_rule: str | tuple[int, ...] = "full"
    trials: int = 100
    algorithms: tuple[str, ...] = DEFAULT_ALGORITHMS
    master_seed: int = 42
    success_rel_tol: float = SUCCESS_REL_TOL
    fix_dictionary: bool = False
    record_timing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "l_values", tuple(int(v) for v in self.l_values))
        object.__setattr__(self, "k_values", tuple(int(v) for v in self.k_values))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if not isinstance(self.tau_rule, str):
            object.__setattr__(self, "tau_rule", tuple(int(t) for t in self.tau_rule))
        elif self.tau_rule != "full":
            raise ValueError(f"unknown tau rule {self.tau_rule!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.n < 1 or not 1 <= self.m <= self.n:
            raise ValueError("need 1 <= m <= n")
        if not self.l_values or not self.k_values:
            raise ValueError("l and k lists must be non-empty")
        if min(self.l_values) < 1 or min(self.k_values) < 1 or max(self.k_values) > self.m:
            raise ValueError("need l >= 1 and 1 <= k <= m")
        unknown = [a for a in self.algorithms if a not in SOLVERS]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}; choose from {sorted(SOLVERS)}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master seed must be a 64-bit unsigned integer")

    def taus(self, l: int, k: int) -> list[int]:
        if self.tau_rule == "full":
            return [min(k, l)]
        return [t for t in self.tau_rule if 1 <= t <= min(k, l)]

    def problem_cells(self) -> list[tuple[int, int, int]]:
        return [(l, k, tau) for l in self.l_values for k in self.k_values for tau in self.taus(l, k)]


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    n: int
    m: int
    l: int
    k: int
    tau: int
    trials: int
    successes: int
    rate: float
    wall_time_ms: int = field(default=0, compare=False)
    errors: int = field(default=0, compare=False)


def make_instance(spec: ExperimentSpec, l: int, k: int, tau: int, trial: int):
    """Dictionary, signal and measurements for one trial.

    The stream key omits the algorithm, so every algorithm in a sweep sees
    the same instances.
    """
    for attempt in range(MAX_DRAW_ATTEMPTS):
        rng = trial_rng(spec.master_seed, spec.n, spec.m, l, k, tau, trial, attempt)
        if spec.fix_dictionary:
            Phi = gen_dictionary(
                spec.m, spec.n, trial_rng(spec.master_seed, _FIXED_DICTIONARY_TAG, spec.n, spec.m)
            )
        else:
            Phi = gen_dictionary(spec.m, spec.n, rng)
        try:
            X = gen_signal(spec.n, l, k, tau, rng)
        except DegenerateDrawError:
            continue
        return Phi, X, measure(Phi, X)
    raise DegenerateDrawError(f"no rank-{tau} draw after {MAX_DRAW_ATTEMPTS} attempts")


def _run_chunk(spec: ExperimentSpec, l: int, k: int, tau: int, trials: range):
    tally = {a: [0, 0, 0.0] for a in spec.algorithms}
    for t in trials:
        Phi, X, Y = make_instance(spec, l, k, tau, t)
        for name in spec.algorithms:
            start = time.perf_counter()
            try:
                ok = recovery_success(X, SOLVERS[name](Phi, Y, k), spec.success_rel_tol)
            except Exception as exc:  # counted as a failed trial
                logger.debug("%s failed on l=%d k=%d trial=%d: %s", name, l, k, t, exc)
                tally[name][1] += 1
                ok = False
            tally[name][2] += time.perf_counter() - start
            tally[name][0] += int(ok)
    return (l, k, tau), tally


def _limit_blas_threads():
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    threadpool_limits(1)


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def run_experiment(spec: ExperimentSpec, threads: int | None = None) -> list[ResultRow]:
    """Run every (algorithm, l, k) cell and tally recovery successes.

    Work is split into trial chunks that may run in worker processes; each
    trial draws from its own substream so the tallies do not depend on the
    number of workers. Parallelism is capped by ``threads`` or the
    ``MMVBENCH_THREADS`` environment variable.
    """
    jobs = []
    for l, k, tau in spec.problem_cells():
        for lo in range(0, spec.trials, CHUNK_TRIALS):
            jobs.append((l, k, tau, range(lo, min(lo + CHUNK_TRIALS, spec.trials))))

    totals: dict = {}
    workers = min(worker_count(threads), len(jobs))
    if workers <= 1:
        outputs = (_run_chunk(spec, *job) for job in jobs)
        _accumulate(totals, outputs)
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_limit_blas_threads) as pool:
            futures = [pool.submit(_run_chunk, spec, *job) for job in jobs]
            _accumulate(totals, (f.result() for f in futures))

    rows = []
    for name in spec.algorithms:
        for l, k, tau in spec.problem_cells():
            successes, errors, seconds = totals[(l, k, tau)][name]
            if errors:
                logger.warning("%s: %d solver errors at l=%d k=%d tau=%d", name, errors, l, k, tau)
            rows.append(
                ResultRow(
                    algorithm=name, n=spec.n, m=spec.m, l=l, k=k, tau=tau,
                    trials=spec.trials, successes=successes,
                    rate=successes / spec.trials,
                    wall_time_ms=int(round(seconds * 1000)) if spec.record_timing else 0,
                    errors=errors,
                )
            )
    return rows


def _accumulate(totals: dict, outputs) -> None:
    for cell, tally in outputs:
        acc = totals.setdefault(cell, {})
        for name, (succ, err, secs) in tally.items():
            prev = acc.get(name, (0, 0, 0.0))
            acc[name] = (prev[0] + succ, prev[1] + err, prev[2] + secs)


def _row_record(row: ResultRow) -> dict:
    record = asdict(row)
    return {key: record[key] for key in CSV_HEADER}


def emit_results(rows: Sequence[ResultRow], fmt: str = "csv", path: str | PathLike = "-") -> None:
    """Write result rows as CSV or JSON; ``path='-'`` writes to stdout."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    try:
        if str(path) == "-":
            _write(rows, fmt, sys.stdout)
        else:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                _write(rows, fmt, fh)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def _write(rows, fmt, fh) -> None:
    if fmt == "json":
        json.dump([_row_record(r) for r in rows], fh, indent=2)
        fh.write("\n")
        return
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        rec = _row_record(r)
        rec["rate"] = f"{r.rate:.6f}"
        writer.writerow([rec[key] for key in CSV_HEADER])


def read_results(path: str | PathLike, fmt: str | None = None) -> list[ResultRow]:
    """Parse a CSV or JSON results file back into rows."""
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    with open(path, newline="", encoding="utf-8") as fh:
        records = json.load(fh) if fmt == "json" else list(csv.DictReader(fh))
    rows = []
    for rec in records:
        kwargs = {}
        for key in CSV_HEADER:
            value = rec[key]
            if key == "algorithm":
                kwargs[key] = str(value)
            elif key == "rate":
                kwargs[key] = float(value)
            else:
                kwargs[key] = int(value)
        rows.append(ResultRow(**kwargs))
    return rows
