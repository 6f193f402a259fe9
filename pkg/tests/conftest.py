import numpy as np
import pytest

from mmvbench import Dictionary

ACCEPTANCE_LOG: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LOG:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def triangle():
    """Two orthonormal atoms plus their normalized sum in the plane."""
    return Dictionary(np.array([[1.0, 0.0, 2**-0.5], [0.0, 1.0, 2**-0.5]]))


@pytest.fixture
def cube_diag():
    """e1, e2, e3 and the normalized diagonal in R^3."""
    s = 3**-0.5
    return Dictionary(np.array([[1.0, 0, 0, s], [0, 1.0, 0, s], [0, 0, 1.0, s]]))


def lstsq_residual(A, y):
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return y - A @ coef


def omp_reference(Phi, y, k):
    """Textbook OMP selections, residual by least squares."""
    Phi = np.asarray(Phi)
    y = np.asarray(y).ravel()
    chosen = []
    r = y.copy()
    for _ in range(k):
        if np.linalg.norm(r) <= 1e-10 * np.linalg.norm(y):
            break
        corr = np.abs(Phi.T @ r)
        corr[chosen] = -np.inf
        chosen.append(int(np.argmax(corr)))
        r = lstsq_residual(Phi[:, chosen], y)
    return chosen


def ols_reference(Phi, y, k):
    """Orthogonal least squares: add the atom that leaves the smallest residual."""
    Phi = np.asarray(Phi)
    y = np.asarray(y).ravel()
    chosen = []
    for _ in range(k):
        if chosen and np.linalg.norm(lstsq_residual(Phi[:, chosen], y)) <= 1e-10 * np.linalg.norm(y):
            break
        best, best_res = None, np.inf
        for i in range(Phi.shape[1]):
            if i in chosen:
                continue
            res = np.linalg.norm(lstsq_residual(Phi[:, chosen + [i]], y))
            if res < best_res:
                best, best_res = i, res
        chosen.append(best)
    return chosen
