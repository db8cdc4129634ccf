import numpy as np
import pytest

from lassolab.ensembles import EnsembleSpec, generate_matrix, mix_seed, rng_for
from lassolab.model import ProblemInstance


def gaussian_instance(m, N, seed, B=None, s=None):
    """Gaussian A scaled by 1/sqrt(m); y = A x + small noise, x s-sparse (or dense y)."""
    A = generate_matrix(EnsembleSpec("gaussian", m, N, m ** -0.5, mix_seed(seed, 0)))
    rng = rng_for(mix_seed(seed, 1))
    if s is None:
        y = rng.standard_normal(m)
    else:
        x = np.zeros(N)
        x[rng.choice(N, s, replace=False)] = rng.choice([-1.0, 1.0], s)
        if B is not None:
            x = B @ x
        y = A @ x + 0.05 * rng.standard_normal(m) / np.sqrt(m)
    return ProblemInstance(A, y, B)


@pytest.fixture
def small_instance():
    return gaussian_instance(12, 24, 7, s=2)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def acceptance_line(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] acceptance {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
