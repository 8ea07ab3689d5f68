import itertools

import numpy as np
import pytest

from fhei.cost import Scenario, energies
from fhei.sim import FIXED_G_D, FIXED_G_U, perturbed_scenario


@pytest.fixture
def fixed_gain_scenario():
    """The five-mobile fixed-gain scenario with deterministic mid-range caps."""
    return Scenario.from_gains(FIXED_G_U, FIXED_G_D, Q=np.linspace(1.5e9, 4.5e9, 5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_instance(seed, M=2, spread=2.0):
    return perturbed_scenario(np.random.default_rng(seed), M, spread)


def lp_vertex_optimum(scenario, alloc, cap):
    """Max sum(d) of the feature-size LP by enumerating every vertex of the polytope.

    Constraints: d_min <= d <= d_max, sum(slope * d) <= energy room at fixed
    allocation, sum(d) <= cap. Exponential in M; fine for M <= 4.
    """
    M = scenario.M
    lo, hi = scenario.d_min, scenario.d_max
    d0 = np.full(M, lo)
    base = energies(scenario, d0, alloc).sum()
    # per-byte energy written out from the model terms, independently of the solver
    slopes = scenario.sigma * 8.0 / (alloc.beta * scenario.D) + scenario.psi * alloc.q**2 * scenario.net.c2
    rows, rhs = [], []
    for m in range(M):
        e = np.eye(M)[m]
        rows += [e, -e]
        rhs += [hi, -lo]
    rows.append(slopes)
    rhs.append(M * scenario.E_bar - base + slopes @ d0)
    rows.append(np.ones(M))
    rhs.append(cap)
    A, b = np.array(rows), np.array(rhs)
    best = -np.inf
    for idx in itertools.combinations(range(len(A)), M):
        sub = A[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-300:
            continue
        try:
            x = np.linalg.solve(sub, b[list(idx)])
        except np.linalg.LinAlgError:
            continue
        if np.all(A @ x <= b + 1e-9 * np.maximum(1.0, np.abs(b))):
            best = max(best, x.sum())
    return best


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def report_criterion(number, name, ok, detail):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
