import numpy as np
import pytest
from scipy.optimize import linprog

from lipspec.instances import random_instance


def lp_transport_norm(space, coeffs):
    """Independent oracle: real KR norm as a dense transport LP over all points."""
    n = space.n
    b = np.zeros(n)
    for i, a in coeffs.items():
        b[i] += complex(a).real
    b[space.base_index] -= b.sum()
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    A = np.zeros((n, len(pairs)))
    for k, (i, j) in enumerate(pairs):
        A[i, k] += 1
        A[j, k] -= 1
    cost = [space.dist[i, j] for i, j in pairs]
    res = linprog(cost, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


@pytest.fixture(scope="session")
def instances():
    return [random_instance(s) for s in range(200)]


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
