import numpy as np
import pytest

from zlap.graph import Graph, is_connected, new_graph


def path_graph(n, weight=1.0):
    return new_graph(n, [(i, i + 1, weight) for i in range(n - 1)])


def cycle_graph(n):
    return new_graph(n, [(i, (i + 1) % n, 1.0) for i in range(n)])


def complete_graph(n):
    return new_graph(n, [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)])


def dumbbell_graph(k):
    """Two k-cliques joined by one edge."""
    edges = []
    for off in (0, k):
        edges += [(off + i, off + j, 1.0) for i in range(k) for j in range(i + 1, k)]
    edges.append((k - 1, k, 1.0))
    return new_graph(2 * k, edges)


def random_connected(rng, n, p=0.4, directed=False, low=0.5, high=2.0):
    """Random weighted graph whose support contains a spanning path, so it is connected."""
    m = (rng.random((n, n)) < p) * rng.uniform(low, high, (n, n))
    np.fill_diagonal(m, 0.0)
    perm = rng.permutation(n)
    for a, b in zip(perm, perm[1:]):
        w = rng.uniform(low, high)
        m[a, b] = max(m[a, b], w)
        m[b, a] = max(m[b, a], w)
    if not directed:
        m = np.triu(m, 1)
        m = m + m.T
    g = Graph.from_matrix(m, directed=directed)
    assert is_connected(g)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def p3():
    return path_graph(3)


@pytest.fixture
def p4():
    return path_graph(4)


@pytest.fixture
def k3():
    return complete_graph(3)


# --- acceptance reporting -----------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _criteria[label] = "PASS" if rep.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in _criteria.items():
        terminalreporter.write_line(f"{status}  {label}")
