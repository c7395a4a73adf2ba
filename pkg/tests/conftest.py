import networkx as nx
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from taskcomplexity.graph import Graph

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def from_nx(G):
    G = nx.convert_node_labels_to_integers(G)
    return Graph.from_edges(list(G.edges()), G.number_of_nodes())


def random_connected(n, p, seed):
    """Largest component of G(n, p) as a package graph."""
    G = nx.gnp_random_graph(n, p, seed=seed)
    G = G.subgraph(max(nx.connected_components(G), key=len)).copy()
    return from_nx(G)


@pytest.fixture
def triangle():
    return Graph.from_edges([(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixture_corpus():
    """Bundled fixture graphs with quick layouts: ``(graphs, layouts)``."""
    from taskcomplexity.fixtures import fixture_dir
    from taskcomplexity.graph import read_graph
    from taskcomplexity.layout import normalize_to_view, stress_layout

    root = fixture_dir()
    graphs = [(f"g{i:02d}", read_graph(root / f"g{i:02d}.json")) for i in range(10)]
    layouts = {gid: normalize_to_view(stress_layout(g, seed=7, n_init=4)) for gid, g in graphs}
    return graphs, layouts


@pytest.fixture(scope="session")
def fixture_runs(tmp_path_factory):
    """Two timed CLI runs of the bundled fixture pipeline: ``[(out_dir, seconds, exit_code)]``."""
    import time

    from taskcomplexity.cli import main

    runs = []
    for k in range(2):
        out = tmp_path_factory.mktemp(f"run{k}")
        t0 = time.perf_counter()
        code = main(["pipeline", "--fixture", "--out", str(out)])
        runs.append((out, time.perf_counter() - t0, code))
    return runs


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """``record(n, name, ok, detail)`` logs one pass/fail line for an acceptance criterion."""

    def record(n, name, ok, detail):
        line = f"[{n}] {'PASS' if ok else 'FAIL'} {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[1:s.index("]")])):
            terminalreporter.write_line(line)
