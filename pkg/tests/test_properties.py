import itertools

import networkx as nx
import numpy as np
import pytest

from conftest import from_nx, random_connected
from taskcomplexity.complexity import element_volumes, view_volume_of
from taskcomplexity.graph import Graph, NodePairCandidate, largest_component
from taskcomplexity.layout import Layout3D, normalize_to_view, stress_layout
from taskcomplexity.properties import (PropertyContext, annotate, first_shortest_path, local_properties,
                                       pair_properties)
from taskcomplexity.synthetic import contact_graph


def _neighborhood_subgraph(G, u, v):
    """Nodes u, v and their neighbors with only the edges touching u or v."""
    H = nx.Graph()
    H.add_nodes_from({u, v} | set(G[u]) | set(G[v]))
    H.add_edges_from((x, y) for x, y in G.edges() if x in (u, v) or y in (u, v))
    return H


def _naive(G, pos, u, v, nodes_vol, edges_vol, edge_index, view):
    H = _neighborhood_subgraph(G, u, v)
    bc = nx.betweenness_centrality(G, normalized=True)
    path = min(nx.all_shortest_paths(G, u, v))
    interior = path[1:-1]
    vol = sum(nodes_vol[x] for x in H.nodes) + sum(edges_vol[edge_index[tuple(sorted(e))]] for e in H.edges)
    return {
        "local_density": nx.density(H),
        "local_clustering": nx.average_clustering(H),
        "degree_centrality": 0.5 * (G.degree[u] + G.degree[v]) / (G.number_of_nodes() - 1),
        "path_betweenness": float(np.mean([bc[w] for w in interior])) if interior else 0.0,
        "euclidean_node_distance": float(np.linalg.norm(pos[u] - pos[v])),
        "fill_ratio": (vol / view) ** (1 / 3),
    }


@pytest.mark.parametrize("seed", range(4))
def test_properties_match_networkx_recount(seed):
    g = random_connected(22, 0.18, seed)
    lay = normalize_to_view(stress_layout(g, seed=seed, n_init=2))
    G = nx.Graph(list(g.edges))
    G.add_nodes_from(range(g.node_count))
    nodes_vol, edges_vol = element_volumes(lay, g)
    edge_index = {tuple(int(x) for x in e): k for k, e in enumerate(g.edge_array)}
    ctx = PropertyContext(g, lay)
    pairs = list(itertools.combinations(range(g.node_count), 2))
    cols = pair_properties(ctx, [p[0] for p in pairs], [p[1] for p in pairs])
    for k, (u, v) in enumerate(pairs):
        want = _naive(G, lay.positions, u, v, nodes_vol, edges_vol, edge_index, view_volume_of(lay))
        for name, value in want.items():
            assert cols[name][k] == pytest.approx(value, rel=1e-9, abs=1e-12), (u, v, name)


def test_k3_clustering_is_one():
    g = Graph.from_edges([(0, 1), (1, 2), (0, 2)])
    lay = Layout3D(np.eye(3))
    props = local_properties(g, lay, NodePairCandidate.create(g, 0, 1, "CN"))
    assert props.local_clustering == 1.0
    assert props.local_density == 1.0


def test_star_leaves_have_zero_clustering():
    g = from_nx(nx.star_graph(4))
    lay = Layout3D(np.vstack([np.zeros(3), np.eye(3), -np.eye(3)[:1]]))
    props = local_properties(g, lay, NodePairCandidate.create(g, 1, 2, "CN"))
    assert props.local_clustering == 0.0


def test_study_scale_properties_finite_and_non_negative():
    g, _ = largest_component(contact_graph(149, 0.05, seed=11))
    lay = normalize_to_view(stress_layout(g, seed=1, n_init=2))
    cands = [NodePairCandidate.create(g, a, b, "SP") for a, b in [(0, 1), (5, 90), (20, 120), (7, 8)]]
    annotate(g, lay, cands)
    for c in cands:
        values = np.array(list(c.properties.as_dict().values()))
        assert np.all(np.isfinite(values)) and np.all(values >= 0)


def test_first_shortest_path_is_lexicographic_minimum():
    g = random_connected(30, 0.12, 3)
    G = nx.Graph(list(g.edges))
    for u, v in [(0, 7), (2, 19), (4, 11)]:
        assert first_shortest_path(g, u, v) == min(nx.all_shortest_paths(G, u, v))


def test_context_rejects_mismatched_layout():
    g = Graph.from_edges([(0, 1), (1, 2)])
    with pytest.raises(ValueError):
        PropertyContext(g, Layout3D(np.zeros((2, 3)) + np.arange(2)[:, None]))
