"""Synthetic contact networks shaped like the field-vole trapping graphs.

Nodes are animals at random trap locations in a unit square; contacts join the
spatially closest pairs (locally dense), and a small share of edges is
rewired to random partners (globally sparse but connected across sites).
"""
import numpy as np
from scipy.spatial.distance import pdist

from .graph import Graph, global_properties, largest_component

STUDY_SIZE_MEAN = 149
STUDY_SIZE_SD = 40
STUDY_DENSITY_MEAN = 0.05
STUDY_DENSITY_SD = 0.01
STUDY_GRAPH_COUNT = 34


def contact_graph(n, density, seed=None, rewire=0.1):
    """Random proximity graph with about ``density * n (n-1) / 2`` edges.

    Only the largest connected component is returned, so the final size and
    density can differ slightly from the request.
    """
    rng = np.random.default_rng(seed)
    pos = rng.uniform(size=(n, 2))
    m = max(n - 1, int(round(density * n * (n - 1) / 2)))
    iu, ju = np.triu_indices(n, 1)
    order = np.argsort(pdist(pos), kind="stable")[:m]
    edges = {(int(iu[k]), int(ju[k])) for k in order}
    n_rewire = int(round(rewire * m))
    edge_list = sorted(edges)
    drop = set(rng.choice(len(edge_list), size=n_rewire, replace=False).tolist()) if n_rewire else set()
    kept = {e for k, e in enumerate(edge_list) if k not in drop}
    while len(kept) < m:
        a, b = (int(x) for x in rng.choice(n, size=2, replace=False))
        kept.add((min(a, b), max(a, b)))
    g, _ = largest_component(Graph(n, frozenset(kept)))
    return g


def study_corpus(count=STUDY_GRAPH_COUNT, seed=0, size=(STUDY_SIZE_MEAN, STUDY_SIZE_SD),
                 density=(STUDY_DENSITY_MEAN, STUDY_DENSITY_SD)):
    """``count`` graphs with sizes and densities drawn around the study's means.

    Returns a list of ``(graph_id, Graph)``. Draws are truncated at two
    standard deviations.
    """
    seq = np.random.SeedSequence(seed)
    rng = np.random.default_rng(seq)
    corpus = []
    for i, child in enumerate(seq.spawn(count)):
        n = int(round(np.clip(rng.normal(*size), size[0] - 2 * size[1], size[0] + 2 * size[1])))
        d = float(np.clip(rng.normal(*density), density[0] - 2 * density[1], density[0] + 2 * density[1]))
        corpus.append((f"g{i:02d}", contact_graph(n, d, child)))
    return corpus


def describe(corpus):
    stats = np.array([global_properties(g) for _, g in corpus], dtype=float)
    return {
        "size_mean": float(stats[:, 0].mean()),
        "size_sd": float(stats[:, 0].std(ddof=1)) if len(stats) > 1 else 0.0,
        "density_mean": float(stats[:, 1].mean()),
        "density_sd": float(stats[:, 1].std(ddof=1)) if len(stats) > 1 else 0.0,
    }
