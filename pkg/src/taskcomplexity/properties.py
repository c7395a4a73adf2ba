"""Controlled local properties of a selected node pair.

Properties are taken on the 1-neighborhood subgraph H of {u, v}: the nodes
u, v and all their neighbors, and the edges incident to u or v. H is not
necessarily induced, so edges between two neighbors are left out. In H the
only triangles are u-v-w for a common neighbor w, and only when u ~ v, which
gives the clustering coefficients in closed form.
"""
from functools import cached_property

import numpy as np

from ._validation import check_pair
from .complexity import element_volumes, view_volume_of
from .graph import LocalProperties

PATH_BETWEENNESS_RULE = "mean normalized betweenness over interior nodes of the lexicographically first shortest path"


class PropertyContext:
    """Per-graph tables shared by every candidate of one graph and layout."""

    def __init__(self, g, layout, volumes=None, view_volume=None, seed=0):
        if layout.node_count != g.node_count:
            raise ValueError("layout does not cover every node of the graph")
        self.g = g
        self.layout = layout
        self.adjacency = g.adjacency.astype(bool)
        self.distances = g.distance_matrix
        if volumes is None:
            volumes = element_volumes(layout, g, seed)
        self.node_volumes, self.edge_volumes = volumes
        n = g.node_count
        self.incident_edge_volume = np.zeros(n)
        self.edge_volume_matrix = np.zeros((n, n))
        e = g.edge_array
        if len(e):
            np.add.at(self.incident_edge_volume, e[:, 0], self.edge_volumes)
            np.add.at(self.incident_edge_volume, e[:, 1], self.edge_volumes)
            self.edge_volume_matrix[e[:, 0], e[:, 1]] = self.edge_volumes
            self.edge_volume_matrix[e[:, 1], e[:, 0]] = self.edge_volumes
        closed = (self.adjacency | np.eye(n, dtype=bool)).astype(float)
        # shared[u, v]: node volume of N[u] & N[v]
        self.closed_volume = closed @ self.node_volumes
        self.shared_volume = (closed * self.node_volumes) @ closed.T
        self.view_volume = view_volume_of(layout) if view_volume is None else float(view_volume)

    @cached_property
    def next_hop(self):
        """``next_hop[x, v]``: smallest neighbor of x one step closer to v (-1 if none)."""
        A, D = self.adjacency, self.distances
        n = len(A)
        out = np.full((n, n), -1, dtype=np.int64)
        for x in range(n):
            closer = A[x][:, None] & (D == D[x][None, :] - 1)
            has = closer.any(axis=0)
            out[x, has] = np.argmax(closer[:, has], axis=0)
        return out

    @cached_property
    def interior_betweenness(self):
        """Summed betweenness over interior nodes of the first x-v path."""
        D, nh, bc = self.distances, self.next_hop, self.g.betweenness
        n = len(D)
        S = np.zeros((n, n))
        finite = D[np.isfinite(D)]
        cols = np.arange(n)[None, :].repeat(n, axis=0)
        for d in range(2, int(finite.max()) + 1 if finite.size else 0):
            xs, vs = np.nonzero(D == d)
            hop = nh[xs, vs]
            S[xs, vs] = bc[hop] + S[hop, cols[xs, vs]]
        return S


def first_shortest_path(g, u, v, distances=None):
    """Shortest u-v path taking the smallest-id next hop at every step."""
    D = g.distance_matrix if distances is None else distances
    if not np.isfinite(D[u, v]):
        raise ValueError(f"nodes {u} and {v} are not connected")
    path = [u]
    while path[-1] != v:
        here = path[-1]
        path.append(min(w for w in g.neighbors(here) if D[w, v] == D[here, v] - 1))
    return path


def pair_properties(ctx, us, vs):
    """Vectorized local properties; returns a dict of arrays keyed by field name."""
    g = ctx.g
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    A = ctx.adjacency
    deg = g.degrees.astype(float)
    adjacent = A[us, vs]
    cn = np.count_nonzero(A[us] & A[vs], axis=1).astype(float)
    du, dv = deg[us], deg[vs]

    n_nodes = du + dv - cn + np.where(adjacent, 0, 2)
    n_edges = du + dv - adjacent
    density = 2.0 * n_edges / (n_nodes * (n_nodes - 1))

    with np.errstate(divide="ignore", invalid="ignore"):
        # u and v each close cn triangles; every common neighbor has coefficient 1
        cu = np.where(du > 1, cn / (du * (du - 1) / 2), 0.0)
        cv = np.where(dv > 1, cn / (dv * (dv - 1) / 2), 0.0)
    clustering = np.where(adjacent, (cu + cv + cn) / n_nodes, 0.0)

    degree_centrality = 0.5 * (du + dv) / (g.node_count - 1)

    hops = ctx.distances[us, vs]
    betweenness = np.zeros(len(us))
    far = hops >= 2
    if far.any():
        betweenness[far] = ctx.interior_betweenness[us[far], vs[far]] / (hops[far] - 1)

    pos = ctx.layout.positions
    distance = np.linalg.norm(pos[us] - pos[vs], axis=1)

    volume = ctx.closed_volume[us] + ctx.closed_volume[vs] - ctx.shared_volume[us, vs]
    volume += ctx.incident_edge_volume[us] + ctx.incident_edge_volume[vs] - ctx.edge_volume_matrix[us, vs]
    fill = (np.maximum(volume, 0.0) / ctx.view_volume) ** (1.0 / 3.0)

    return {
        "local_density": density,
        "local_clustering": clustering,
        "degree_centrality": degree_centrality,
        "path_betweenness": betweenness,
        "euclidean_node_distance": distance,
        "fill_ratio": fill,
    }


def local_properties(g, layout, cand, context=None):
    """:class:`LocalProperties` of ``cand`` (any object with ``u`` and ``v``)."""
    ctx = context or PropertyContext(g, layout)
    u, v = check_pair(g, cand.u, cand.v)
    cols = pair_properties(ctx, [u], [v])
    return LocalProperties(**{k: float(a[0]) for k, a in cols.items()})


def annotate(g, layout, cands, context=None):
    """Attach :class:`LocalProperties` to every candidate in place."""
    ctx = context or PropertyContext(g, layout)
    if not cands:
        return cands
    cols = pair_properties(ctx, [c.u for c in cands], [c.v for c in cands])
    names = list(cols)
    rows = np.column_stack([cols[k] for k in names]).tolist()
    for cand, row in zip(cands, rows):
        cand.properties = LocalProperties(*row)
    return cands
