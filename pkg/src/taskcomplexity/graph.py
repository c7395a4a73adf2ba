"""Undirected simple graphs and the topology queries the tasks rely on."""
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from ._validation import check_count, check_node, check_pair

logger = logging.getLogger(__name__)

TASK_CN = "CN"
TASK_SP = "SP"
TASKS = (TASK_CN, TASK_SP)

DEFAULT_PATH_CAP = 64


class UnreachableError(ValueError):
    """Raised when two nodes lie in different connected components."""


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph on dense node ids ``0..node_count-1``.

    Edges are stored as sorted ``(a, b)`` tuples with ``a < b``.
    """

    node_count: int
    edges: frozenset
    labels: tuple = ()

    def __post_init__(self):
        check_count(self.node_count, "node_count", minimum=0)
        clean = set()
        for e in self.edges:
            a, b = (int(x) for x in e)
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if not (0 <= a < self.node_count and 0 <= b < self.node_count):
                raise ValueError(f"edge ({a}, {b}) references a missing node")
            clean.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(clean))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.node_count)))
        elif len(self.labels) != self.node_count:
            raise ValueError("labels must have one entry per node")
        else:
            object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))

    @classmethod
    def from_edges(cls, edges, node_count=None, labels=None):
        edges = [tuple(int(x) for x in e) for e in edges]
        if node_count is None:
            node_count = 1 + max((max(e) for e in edges), default=-1)
        return cls(node_count, frozenset(edges), tuple(labels or ()))

    @property
    def edge_count(self):
        return len(self.edges)

    @cached_property
    def edge_array(self):
        """Edges as an ``(m, 2)`` int array in sorted order."""
        arr = np.array(sorted(self.edges), dtype=np.intp)
        return arr.reshape(-1, 2)

    @cached_property
    def _neighbors(self):
        nbrs = [[] for _ in range(self.node_count)]
        for a, b in sorted(self.edges):
            nbrs[a].append(b)
            nbrs[b].append(a)
        return tuple(tuple(sorted(n)) for n in nbrs)

    def neighbors(self, u):
        return self._neighbors[check_node(self, u)]

    @cached_property
    def degrees(self):
        return np.array([len(n) for n in self._neighbors], dtype=np.intp)

    def degree(self, u):
        return int(self.degrees[check_node(self, u)])

    def has_edge(self, a, b):
        return (min(a, b), max(a, b)) in self.edges

    @cached_property
    def adjacency(self):
        """Dense boolean adjacency matrix."""
        adj = np.zeros((self.node_count, self.node_count), dtype=bool)
        if self.edge_count:
            e = self.edge_array
            adj[e[:, 0], e[:, 1]] = True
            adj[e[:, 1], e[:, 0]] = True
        return adj

    def to_sparse(self):
        n = self.node_count
        e = self.edge_array
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return csr_matrix((data, (rows, cols)), shape=(n, n))

    @cached_property
    def distance_matrix(self):
        """All-pairs hop distances; unreachable pairs are ``inf``."""
        if self.node_count == 0:
            return np.zeros((0, 0))
        return shortest_path(self.to_sparse(), method="D", directed=False, unweighted=True)

    def is_connected(self):
        if self.node_count <= 1:
            return True
        n_comp, _ = connected_components(self.to_sparse(), directed=False)
        return n_comp == 1

    @cached_property
    def betweenness(self):
        return betweenness_centrality(self)

    @cached_property
    def diameter(self):
        d = self.distance_matrix
        if not np.all(np.isfinite(d)):
            raise UnreachableError("graph is disconnected; diameter undefined")
        return int(d.max()) if d.size else 0


def order_pair(g, a, b):
    """Return ``(u, v)`` with ``deg(u) <= deg(v)``; ties go to the smaller id."""
    a, b = check_pair(g, a, b)
    da, db = g.degrees[a], g.degrees[b]
    if (da, a) <= (db, b):
        return a, b
    return b, a


@dataclass
class LocalProperties:
    local_density: float
    local_clustering: float
    degree_centrality: float
    path_betweenness: float
    euclidean_node_distance: float
    fill_ratio: float

    def as_dict(self):
        return dict(self.__dict__)


@dataclass
class NodePairCandidate:
    """A selected node pair for one task, ordered so that ``deg(u) <= deg(v)``.

    ``answer`` is the number of common neighbors (CN) or the shortest-path
    length in edges (SP). Build with :meth:`create` to get the ordering applied.
    """

    u: int
    v: int
    task: str
    answer: int
    graph_id: Optional[str] = None
    properties: Optional[LocalProperties] = field(default=None, compare=False)
    path_count: int = 1

    @classmethod
    def create(cls, g, a, b, task, answer=None, graph_id=None, path_count=1):
        if task not in TASKS:
            raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
        u, v = order_pair(g, a, b)
        if answer is None:
            if task == TASK_CN:
                answer = len(common_neighbors(g, u, v))
            else:
                answer = shortest_path_length(g, u, v)
        if answer < 1:
            raise ValueError(f"{task} candidate ({u}, {v}) has answer {answer} < 1")
        return cls(u, v, task, int(answer), graph_id, None, int(path_count))

    @property
    def key(self):
        return (self.graph_id, self.task, self.u, self.v)


def common_neighbors(g, u, v):
    """Set of nodes adjacent to both ``u`` and ``v``."""
    u, v = check_pair(g, u, v)
    return set(g.neighbors(u)) & set(g.neighbors(v)) - {u, v}


def bfs_distances(g, source):
    """Hop distances from ``source``; unreachable nodes get -1."""
    source = check_node(g, source, "source")
    dist = np.full(g.node_count, -1, dtype=np.intp)
    dist[source] = 0
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in g._neighbors[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def shortest_path_length(g, u, v):
    u, v = check_pair(g, u, v)
    d = bfs_distances(g, u)[v]
    if d < 0:
        raise UnreachableError(f"node {v} is unreachable from node {u}")
    return int(d)


def _predecessor_dag(g, u, v):
    dist = bfs_distances(g, u)
    if dist[v] < 0:
        raise UnreachableError(f"node {v} is unreachable from node {u}")
    preds = {}
    # only nodes that can still reach v on a shortest path matter; walk backwards
    frontier = {v}
    while frontier:
        nxt = set()
        for x in frontier:
            if x in preds:
                continue
            preds[x] = tuple(y for y in g._neighbors[x] if dist[y] == dist[x] - 1)
            nxt.update(preds[x])
        frontier = nxt
    return dist, preds


def _count_paths(dist, preds, u, v):
    counts = {}
    for x in sorted(preds, key=lambda n: dist[n]):
        counts[x] = 1 if x == u else sum(counts[p] for p in preds[x])
    return counts[v]


def count_shortest_paths(g, u, v):
    u, v = check_pair(g, u, v)
    dist, preds = _predecessor_dag(g, u, v)
    return _count_paths(dist, preds, u, v)


def enumerate_shortest_paths(g, u, v, cap=DEFAULT_PATH_CAP):
    """All shortest ``u``-``v`` paths as node tuples, in lexicographic order.

    Returns ``None`` when there are more than ``cap`` paths, so callers can
    discard the pair without paying for the full enumeration.
    """
    u, v = check_pair(g, u, v)
    cap = check_count(cap, "cap")
    dist, preds = _predecessor_dag(g, u, v)
    if _count_paths(dist, preds, u, v) > cap:
        return None

    paths = []
    stack = [(v, (v,))]
    while stack:
        x, tail = stack.pop()
        if x == u:
            paths.append(tail)
            continue
        for p in preds[x]:
            stack.append((p, (p,) + tail))
    paths.sort()
    return paths


def betweenness_centrality(g, normalized=True):
    """Node betweenness by Brandes' accumulation over BFS trees."""
    n = g.node_count
    bc = [0.0] * n
    nbrs = g._neighbors
    for s in range(n):
        stack = []
        preds = [[] for _ in range(n)]
        sigma = [0] * n
        sigma[s] = 1
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            x = queue.popleft()
            stack.append(x)
            for y in nbrs[x]:
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    queue.append(y)
                if dist[y] == dist[x] + 1:
                    sigma[y] += sigma[x]
                    preds[y].append(x)
        delta = [0.0] * n
        while stack:
            y = stack.pop()
            coeff = (1.0 + delta[y]) / sigma[y]
            for x in preds[y]:
                delta[x] += sigma[x] * coeff
            if y != s:
                bc[y] += delta[y]
    bc = np.array(bc) / 2.0  # each unordered pair was counted from both ends
    if normalized and n > 2:
        bc *= 2.0 / ((n - 1) * (n - 2))
    return bc


def global_properties(g):
    """``(size, density)`` with density ``2|E| / (|V|(|V|-1))``."""
    n = g.node_count
    if n < 2:
        raise ValueError(f"density needs at least 2 nodes, got {n}")
    return n, 2.0 * g.edge_count / (n * (n - 1))


def largest_component(g):
    """Restrict ``g`` to its largest connected component, relabelling densely.

    Returns the new graph and an array mapping new ids to old ids.
    """
    if g.node_count == 0:
        return g, np.zeros(0, dtype=np.intp)
    _, comp = connected_components(g.to_sparse(), directed=False)
    sizes = np.bincount(comp)
    # ties resolved towards the component holding the smallest node id
    keep = np.flatnonzero(comp == np.argmax(sizes))
    if len(keep) < g.node_count:
        logger.info("dropped %d nodes outside the largest component", g.node_count - len(keep))
    remap = {int(old): new for new, old in enumerate(keep)}
    edges = [(remap[a], remap[b]) for a, b in g.edges if a in remap and b in remap]
    labels = [g.labels[i] for i in keep]
    return Graph.from_edges(edges, len(keep), labels), keep


def read_edgelist(path):
    """Read a whitespace-separated edge list.

    Node tokens are remapped to dense ids in order of first appearance; the
    second return value maps each original token to its dense id. Self-loops
    and duplicate edges are dropped with a warning.
    """
    mapping = {}
    edges = set()
    dropped = 0
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ValueError(f"{path}:{lineno}: expected 'a b', got {line!r}")
        a, b = (mapping.setdefault(tok, len(mapping)) for tok in parts[:2])
        if a == b or (min(a, b), max(a, b)) in edges:
            dropped += 1
            continue
        edges.add((min(a, b), max(a, b)))
    if dropped:
        logger.warning("%s: dropped %d self-loops/duplicate edges", path, dropped)
    return Graph(len(mapping), frozenset(edges), tuple(mapping)), mapping


def graph_to_json(g):
    return {"nodes": list(g.labels), "edges": [[g.labels[a], g.labels[b]] for a, b in sorted(g.edges)]}


def graph_from_json(doc):
    """Build a graph from ``{"nodes": [...], "edges": [[a, b], ...]}``.

    Edge endpoints refer to entries of ``nodes``.
    """
    nodes = [str(x) for x in doc["nodes"]]
    index = {name: i for i, name in enumerate(nodes)}
    if len(index) != len(nodes):
        raise ValueError("duplicate node names in graph document")
    edges = set()
    for a, b in doc["edges"]:
        try:
            ia, ib = index[str(a)], index[str(b)]
        except KeyError as exc:
            raise ValueError(f"edge ({a}, {b}) references unknown node {exc}") from None
        if ia != ib:
            edges.add((min(ia, ib), max(ia, ib)))
    return Graph(len(nodes), frozenset(edges), tuple(nodes))


def read_graph(path):
    """Read an edge list or a ``.json`` graph document, keeping the largest component."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        g = graph_from_json(json.loads(path.read_text(encoding="utf-8")))
    else:
        g, _ = read_edgelist(path)
    g, _ = largest_component(g)
    return g
