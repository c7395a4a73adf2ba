"""Task instance complexity: signal and noise for the common-neighbor (CN) and
shortest-path (SP) tasks, the fill ratio of a layout, and their combinations.

Distances are Euclidean layout distances in metres. Noise sums a measure over
the elements (nodes and edges) that intrude into the region of inspection:
an edge counts with its length, a node with its diameter by default.
"""
import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_pair, check_positive
from .geometry import DEFAULT_MVEE_EPS, DEFAULT_MVEE_MAX_ITER, Sphere3, mvee, node_angle
from .graph import DEFAULT_PATH_CAP, TASK_CN, TASK_SP, TASKS, common_neighbors, enumerate_shortest_paths, order_pair

logger = logging.getLogger(__name__)

MU_NODE_MODES = ("diameter", "zero")
EDGE_NOISE_MODES = ("full", "clipped")
SIGNAL_MODES = ("absolute", "relative")
FILL_RATIO_SAMPLES = 100_000


class NoiseFreeError(ValueError):
    """The combined score is undefined because the noise is zero."""


@dataclass(frozen=True)
class ComplexityConfig:
    mode: str = "absolute"
    mu_node: str = "diameter"
    edge_noise: str = "full"
    inflate_nodes: bool = False
    path_cap: int = DEFAULT_PATH_CAP
    mvee_eps: float = DEFAULT_MVEE_EPS
    mvee_max_iter: int = DEFAULT_MVEE_MAX_ITER

    def __post_init__(self):
        _check_choice(self.mode, SIGNAL_MODES, "mode")
        _check_choice(self.mu_node, MU_NODE_MODES, "mu_node")
        _check_choice(self.edge_noise, EDGE_NOISE_MODES, "edge_noise")


def _check_choice(value, choices, name):
    if value not in choices:
        raise ValueError(f"{name} must be one of {choices}, got {value!r}")
    return value


@dataclass(frozen=True)
class ComplexityScore:
    """Signal and noise of one task instance.

    ``combined`` is ``signal + ln(noise)`` and is ``None`` for noise-free
    instances.
    """

    signal: float
    noise: float
    task: str = TASK_CN
    mode: str = "absolute"
    details: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def noise_free(self):
        return self.noise <= 0

    @property
    def combined(self):
        return None if self.noise_free else self.signal + math.log(self.noise)


def combined(score):
    """``signal + ln(noise)``; raises :class:`NoiseFreeError` when noise is 0."""
    if score.noise_free:
        raise NoiseFreeError("combined complexity is undefined for a noise-free instance")
    return score.signal + math.log(score.noise)


@dataclass(frozen=True)
class TotalComplexity:
    total_signal: float
    total_noise: float
    total_combined: float
    n_instances: int
    n_noise_free: int


def total_complexity(scores):
    """Sum signal, noise and combined complexity over a participant's instances.

    Noise-free instances add their signal to ``total_combined``.
    """
    scores = list(scores)
    signal = sum(s.signal for s in scores)
    noise = sum(s.noise for s in scores)
    comb = sum(s.signal if s.noise_free else s.combined for s in scores)
    return TotalComplexity(signal, noise, comb, len(scores), sum(s.noise_free for s in scores))


# -- fill ratio -------------------------------------------------------------

def _circle_integral(x, rho):
    """Antiderivative of sqrt(rho^2 - x^2)."""
    x = min(max(x, -rho), rho)
    return 0.5 * (x * math.sqrt(max(rho * rho - x * x, 0.0)) + rho * rho * math.asin(x / rho))


def _disk_lower_area(a, b, rho):
    """Area of {x^2 + y^2 <= rho^2, x <= a, y <= b}."""
    if rho <= 0 or a <= -rho or b <= -rho:
        return 0.0
    a = min(a, rho)

    def h_int(x0, x1):
        x0, x1 = max(x0, -rho), min(x1, a)
        return _circle_integral(x1, rho) - _circle_integral(x0, rho) if x1 > x0 else 0.0

    def width(x0, x1):
        x0, x1 = max(x0, -rho), min(x1, a)
        return max(x1 - x0, 0.0)

    if b >= rho:
        return 2.0 * h_int(-rho, rho)
    s = math.sqrt(rho * rho - b * b)
    if b >= 0:
        return 2.0 * h_int(-rho, -s) + h_int(-s, s) + b * width(-s, s) + 2.0 * h_int(s, rho)
    return h_int(-s, s) + b * width(-s, s)


def _disk_rect_area(x0, x1, y0, y1, rho):
    return (
        _disk_lower_area(x1, y1, rho)
        - _disk_lower_area(x0, y1, rho)
        - _disk_lower_area(x1, y0, rho)
        + _disk_lower_area(x0, y0, rho)
    )


def sphere_box_volume(center, radius, lower, upper):
    """Volume of a ball clipped to an axis-aligned box.

    Slices along z have a closed-form disk-rectangle area; the slices are
    integrated with adaptive quadrature.
    """
    c = np.asarray(center, dtype=float)
    lo = np.asarray(lower, dtype=float) - c
    hi = np.asarray(upper, dtype=float) - c
    r = float(radius)
    if r <= 0:
        return 0.0
    if np.all(lo <= -r) and np.all(hi >= r):
        return 4.0 / 3.0 * math.pi * r**3
    if np.any(hi <= -r) or np.any(lo >= r) or np.any(hi <= lo):
        return 0.0
    z0, z1 = max(lo[2], -r), min(hi[2], r)

    def slice_area(z):
        rho = math.sqrt(max(r * r - z * z, 0.0))
        return _disk_rect_area(lo[0], hi[0], lo[1], hi[1], rho)

    vol, _ = integrate.quad(slice_area, z0, z1, epsabs=1e-13 * r**3, epsrel=1e-10, limit=200)
    return vol


def _cylinder_box_volume(p0, p1, radius, lower, upper, rng, samples):
    axis = p1 - p0
    length = float(np.linalg.norm(axis))
    full = math.pi * radius**2 * length
    if length == 0:
        return 0.0
    lo_c = np.minimum(p0, p1) - radius
    hi_c = np.maximum(p0, p1) + radius
    if np.all(lo_c >= lower) and np.all(hi_c <= upper):
        return full
    if np.any(hi_c <= lower) or np.any(lo_c >= upper):
        return 0.0
    unit = axis / length
    helper = np.eye(3)[np.argmin(np.abs(unit))]
    e1 = np.cross(unit, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(unit, e1)
    t = rng.random(samples)
    rad = radius * np.sqrt(rng.random(samples))
    phi = 2.0 * math.pi * rng.random(samples)
    pts = p0 + np.outer(t, axis) + np.outer(rad * np.cos(phi), e1) + np.outer(rad * np.sin(phi), e2)
    inside = np.all((pts >= lower) & (pts <= upper), axis=1)
    return full * inside.mean()


def element_volumes(layout, g, seed=0, samples=FILL_RATIO_SAMPLES):
    """Per-node and per-edge volumes clipped to ``layout.bounds``.

    Nodes are balls of ``node_radius``; edges are cylinders of ``edge_radius``
    between node centers. Cylinders that cross the view boundary are clipped
    by Monte-Carlo sampling seeded from ``seed`` and the edge index.
    """
    lower, upper = layout.bounds
    pos = layout.positions
    nodes = np.array([sphere_box_volume(p, layout.node_radius, lower, upper) for p in pos])
    edges = np.empty(g.edge_count)
    for k, (a, b) in enumerate(g.edge_array):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), k]))
        edges[k] = _cylinder_box_volume(pos[a], pos[b], layout.edge_radius, lower, upper, rng, samples)
    return nodes, edges


def view_volume_of(layout):
    return float(np.prod(layout.bounds[1] - layout.bounds[0]))


def fill_ratio(layout, g, view_volume=None, seed=0, samples=FILL_RATIO_SAMPLES):
    """Cube root of total element volume inside the view over the view volume.

    Overlapping elements each contribute their own volume. ``view_volume``
    defaults to the volume of ``layout.bounds``. An empty graph has ratio 0.
    """
    if g.node_count == 0:
        return 0.0
    if view_volume is None:
        view_volume = view_volume_of(layout)
    view_volume = check_positive(view_volume, "view_volume")
    nodes, edges = element_volumes(layout, g, seed, samples)
    return float((nodes.sum() + edges.sum()) / view_volume) ** (1.0 / 3.0)


# -- element measure --------------------------------------------------------

def _node_measure(layout, config):
    return 2.0 * layout.node_radius if config.mu_node == "diameter" else 0.0


def _noise_sum(layout, g, region, node_ids, edge_ids, config):
    total = _node_measure(layout, config) * len(node_ids)
    if len(edge_ids):
        e = g.edge_array[edge_ids]
        p0 = layout.positions[e[:, 0]]
        p1 = layout.positions[e[:, 1]]
        if config.edge_noise == "full":
            total += float(np.linalg.norm(p1 - p0, axis=1).sum())
        else:
            total += float(region.clipped_lengths(p0, p1).sum())
    return total


def _elements_in(layout, g, region, excluded_nodes, excluded_edges, inflate_nodes):
    pos = layout.positions
    node_region = region.inflated(layout.node_radius) if inflate_nodes else region
    node_hit = node_region.contains(pos)
    if excluded_nodes:
        node_hit[list(excluded_nodes)] = False
    if g.edge_count:
        e = g.edge_array
        edge_hit = region.segments_intersect(pos[e[:, 0]], pos[e[:, 1]])
        for k, (a, b) in enumerate(e):
            if edge_hit[k] and (int(a), int(b)) in excluded_edges:
                edge_hit[k] = False
    else:
        edge_hit = np.zeros(0, dtype=bool)
    return np.flatnonzero(node_hit), np.flatnonzero(edge_hit)


def _config(config, **overrides):
    config = config or ComplexityConfig()
    if overrides:
        fields = {k: v for k, v in overrides.items() if v is not None}
        config = ComplexityConfig(**{**config.__dict__, **fields})
    return config


# -- Task 1: common neighbors -----------------------------------------------

def task1_signal(layout, g, u, v):
    """Sum over common neighbors w of ``(dist(w,u) + dist(w,v) - dist(u,v))^2``.

    Zero for a common neighbor lying on the segment uv; grows for those far
    off it. Units are square metres.
    """
    u, v = check_pair(g, u, v)
    pos = layout.positions
    cn = sorted(common_neighbors(g, u, v))
    if not cn:
        return 0.0
    d_uv = np.linalg.norm(pos[u] - pos[v])
    w = pos[cn]
    detour = np.linalg.norm(w - pos[u], axis=1) + np.linalg.norm(w - pos[v], axis=1) - d_uv
    return float(np.sum(detour**2))


def task1_region(layout, g, u, v):
    """Sphere around the midpoint of uv reaching the neighbor of u furthest from it."""
    u, v = check_pair(g, u, v)
    nbrs = g.neighbors(u)
    if not nbrs:
        raise ValueError(f"node {u} has no neighbors")
    pos = layout.positions
    o = 0.5 * (pos[u] + pos[v])
    r = float(np.linalg.norm(pos[list(nbrs)] - o, axis=1).max())
    return Sphere3(o, r)


def task1_exclusions(g, u, v):
    """Elements that belong to the instance itself and never count as noise.

    The selected nodes, their common neighbors, the edges joining each common
    neighbor to u and v, and the edge u-v when present.
    """
    cn = common_neighbors(g, u, v)
    nodes = cn | {u, v}
    edges = {(min(w, x), max(w, x)) for w in cn for x in (u, v)}
    if g.has_edge(u, v):
        edges.add((min(u, v), max(u, v)))
    return nodes, edges


def task1_noise_elements(layout, g, u, v, inflate_nodes=False):
    """(node ids, edge indices into ``g.edge_array``) counted as Task 1 noise."""
    region = task1_region(layout, g, u, v)
    nodes, edges = task1_exclusions(g, u, v)
    return _elements_in(layout, g, region, nodes, edges, inflate_nodes)


def task1_noise(layout, g, u, v, config=None, **overrides):
    """Summed measure of foreign elements inside the Task 1 sphere.

    ``u`` should be the lower-degree node (see :func:`order_pair`).
    """
    config = _config(config, **overrides)
    region = task1_region(layout, g, u, v)
    node_ids, edge_ids = task1_noise_elements(layout, g, u, v, config.inflate_nodes)
    return _noise_sum(layout, g, region, node_ids, edge_ids, config)


# -- Task 2: shortest path --------------------------------------------------

def path_signal(positions, path, relative=False):
    """Angle-weighted geodesic distance to the target along one path.

    Each node w contributes ``0.5 * (1 - cos(180 deg - theta_w)) * dist(w, v)``
    with theta the node angle, taken as 0 at the two endpoints.
    """
    pts = np.asarray(positions, dtype=float)[list(path)]
    target = pts[-1]
    to_target = np.linalg.norm(pts - target, axis=1)
    if relative:
        span = to_target[0]
        if span == 0:
            raise ValueError("relative signal is undefined when u and v coincide")
        to_target = to_target / span
    total = 0.0
    for i in range(len(pts)):
        if 0 < i < len(pts) - 1:
            theta = math.radians(node_angle(pts[i - 1], pts[i], pts[i + 1]))
        else:
            theta = 0.0
        total += 0.5 * (1.0 - math.cos(math.pi - theta)) * float(to_target[i])
    return total


def _shortest_paths(g, u, v, cap):
    paths = enumerate_shortest_paths(g, u, v, cap)
    if paths is None:
        raise ValueError(f"more than {cap} shortest paths between {u} and {v}")
    return paths


def task2_signal(layout, g, u, v, mode="absolute", cap=DEFAULT_PATH_CAP, paths=None):
    """Maximum of :func:`path_signal` over all shortest u-v paths.

    ``mode="relative"`` divides distances by ``dist(u, v)``, making the value
    dimensionless and scale-invariant.
    """
    u, v = check_pair(g, u, v)
    _check_choice(mode, SIGNAL_MODES, "mode")
    if paths is None:
        paths = _shortest_paths(g, u, v, cap)
    return max(path_signal(layout.positions, p, mode == "relative") for p in paths)


def task2_region(layout, path, eps=DEFAULT_MVEE_EPS, max_iter=DEFAULT_MVEE_MAX_ITER):
    """Minimum-volume ellipsoid around the path's node centers.

    Flat or straight paths are thickened to the layout's edge radius.
    """
    return mvee(layout.positions[list(path)], eps, max_iter, layout.edge_radius)


def task2_noise_elements(layout, g, path, region=None, inflate_nodes=False):
    if region is None:
        region = task2_region(layout, path)
    path_edges = {(min(a, b), max(a, b)) for a, b in zip(path, path[1:])}
    return _elements_in(layout, g, region, set(path), path_edges, inflate_nodes)


def task2_noise(layout, g, u, v, config=None, paths=None, **overrides):
    """Minimum over shortest u-v paths of the summed measure of non-path
    elements touching the path's ellipsoid."""
    config = _config(config, **overrides)
    u, v = check_pair(g, u, v)
    if paths is None:
        paths = _shortest_paths(g, u, v, config.path_cap)
    best = math.inf
    for path in paths:
        region = task2_region(layout, path, config.mvee_eps, config.mvee_max_iter)
        node_ids, edge_ids = task2_noise_elements(layout, g, path, region, config.inflate_nodes)
        best = min(best, _noise_sum(layout, g, region, node_ids, edge_ids, config))
    return best


# -- scoring ----------------------------------------------------------------

def score_pair(layout, g, u, v, task, config=None):
    """Signal and noise of one instance; the pair is used in the given order."""
    config = _config(config)
    _check_choice(task, TASKS, "task")
    if task == TASK_CN:
        return ComplexityScore(task1_signal(layout, g, u, v), task1_noise(layout, g, u, v, config), TASK_CN, "absolute")
    paths = _shortest_paths(g, u, v, config.path_cap)
    signal = task2_signal(layout, g, u, v, config.mode, paths=paths)
    noise = task2_noise(layout, g, u, v, config, paths=paths)
    return ComplexityScore(signal, noise, TASK_SP, config.mode, {"n_paths": len(paths)})


def score_candidate(layout, g, cand, config=None):
    return score_pair(layout, g, cand.u, cand.v, cand.task, config)


class InstanceComplexity(TransformerMixin, BaseEstimator):
    """Transformer from node pairs to ``[signal, noise, combined]`` rows.

    ``X`` is an ``(n, 2)`` integer array of node pairs; each row is ordered
    by degree before scoring. ``combined`` is NaN for noise-free instances.
    """

    def __init__(self, graph=None, layout=None, task=TASK_CN, mode="absolute", mu_node="diameter",
                 edge_noise="full", inflate_nodes=False, path_cap=DEFAULT_PATH_CAP):
        self.graph = graph
        self.layout = layout
        self.task = task
        self.mode = mode
        self.mu_node = mu_node
        self.edge_noise = edge_noise
        self.inflate_nodes = inflate_nodes
        self.path_cap = path_cap

    def fit(self, X=None, y=None):
        if self.graph is None or self.layout is None:
            raise ValueError("InstanceComplexity needs both graph and layout")
        if self.layout.node_count != self.graph.node_count:
            raise ValueError("layout does not cover every node of the graph")
        _check_choice(self.task, TASKS, "task")
        self.config_ = ComplexityConfig(self.mode, self.mu_node, self.edge_noise, self.inflate_nodes, self.path_cap)
        return self

    def transform(self, X):
        if not hasattr(self, "config_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("call fit before transform")
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError(f"expected an (n, 2) array of node pairs, got shape {X.shape}")
        out = np.empty((len(X), 3))
        for i, (a, b) in enumerate(X):
            u, v = order_pair(self.graph, int(a), int(b))
            s = score_pair(self.layout, self.graph, u, v, self.task, self.config_)
            out[i] = (s.signal, s.noise, np.nan if s.noise_free else s.combined)
        return out


COMPLEXITY_COLUMNS = [
    "instance_id", "graph_id", "task", "u", "v", "answer", "signal", "noise", "combined",
    "signal_mode", "seed", "config_hash", "mu_node_mode", "clip_mode",
]


def complexity_row(instance_id, graph_id, cand, score, config, seed, config_hash=""):
    return {
        "instance_id": instance_id,
        "graph_id": graph_id,
        "task": cand.task,
        "u": cand.u,
        "v": cand.v,
        "answer": cand.answer,
        "signal": repr(float(score.signal)),
        "noise": repr(float(score.noise)),
        "combined": "" if score.noise_free else repr(float(score.combined)),
        "signal_mode": score.mode,
        "seed": seed,
        "config_hash": config_hash,
        "mu_node_mode": config.mu_node,
        "clip_mode": config.edge_noise,
    }


def write_complexity_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=COMPLEXITY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_complexity_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("signal", "noise"):
            row[key] = float(row[key])
        row["combined"] = float(row["combined"]) if row["combined"] else None
        for key in ("u", "v", "answer"):
            row[key] = int(row[key])
    return rows
