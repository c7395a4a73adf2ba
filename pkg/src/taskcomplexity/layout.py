"""3-D node-link layouts by weighted stress majorization."""
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist, squareform
from sklearn.base import BaseEstimator
from sklearn.utils import check_array

from ._validation import check_count, check_positive
from .graph import Graph, UnreachableError

logger = logging.getLogger(__name__)

DEFAULT_NODE_RADIUS = 0.01
DEFAULT_EDGE_RADIUS = 0.002
DEFAULT_CUBE_SIDE = 1.0
DEFAULT_BARYCENTER_HEIGHT = 1.45
FULL_REFINE_NODES = 64


@dataclass(frozen=True)
class Layout3D:
    """Node positions in metres plus the visual sizes needed by the measures.

    ``bounds`` is the axis-aligned view box as a ``(2, 3)`` array of
    ``(lower, upper)`` corners.
    """

    positions: np.ndarray
    node_radius: float = DEFAULT_NODE_RADIUS
    edge_radius: float = DEFAULT_EDGE_RADIUS
    bounds: np.ndarray = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pos)):
            raise ValueError("layout positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        check_positive(self.node_radius, "node_radius")
        check_positive(self.edge_radius, "edge_radius")
        bounds = self.bounds
        if bounds is None:
            bounds = _cube_around(pos, _max_extent(pos))
        bounds = np.array(bounds, dtype=float).reshape(2, 3)
        bounds.setflags(write=False)
        object.__setattr__(self, "bounds", bounds)

    @property
    def node_count(self):
        return len(self.positions)

    def scaled(self, factor):
        """Uniformly scaled copy (positions and view box; element sizes unchanged)."""
        return replace(self, positions=self.positions * factor, bounds=self.bounds * factor)

    def to_json(self):
        meta = {k: v for k, v in self.meta.items() if k != "stress_history"}
        meta.update(
            node_radius=self.node_radius,
            edge_radius=self.edge_radius,
            bounds=self.bounds.tolist(),
        )
        return {"meta": meta, "positions": self.positions.tolist()}

    @classmethod
    def from_json(cls, doc):
        meta = dict(doc.get("meta", {}))
        node_radius = meta.pop("node_radius", DEFAULT_NODE_RADIUS)
        edge_radius = meta.pop("edge_radius", DEFAULT_EDGE_RADIUS)
        bounds = meta.pop("bounds", None)
        return cls(np.array(doc["positions"], dtype=float), node_radius, edge_radius, bounds, meta)


def write_layout(layout, path):
    Path(path).write_text(json.dumps(layout.to_json(), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def read_layout(path):
    return Layout3D.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _max_extent(pos):
    return float(np.ptp(pos, axis=0).max()) if len(pos) else 0.0


def _cube_around(pos, side):
    mid = 0.5 * (pos.min(axis=0) + pos.max(axis=0)) if len(pos) else np.zeros(3)
    return np.vstack([mid - side / 2.0, mid + side / 2.0])


def stress(positions, target, weights):
    """Weighted stress ``sum_{i<j} w_ij (|p_i - p_j| - d_ij)^2``."""
    dx = pdist(positions)
    t = squareform(target, checks=False)
    w = squareform(weights, checks=False)
    return float(np.sum(w * (dx - t) ** 2))


def _smacof(target, weights, init, max_iter, tol):
    """Guttman-transform iterations; returns (X, stress, n_iter, history)."""
    n = len(target)
    V = -weights.copy()
    np.fill_diagonal(V, weights.sum(axis=1))
    ones = np.full((n, n), 1.0 / n)
    V_pinv = np.linalg.inv(V + ones) - ones

    X = init.copy()
    sigma = stress(X, target, weights)
    history = [sigma]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        dx = squareform(pdist(X))
        with np.errstate(divide="ignore", invalid="ignore"):
            B = np.where(dx > 0, -weights * target / dx, 0.0)
        np.fill_diagonal(B, 0.0)
        np.fill_diagonal(B, -B.sum(axis=1))
        X = V_pinv @ (B @ X)
        new_sigma = stress(X, target, weights)
        history.append(new_sigma)
        done = sigma == 0 or (sigma - new_sigma) / sigma < tol
        sigma = new_sigma
        if done:
            break
    return X, sigma, n_iter, history


def _fit_stress(g, seed, max_iter, tol, n_init, cube_side, screen_iter=30, n_refine=4):
    """Multi-start SMACOF.

    All ``n_init`` random starts run ``screen_iter`` iterations; the
    ``n_refine`` lowest-stress ones continue to convergence. Graphs with at
    most ``FULL_REFINE_NODES`` nodes skip screening and refine every start,
    since early stress is a poor predictor of the final basin there. When the winner
    is nearly flat (a trailing principal axis under a quarter of the leading
    one), its projections onto the leading one or two axes are run as extra
    starts, since SMACOF converges only sublinearly onto collinear or planar
    optima. Returns (X, stress, n_iter, history, ideal) of the best run.
    """
    if not g.is_connected():
        raise UnreachableError("stress layout needs a connected graph")
    n = g.node_count
    if n <= 1:
        return np.zeros((n, 3)), 0.0, 0, [0.0], cube_side
    ideal = cube_side / g.diameter
    target = g.distance_matrix * ideal
    weights = np.zeros_like(target)
    off = ~np.eye(n, dtype=bool)
    weights[off] = target[off] ** -2.0

    screened = []
    for child in np.random.SeedSequence(seed).spawn(n_init):
        init = np.random.default_rng(child).uniform(0.0, 1.0, size=(n, 3))
        screened.append(_smacof(target, weights, init, min(screen_iter, max_iter), tol))
    screened.sort(key=lambda r: r[1])
    if n <= FULL_REFINE_NODES:
        n_refine = n_init

    runs = []
    for X, sigma, n_iter, history in screened[:n_refine]:
        if n_iter < min(screen_iter, max_iter):
            runs.append((X, sigma, n_iter, history))
            continue
        X, sigma, more, tail = _smacof(target, weights, X, max_iter - n_iter, tol) if max_iter > n_iter else (X, sigma, 0, [sigma])
        runs.append((X, sigma, n_iter + more, history + tail[1:]))
    best = min(runs, key=lambda r: r[1])

    X = best[0]
    centered = X - X.mean(axis=0)
    U, sv, Vt = np.linalg.svd(centered, full_matrices=False)
    for k in (2, 1):
        if k < len(sv) and sv[0] > 0 and sv[k] < 0.25 * sv[0]:
            flat = (U[:, :k] * sv[:k]) @ Vt[:k]
            run = _smacof(target, weights, flat, max_iter, tol)
            if run[1] < best[1]:
                best = run
    X, sigma, n_iter, history = best
    return X, sigma, n_iter, history, ideal


def stress_layout(
    g,
    seed=0,
    max_iter=3000,
    tol=1e-7,
    n_init=32,
    cube_side=DEFAULT_CUBE_SIDE,
    node_radius=DEFAULT_NODE_RADIUS,
    edge_radius=DEFAULT_EDGE_RADIUS,
):
    """Lay out ``g`` in 3-D by minimizing weighted stress.

    Target distances are hop counts times an ideal edge length of
    ``cube_side / diameter``; weights are the inverse squared targets. Each of
    ``n_init`` uniform random starts (seeded from ``seed``) runs SMACOF until
    the relative stress decrease drops below ``tol`` or ``max_iter`` is hit;
    the lowest-stress run wins.
    """
    max_iter = check_count(max_iter, "max_iter")
    tol = check_positive(tol, "tol")
    n_init = check_count(n_init, "n_init")
    X, sigma, n_iter, history, ideal = _fit_stress(g, seed, max_iter, tol, n_init, cube_side)
    meta = {
        "seed": int(seed),
        "stress": sigma,
        "iterations": n_iter,
        "ideal_edge_length": ideal,
        "ideal_edge_length_rule": "cube_side / graph diameter",
        "n_init": n_init,
        "stress_history": history,
    }
    return Layout3D(X, node_radius, edge_radius, None, meta)


def normalize_to_view(layout, cube_side=DEFAULT_CUBE_SIDE, barycenter_height=DEFAULT_BARYCENTER_HEIGHT):
    """Scale uniformly so the largest extent is ``cube_side`` and move the
    barycenter to ``(0, barycenter_height, 0)`` (Y is up).

    The returned view box is the cube of side ``cube_side`` centered on the
    tight bounding box, so it always contains every node position.
    """
    cube_side = check_positive(cube_side, "cube_side")
    pos = layout.positions
    extent = _max_extent(pos)
    if extent == 0:
        raise ValueError("cannot normalize a layout whose nodes all coincide")
    scale = cube_side / extent
    out = (pos - pos.mean(axis=0)) * scale + np.array([0.0, barycenter_height, 0.0])
    meta = dict(layout.meta, normalized=True, cube_side=cube_side, barycenter_height=barycenter_height)
    meta["scale"] = meta.get("scale", 1.0) * scale
    return Layout3D(out, layout.node_radius, layout.edge_radius, _cube_around(out, cube_side), meta)


class StressLayout(BaseEstimator):
    """3-D stress-majorization embedding of a graph.

    ``fit`` accepts a :class:`~taskcomplexity.graph.Graph` or a square
    adjacency matrix (dense or sparse; nonzero entries are edges).
    """

    def __init__(self, max_iter=3000, tol=1e-7, n_init=32, cube_side=DEFAULT_CUBE_SIDE, random_state=0):
        self.max_iter = max_iter
        self.tol = tol
        self.n_init = n_init
        self.cube_side = cube_side
        self.random_state = random_state

    @staticmethod
    def _as_graph(X):
        if isinstance(X, Graph):
            return X
        A = check_array(X, accept_sparse="csr")
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got {A.shape}")
        rows, cols = A.nonzero()
        edges = {(int(min(a, b)), int(max(a, b))) for a, b in zip(rows, cols) if a != b}
        return Graph(A.shape[0], frozenset(edges))

    def fit(self, X, y=None):
        g = self._as_graph(X)
        X_, sigma, n_iter, history, ideal = _fit_stress(
            g,
            self.random_state,
            check_count(self.max_iter, "max_iter"),
            check_positive(self.tol, "tol"),
            check_count(self.n_init, "n_init"),
            self.cube_side,
        )
        self.embedding_ = X_
        self.stress_ = sigma
        self.n_iter_ = n_iter
        self.stress_history_ = np.asarray(history)
        self.ideal_edge_length_ = ideal
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_
