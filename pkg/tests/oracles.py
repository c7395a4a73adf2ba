"""Independent reference implementations used only by the tests.

None of these import the package's numerical code; they re-derive each
quantity by brute force, dense sampling or a generic optimizer.
"""
import itertools
import math

import numpy as np
from scipy.optimize import minimize


def naive_stress_best(distance_matrix, ideal, restarts=20, seed=123):
    """Best weighted stress over L-BFGS runs from random starts."""
    D = np.asarray(distance_matrix, dtype=float) * ideal
    n = len(D)
    iu = np.triu_indices(n, 1)
    d = D[iu]
    w = d**-2.0

    def f(x):
        X = x.reshape(n, 3)
        diff = X[iu[0]] - X[iu[1]]
        r = np.linalg.norm(diff, axis=1)
        res = r - d
        coef = 2 * w * res / np.where(r > 0, r, 1)
        grad = np.zeros((n, 3))
        c = coef[:, None] * diff
        np.add.at(grad, iu[0], c)
        np.add.at(grad, iu[1], -c)
        return float(np.sum(w * res**2)), grad.ravel()

    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(restarts):
        r = minimize(f, rng.uniform(size=n * 3), jac=True, method="L-BFGS-B",
                     options=dict(maxiter=5000, gtol=1e-12, ftol=1e-15))
        best = min(best, r.fun)
    return best


def direct_task1_signal(pos, edges, u, v):
    """Sum of squared detours over common neighbors, with plain loops."""
    nbrs = {i: set() for i in range(len(pos))}
    for a, b in edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    dist = lambda a, b: math.sqrt(sum((pos[a][k] - pos[b][k]) ** 2 for k in range(3)))
    total = 0.0
    for w in sorted(nbrs[u] & nbrs[v]):
        total += (dist(w, u) + dist(w, v) - dist(u, v)) ** 2
    return total


def direct_path_signal(pts):
    """Angle-weighted path signal from raw coordinates using dot products."""
    pts = [np.asarray(p, dtype=float) for p in pts]
    end = pts[-1]
    total = 0.0
    for i, w in enumerate(pts):
        if 0 < i < len(pts) - 1:
            a, b = pts[i - 1] - w, pts[i + 1] - w
            cos_t = np.clip(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)), -1, 1)
            theta = math.acos(cos_t)
        else:
            theta = 0.0
        total += 0.5 * (1 - math.cos(math.pi - theta)) * float(np.linalg.norm(w - end))
    return total


def sampled_segment_hits(p0, p1, inside, samples=10_000):
    """Whether any of ``samples`` evenly spaced points on the segment is inside."""
    t = np.linspace(0.0, 1.0, samples)[:, None]
    pts = p0 + t * (p1 - p0)
    return bool(np.any(inside(pts)))


def sampled_clipped_length(p0, p1, inside, samples=100_000):
    """Midpoint-rule length of the part of a segment inside a region."""
    t = (np.arange(samples) + 0.5) / samples
    pts = p0 + t[:, None] * (p1 - p0)
    return float(np.linalg.norm(p1 - p0) * inside(pts).mean())


# closed regions: a point built to sit on the boundary counts as inside despite rounding
BOUNDARY_RTOL = 1e-12


def sphere_inside(center, radius):
    return lambda pts: np.sum((pts - center) ** 2, axis=1) <= radius**2 * (1 + BOUNDARY_RTOL)


def quadric_inside(center, A):
    return lambda pts: np.einsum("ij,jk,ik->i", pts - center, A, pts - center) <= 1.0 + BOUNDARY_RTOL


def census(pos, edges, inside, exclude_nodes, exclude_edges, samples=10_000):
    """Brute-force noise element sets: nodes by center, edges by dense sampling."""
    nodes = {i for i in range(len(pos)) if i not in exclude_nodes and inside(pos[i][None, :])[0]}
    hit_edges = set()
    for a, b in edges:
        e = (min(a, b), max(a, b))
        if e in exclude_edges:
            continue
        if sampled_segment_hits(pos[a], pos[b], inside, samples):
            hit_edges.add(e)
    return nodes, hit_edges


_LOGDET_PROBLEMS = {}


def _logdet_problem(n_points):
    import cvxpy as cp

    if n_points not in _LOGDET_PROBLEMS:
        P = cp.Parameter((n_points, 3))
        B = cp.Variable((3, 3), PSD=True)
        b = cp.Variable(3)
        cons = [cp.norm(B @ P[i] + b) <= 1 for i in range(n_points)]
        _LOGDET_PROBLEMS[n_points] = (cp.Problem(cp.Maximize(cp.log_det(B)), cons), P, B)
    return _LOGDET_PROBLEMS[n_points]


def mvee_logdet_volume(points):
    """Volume of the minimum-volume enclosing ellipsoid by convex optimization.

    Solves max log det(B) s.t. ||B x_i + b|| <= 1, the ellipsoid being
    {x : ||B x + b|| <= 1} with volume 4/3 pi / det(B).
    """
    pts = np.asarray(points, dtype=float)
    prob, P, B = _logdet_problem(len(pts))
    P.value = pts
    prob.solve(solver="CLARABEL")
    return 4.0 / 3.0 * math.pi / float(np.linalg.det(B.value))


def naive_candidates(adj, task):
    """Nested-loop recount of candidate pairs and answers."""
    n = len(adj)
    out = {}
    if task == "CN":
        for u, v in itertools.combinations(range(n), 2):
            c = sum(1 for w in range(n) if adj[u][w] and adj[v][w])
            if c >= 1:
                out[(u, v)] = c
        return out
    for s in range(n):
        dist = {s: 0}
        frontier = [s]
        while frontier:
            nxt = []
            for x in frontier:
                for y in range(n):
                    if adj[x][y] and y not in dist:
                        dist[y] = dist[x] + 1
                        nxt.append(y)
            frontier = nxt
        for t, d in dist.items():
            if t > s:
                out[(s, t)] = d
    return out
