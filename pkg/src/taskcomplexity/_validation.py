"""Input validation helpers shared by the estimators and free functions."""
import numbers

import numpy as np
from sklearn.utils import check_array


def check_node(g, node, name="node"):
    if isinstance(node, (bool, np.bool_)) or not isinstance(node, numbers.Integral):
        raise TypeError(f"{name} must be an integer node id, got {node!r}")
    node = int(node)
    if not 0 <= node < g.node_count:
        raise ValueError(f"{name}={node} is not a node of a graph with {g.node_count} nodes")
    return node


def check_pair(g, u, v):
    u = check_node(g, u, "u")
    v = check_node(g, v, "v")
    if u == v:
        raise ValueError(f"selected nodes must differ, got u = v = {u}")
    return u, v


def check_points(points, min_points=1):
    """Return ``points`` as a finite float array of shape (n, 3)."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1 and points.size == 3:
        points = points[None, :]
    points = check_array(points, ensure_min_samples=min_points)
    if points.shape[1] != 3:
        raise ValueError(f"expected 3-D points, got shape {points.shape}")
    return points


def check_point(p, name="point"):
    p = np.asarray(p, dtype=float)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise ValueError(f"{name} must be a finite 3-vector, got {p!r}")
    return p


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite number, got {value!r}")
    if value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be {bound}, got {value!r}")
    return float(value)


def check_count(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
