"""Geometric primitives behind the regions of inspection.

Regions are closed quadrics: a sphere ``S(o, r)`` or an ellipsoid
``{x : (x - c)^T A (x - c) <= 1}``. Both expose vectorised membership,
segment-intersection and clipped-length queries so the noise measures can
test every element of a layout in one pass.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_count, check_point, check_points, check_positive

logger = logging.getLogger(__name__)

DEFAULT_MVEE_EPS = 1e-3
DEFAULT_MVEE_MAX_ITER = 10_000
DEFAULT_MIN_THICKNESS = 0.002
# points constructed to lie on a region's boundary must not drop out by rounding
BOUNDARY_RTOL = 1e-12


def _segment_form_minimum(p0, p1, center, form):
    """Minimum over t in [0, 1] of q(p0 + t (p1 - p0)) for q(x) = (x-c)^T A (x-c).

    ``p0``/``p1`` are (m, 3) arrays; returns (m,) minima.
    """
    e = p0 - center
    d = p1 - p0
    Ad = d @ form
    dAd = np.einsum("ij,ij->i", Ad, d)
    eAd = np.einsum("ij,ij->i", e @ form, d)
    eAe = np.einsum("ij,ij->i", e @ form, e)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dAd > 0, -eAd / dAd, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return eAe + 2.0 * t * eAd + t * t * dAd


def _segment_clipped_lengths(p0, p1, center, form):
    e = p0 - center
    d = p1 - p0
    a = np.einsum("ij,ij->i", d @ form, d)
    b = np.einsum("ij,ij->i", e @ form, d)
    c = np.einsum("ij,ij->i", e @ form, e) - 1.0
    length = np.linalg.norm(d, axis=1)
    out = np.zeros(len(p0))
    ok = a > 0
    disc = b * b - a * c
    ok &= disc > 0
    if np.any(ok):
        root = np.sqrt(disc[ok])
        t1 = (-b[ok] - root) / a[ok]
        t2 = (-b[ok] + root) / a[ok]
        lo = np.clip(t1, 0.0, 1.0)
        hi = np.clip(t2, 0.0, 1.0)
        out[ok] = np.maximum(hi - lo, 0.0) * length[ok]
    return out


def _as_segments(p0, p1):
    p0 = np.atleast_2d(np.asarray(p0, dtype=float))
    p1 = np.atleast_2d(np.asarray(p1, dtype=float))
    if p0.shape != p1.shape or p0.shape[-1] != 3:
        raise ValueError(f"segment endpoint arrays must both be (m, 3), got {p0.shape} and {p1.shape}")
    return p0, p1


class _QuadricRegion:
    """Shared vectorised queries; subclasses provide ``center`` and ``form``."""

    def quadratic_form(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float)) - self.center
        return np.einsum("ij,jk,ik->i", x, self.form, x)

    def contains(self, points):
        return self.quadratic_form(points) <= 1.0 + BOUNDARY_RTOL

    def segments_intersect(self, p0, p1):
        p0, p1 = _as_segments(p0, p1)
        return _segment_form_minimum(p0, p1, self.center, self.form) <= 1.0 + BOUNDARY_RTOL

    def clipped_lengths(self, p0, p1):
        p0, p1 = _as_segments(p0, p1)
        return _segment_clipped_lengths(p0, p1, self.center, self.form)

    def inflated(self, margin):
        """Region grown by ``margin`` along every principal axis."""
        raise NotImplementedError


@dataclass(frozen=True)
class Sphere3(_QuadricRegion):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", check_point(self.center, "center"))
        check_positive(self.radius, "radius", strict=False)

    @property
    def form(self):
        if self.radius == 0:
            # a point region: only the center itself satisfies q <= 1
            return np.eye(3) * np.inf
        return np.eye(3) / self.radius**2

    def quadratic_form(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float)) - self.center
        sq = np.einsum("ij,ij->i", x, x)
        if self.radius == 0:
            return np.where(sq == 0, 0.0, np.inf)
        return sq / self.radius**2

    def segments_intersect(self, p0, p1):
        p0, p1 = _as_segments(p0, p1)
        return segment_point_distance(p0, p1, self.center) <= self.radius * (1.0 + BOUNDARY_RTOL)

    def clipped_lengths(self, p0, p1):
        p0, p1 = _as_segments(p0, p1)
        if self.radius == 0:
            return np.zeros(len(p0))
        return _segment_clipped_lengths(p0, p1, self.center, self.form)

    def inflated(self, margin):
        return Sphere3(self.center, self.radius + margin)

    @property
    def volume(self):
        return 4.0 / 3.0 * math.pi * self.radius**3


@dataclass(frozen=True)
class Ellipsoid3(_QuadricRegion):
    """Ellipsoid ``{x : (x - center)^T form (x - center) <= 1}``.

    ``form`` is symmetric positive definite with units of metres^-2.
    """

    center: np.ndarray
    form: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", check_point(self.center, "center"))
        A = np.asarray(self.form, dtype=float)
        if A.shape != (3, 3) or not np.all(np.isfinite(A)):
            raise ValueError("form must be a finite 3x3 matrix")
        if not np.allclose(A, A.T, rtol=0, atol=1e-9 * max(1.0, np.abs(A).max())):
            raise ValueError("form must be symmetric")
        A = 0.5 * (A + A.T)
        if np.linalg.eigvalsh(A).min() <= 0:
            raise ValueError("form must be positive definite")
        object.__setattr__(self, "form", A)

    @classmethod
    def from_axes(cls, center, axes, semi_axes):
        """Build from orthonormal axis directions (columns) and semi-axis lengths."""
        axes = np.asarray(axes, dtype=float)
        semi = np.asarray(semi_axes, dtype=float)
        return cls(center, (axes / semi**2) @ axes.T)

    @property
    def semi_axes(self):
        """Semi-axis lengths in ascending order."""
        return np.sort(1.0 / np.sqrt(np.linalg.eigvalsh(self.form)))

    @property
    def volume(self):
        return 4.0 / 3.0 * math.pi / math.sqrt(np.linalg.det(self.form))

    def inflated(self, margin):
        evals, evecs = np.linalg.eigh(self.form)
        return Ellipsoid3.from_axes(self.center, evecs, 1.0 / np.sqrt(evals) + margin)

    def to_json(self):
        return {"center": self.center.tolist(), "A_rows": self.form.tolist()}

    @classmethod
    def from_json(cls, doc):
        return cls(np.array(doc["center"], dtype=float), np.array(doc["A_rows"], dtype=float))


@dataclass(frozen=True)
class EdgeSegment:
    start: np.ndarray
    end: np.ndarray

    @property
    def length(self):
        return float(np.linalg.norm(np.asarray(self.end, float) - np.asarray(self.start, float)))


@dataclass(frozen=True)
class NodeSphere:
    center: np.ndarray
    radius: float = 0.0


def segment_point_distance(p0, p1, point):
    """Euclidean distance from ``point`` to each segment ``p0[i]``-``p1[i]``."""
    d = p1 - p0
    e = point - p0
    dd = np.einsum("ij,ij->i", d, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dd > 0, np.einsum("ij,ij->i", e, d) / dd, 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = p0 + t[:, None] * d
    return np.linalg.norm(point - closest, axis=1)


def node_angle(prev, w, nxt):
    """Angle at ``w`` between ``prev - w`` and ``nxt - w``, in degrees within [0, 180]."""
    prev, w, nxt = (check_point(p) for p in (prev, w, nxt))
    a = prev - w
    b = nxt - w
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("node angle is undefined for a zero-length edge")
    return math.degrees(math.atan2(np.linalg.norm(np.cross(a, b)), float(a @ b)))


def element_in_region(element, region, inflate_nodes=False):
    """Whether a node or edge touches the region.

    Nodes are tested by their center point. With ``inflate_nodes`` the region
    is grown by the node radius first, which approximates testing the whole
    node sphere.
    """
    if isinstance(element, EdgeSegment):
        return bool(region.segments_intersect(element.start, element.end)[0])
    if isinstance(element, NodeSphere):
        if inflate_nodes and element.radius > 0:
            region = region.inflated(element.radius)
        return bool(region.contains(element.center)[0])
    raise TypeError(f"expected EdgeSegment or NodeSphere, got {type(element).__name__}")


def clipped_length(segment, region):
    """Length of the part of ``segment`` inside ``region``."""
    return float(region.clipped_lengths(segment.start, segment.end)[0])


def _khachiyan(points, eps, max_iter):
    """Todd-Yildirim variant of Khachiyan's algorithm with away steps.

    ``points`` is (n, d) with affinely independent rows spanning R^d.
    Returns (center, form, n_iter, converged).
    """
    n, d = points.shape
    Q = np.vstack([points.T, np.ones(n)])
    u = np.full(n, 1.0 / n)
    dp1 = d + 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        X = (Q * u) @ Q.T
        M = np.einsum("ij,ji->i", Q.T, np.linalg.solve(X, Q))
        j = int(np.argmax(M))
        support = u > 0
        k = int(np.flatnonzero(support)[np.argmin(M[support])])
        eps_plus = M[j] / dp1 - 1.0
        eps_minus = 1.0 - M[k] / dp1
        if max(eps_plus, eps_minus) <= eps:
            converged = True
            break
        if eps_plus >= eps_minus:
            alpha = (M[j] - dp1) / (dp1 * (M[j] - 1.0))
            u *= 1.0 - alpha
            u[j] += alpha
        else:
            cap = u[k] / (1.0 - u[k])
            beta = cap if M[k] - 1.0 <= 1e-15 else min((dp1 - M[k]) / (dp1 * (M[k] - 1.0)), cap)
            u *= 1.0 + beta
            u[k] -= beta
            u[k] = max(u[k], 0.0)
        u /= u.sum()
    center = u @ points
    scatter = (points.T * u) @ points - np.outer(center, center)
    form = np.linalg.inv(scatter) / d
    return center, 0.5 * (form + form.T), it, converged


def mvee(points, eps=DEFAULT_MVEE_EPS, max_iter=DEFAULT_MVEE_MAX_ITER, min_thickness=DEFAULT_MIN_THICKNESS):
    """Approximate minimum-volume enclosing ellipsoid of 3-D points.

    Parameters
    ----------
    points : (n, 3) array_like
        At least one point.
    eps : float
        Relative volume tolerance. The iteration stops once its optimality
        gap is below ``eps / (k + 1)`` for a k-dimensional point set, which
        keeps the rescaled volume within about ``1 + eps`` of the optimum.
    max_iter : int
        Iteration cap; on exhaustion a warning is logged and the current
        iterate is returned (still scaled to contain every point).
    min_thickness : float
        Lower bound on every semi-axis. Points spanning fewer than three
        dimensions (one point, a straight path, a planar path) get their
        missing axes set to this value.

    Returns
    -------
    Ellipsoid3
    """
    P = check_points(points)
    eps = check_positive(eps, "eps")
    max_iter = check_count(max_iter, "max_iter")
    min_thickness = check_positive(min_thickness, "min_thickness")

    origin = P.mean(axis=0)
    X = P - origin
    _, sv, vt = np.linalg.svd(X, full_matrices=True)
    scale = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > 1e-10 * max(scale, min_thickness)))
    basis = vt.T  # columns: principal directions

    semi = np.full(3, min_thickness)
    center = origin.copy()
    axes = basis
    if rank > 0:
        sub = X @ basis[:, :rank]
        c_sub, form_sub, n_iter, converged = _khachiyan(sub, eps / (rank + 1), max_iter)
        if not converged:
            logger.warning("mvee: no convergence to eps=%g within %d iterations", eps, max_iter)
        q = np.einsum("ij,jk,ik->i", sub - c_sub, form_sub, sub - c_sub)
        # the farthest point sits on the boundary; the margin absorbs rounding
        form_sub /= q.max() * (1.0 + 1e-10)
        evals, evecs = np.linalg.eigh(form_sub)
        center = origin + basis[:, :rank] @ c_sub
        axes = basis.copy()
        axes[:, :rank] = basis[:, :rank] @ evecs
        semi[:rank] = 1.0 / np.sqrt(evals)
    semi = np.maximum(semi, min_thickness)
    return Ellipsoid3.from_axes(center, axes, semi)


class MinimumVolumeEllipsoid(BaseEstimator):
    """Estimator wrapper around :func:`mvee`.

    ``predict`` follows the outlier-detector convention: +1 for points inside
    the fitted ellipsoid, -1 outside.
    """

    def __init__(self, eps=DEFAULT_MVEE_EPS, max_iter=DEFAULT_MVEE_MAX_ITER, min_thickness=DEFAULT_MIN_THICKNESS):
        self.eps = eps
        self.max_iter = max_iter
        self.min_thickness = min_thickness

    def fit(self, X, y=None):
        self.ellipsoid_ = mvee(X, self.eps, self.max_iter, self.min_thickness)
        self.center_ = self.ellipsoid_.center
        self.form_ = self.ellipsoid_.form
        return self

    def _check_fitted(self):
        if not hasattr(self, "ellipsoid_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("MinimumVolumeEllipsoid is not fitted yet")

    def quadratic_form(self, X):
        self._check_fitted()
        return self.ellipsoid_.quadratic_form(check_points(X))

    def decision_function(self, X):
        return 1.0 - self.quadratic_form(X)

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, 1, -1)
