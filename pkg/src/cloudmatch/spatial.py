"""Nearest-neighbor and radius queries over a static point set.

Results are defined by exhaustive-scan semantics: Euclidean distances
computed in float64, ties broken by lowest point index, radius boundaries
inclusive.  A scipy cKDTree accelerates the search; every answer is
refined against distances recomputed with the reference arithmetic, so
kd-tree internals (e.g. fused multiply-adds) can never change a result.
"""

import numpy as np
from scipy.spatial import cKDTree

from .core import PointCloud
from .errors import ValidationError

__all__ = ["SpatialIndex", "build"]

# relative pad applied to candidate radii; covers last-ulp discrepancies
# between kd-tree arithmetic and the reference float64 evaluation
_PAD = 1e-9


def _exact_dists(points, q):
    d = points - q
    return np.sqrt((d * d).sum(axis=1))


class SpatialIndex:
    """Immutable index over one point cloud; safe for concurrent queries."""

    def __init__(self, cloud):
        if isinstance(cloud, PointCloud):
            pts = cloud.points
        else:
            pts = np.asarray(cloud, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValidationError(f"index needs an (n, 3) point array, got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValidationError("index points contain non-finite coordinates")
        self._points = pts.copy()
        self._points.setflags(write=False)
        self._tree = cKDTree(self._points)

    def __len__(self):
        return self._points.shape[0]

    @property
    def points(self):
        return self._points

    def _refine_nearest(self, q, bound, exclude=None):
        # all points within the padded bound, by reference arithmetic
        cand = self._tree.query_ball_point(q, bound * (1.0 + _PAD))
        cand = np.sort(np.asarray(cand, dtype=np.intp))
        if exclude is not None:
            cand = cand[cand != exclude]
        d = _exact_dists(self._points[cand], q)
        k = int(np.argmin(d))
        return int(cand[k]), float(d[k])

    def nearest(self, q, exclude_self=None):
        """Index and distance of the nearest point to `q`.

        `exclude_self` removes one point index from the candidates (used
        for neighbor statistics of a point within its own cloud).
        """
        q = np.asarray(q, dtype=np.float64).reshape(3)
        n = len(self)
        if exclude_self is None:
            if n == 1:
                return 0, float(_exact_dists(self._points, q)[0])
            d0 = float(self._tree.query(q, k=1)[0])
            return self._refine_nearest(q, d0)
        exclude_self = int(exclude_self)
        if not 0 <= exclude_self < n:
            raise ValidationError(f"exclude_self out of range: {exclude_self}")
        if n < 2:
            raise ValidationError("exclusion empties the candidate set")
        d, i = self._tree.query(q, k=2)
        bound = float(d[1] if int(i[0]) == exclude_self else d[0])
        return self._refine_nearest(q, bound, exclude=exclude_self)

    def within_radius(self, q, r):
        """All (index, distance) with distance <= r, ascending (distance, index)."""
        q = np.asarray(q, dtype=np.float64).reshape(3)
        r = float(r)
        if r < 0:
            raise ValidationError(f"radius must be >= 0, got {r}")
        cand = self._tree.query_ball_point(q, r * (1.0 + _PAD))
        cand = np.asarray(sorted(cand), dtype=np.intp)
        if cand.size == 0:
            return []
        d = _exact_dists(self._points[cand], q)
        keep = d <= r
        cand, d = cand[keep], d[keep]
        order = np.lexsort((cand, d))
        return [(int(cand[k]), float(d[k])) for k in order]

    def nearest_all(self, queries):
        """Vectorized nearest() without exclusion for an (m, 3) query array.

        Returns (indices, distances) arrays.  Near-ties fall back to the
        refined per-query search so the lowest-index rule always holds.
        """
        qs = np.asarray(queries, dtype=np.float64)
        if qs.ndim != 2 or qs.shape[1] != 3:
            raise ValidationError(f"queries must have shape (m, 3), got {qs.shape}")
        m = qs.shape[0]
        n = len(self)
        if n == 1:
            diff = qs - self._points[0]
            return np.zeros(m, dtype=np.intp), np.sqrt((diff * diff).sum(axis=1))
        d2, i2 = self._tree.query(qs, k=2)
        idx = i2[:, 0].astype(np.intp)
        diff = qs - self._points[idx]
        dist = np.sqrt((diff * diff).sum(axis=1))
        ambiguous = np.flatnonzero(d2[:, 0] * (1.0 + _PAD) >= d2[:, 1])
        for k in ambiguous:
            idx[k], dist[k] = self._refine_nearest(qs[k], float(d2[k, 0]))
        return idx, dist

    def mean_nn_distance(self):
        """Mean distance of each point to its nearest other point.

        Returns 0.0 for a single-point cloud.
        """
        if len(self) == 1:
            return 0.0
        d2, _ = self._tree.query(self._points, k=2)
        return float(np.mean(d2[:, 1]))


def build(cloud):
    """Build a SpatialIndex over `cloud` (alias for the constructor)."""
    return SpatialIndex(cloud)
