"""Chamfer Distance between two point clouds.

The default follows the un-squared convention: the symmetric mean of
plain Euclidean nearest-neighbor distances,

    CD(S1, S2) = 1/2 * ( mean_x min_y ||x - y||  +  mean_y min_x ||x - y|| ).

Many codebases average squared distances instead; pass squared=True for
that variant.  The two are not interchangeable, so the choice is explicit.
"""

import numpy as np

from .core import PointCloud
from .errors import ValidationError
from .spatial import SpatialIndex

__all__ = ["chamfer_distance"]


def _as_pts(cloud, name):
    if isinstance(cloud, PointCloud):
        return cloud.points
    pts = np.asarray(cloud, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
        raise ValidationError(f"{name} must be a nonempty (n, 3) cloud, got {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValidationError(f"{name} contains non-finite coordinates")
    return pts


def chamfer_distance(s1, s2, squared=False):
    """Chamfer Distance between clouds `s1` and `s2` (sizes may differ)."""
    p1 = _as_pts(s1, "s1")
    p2 = _as_pts(s2, "s2")
    _, d12 = SpatialIndex(p2).nearest_all(p1)
    _, d21 = SpatialIndex(p1).nearest_all(p2)
    if squared:
        d12 = d12 * d12
        d21 = d21 * d21
    return 0.5 * (float(np.mean(d12)) + float(np.mean(d21)))
