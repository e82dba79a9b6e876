"""Subset sampling: minimum density sampling and two baselines.

Minimum density sampling (MDS) greedily picks the point whose summed
Gaussian weight to the already-selected set is smallest, so the selection
fills sparse regions first and the result has a near-uniform global
density.  Farthest point sampling (FPS) maximizes the minimum distance to
the selected set; Poisson disk sampling (PDS) dart-throws with a minimum
separation radius tuned by bisection to hit the requested count.

All samplers return distinct indices into the source cloud, in selection
order, and never touch the point/label pairing of labeled clouds.
"""

from dataclasses import dataclass

import numpy as np

from .core import PointCloud, _check_seed
from .errors import ValidationError
from .spatial import SpatialIndex

__all__ = [
    "MdsConfig",
    "SampleResult",
    "mds_sample",
    "fps_sample",
    "pds_sample",
    "density_profile",
    "default_sigma",
]


@dataclass(frozen=True)
class MdsConfig:
    """sigma is the Gaussian neighborhood scale; None picks 2x the cloud's
    mean nearest-neighbor distance.  first_point breaks the degenerate
    first step (every density is 0 over the empty set)."""

    sigma: float | None = None
    first_point: int = 0

    def __post_init__(self):
        if self.sigma is not None and not self.sigma > 0:
            raise ValidationError(f"sigma must be > 0, got {self.sigma}")
        if self.first_point < 0:
            raise ValidationError(f"first_point must be >= 0, got {self.first_point}")


@dataclass(frozen=True)
class SampleResult:
    """Selected point indices, in selection order.

    radius is the final separation radius for PDS results, None otherwise.
    """

    indices: np.ndarray
    radius: float | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp)
        if idx.ndim != 1 or idx.size < 1:
            raise ValidationError("indices must be a nonempty 1-d sequence")
        if np.unique(idx).size != idx.size:
            raise ValidationError("indices must be distinct")
        idx = idx.copy()
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return self.indices.size


def _as_pts(cloud):
    if isinstance(cloud, PointCloud):
        return cloud.points
    pts = np.asarray(cloud, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
        raise ValidationError(f"cloud must be a nonempty (n, 3) array, got {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValidationError("cloud contains non-finite coordinates")
    return pts


def _check_m(m, n):
    m = int(m)
    if not 1 <= m <= n:
        raise ValidationError(f"sample size must satisfy 1 <= m <= {n}, got {m}")
    return m


def default_sigma(cloud):
    """2x the mean nearest-neighbor distance; 1.0 for degenerate clouds."""
    pts = _as_pts(cloud)
    mean_nn = SpatialIndex(pts).mean_nn_distance()
    return 2.0 * mean_nn if mean_nn > 0 else 1.0


def mds_sample(cloud, m, cfg=None):
    """Greedy minimum density sampling.

    Step i picks the unselected x minimizing
    sum_{p in selected} exp(-||x - p||^2 / (2 sigma^2)), lowest index on
    ties.  Densities update incrementally, one Gaussian term per step.
    """
    pts = _as_pts(cloud)
    n = pts.shape[0]
    m = _check_m(m, n)
    cfg = cfg or MdsConfig()
    if cfg.first_point >= n:
        raise ValidationError(f"first_point {cfg.first_point} out of range for n={n}")
    sigma = cfg.sigma if cfg.sigma is not None else default_sigma(pts)
    inv = -1.0 / (2.0 * sigma * sigma)

    selected = np.empty(m, dtype=np.intp)
    selected[0] = cfg.first_point
    density = np.zeros(n)
    taken = np.zeros(n, dtype=bool)
    taken[cfg.first_point] = True
    for i in range(1, m):
        diff = pts - pts[selected[i - 1]]
        density += np.exp(inv * (diff * diff).sum(axis=1))
        nxt = int(np.argmin(np.where(taken, np.inf, density)))
        selected[i] = nxt
        taken[nxt] = True
    return SampleResult(indices=selected)


def fps_sample(cloud, m, first_point=0):
    """Farthest point sampling: maximize distance to the selected set."""
    pts = _as_pts(cloud)
    n = pts.shape[0]
    m = _check_m(m, n)
    first_point = int(first_point)
    if not 0 <= first_point < n:
        raise ValidationError(f"first_point {first_point} out of range for n={n}")

    selected = np.empty(m, dtype=np.intp)
    selected[0] = first_point
    taken = np.zeros(n, dtype=bool)
    taken[first_point] = True
    diff = pts - pts[first_point]
    min_d2 = (diff * diff).sum(axis=1)
    for i in range(1, m):
        nxt = int(np.argmax(np.where(taken, -np.inf, min_d2)))
        selected[i] = nxt
        taken[nxt] = True
        diff = pts - pts[nxt]
        np.minimum(min_d2, (diff * diff).sum(axis=1), out=min_d2)
    return SampleResult(indices=selected)


def _dart_throw(pts, order, r, accepted=None, stop_at=None):
    """Visit points in `order`, accepting those >= r from every accepted point.

    Continues from an existing acceptance list when given; stops early at
    `stop_at` accepted points.  Returns the list of accepted indices in
    acceptance order.
    """
    accepted = list(accepted) if accepted else []
    acc_pts = np.empty((len(order), 3))
    acc_pts[: len(accepted)] = pts[accepted]
    seen = set(accepted)
    r2 = r * r
    for i in order:
        if int(i) in seen:
            continue
        k = len(accepted)
        if k and (((acc_pts[:k] - pts[i]) ** 2).sum(axis=1) < r2).any():
            continue
        acc_pts[k] = pts[i]
        accepted.append(int(i))
        if stop_at is not None and len(accepted) == stop_at:
            break
    return accepted


def pds_sample(cloud, m, seed=0):
    """Poisson disk sampling on the given points by dart throwing.

    Points are visited in a seed-shuffled order; a point is accepted when
    no previously accepted point lies within radius r.  r is bisected so
    that exactly m points are accepted; when no radius hits m exactly, the
    radius is relaxed and throwing continues from the stricter acceptance
    set until m is reached.  The result is pairwise >= radius separated
    for the returned radius.
    """
    pts = _as_pts(cloud)
    n = pts.shape[0]
    m = _check_m(m, n)
    rng = np.random.default_rng(_check_seed(seed))
    order = rng.permutation(n)

    if m == n:
        return SampleResult(indices=order, radius=0.0)

    diag = float(np.sqrt(((pts.max(0) - pts.min(0)) ** 2).sum()))
    lo_r, hi_r = 0.0, max(diag * 1.001, 1e-12)
    # count(r) decreases as r grows; maintain count(lo_r) >= m > count(hi_r)
    hi_acc = _dart_throw(pts, order, hi_r)
    if len(hi_acc) >= m:
        return SampleResult(indices=np.asarray(hi_acc[:m], dtype=np.intp), radius=hi_r)
    for _ in range(64):
        mid = 0.5 * (lo_r + hi_r)
        if mid <= lo_r or mid >= hi_r:
            break
        acc = _dart_throw(pts, order, mid)
        if len(acc) == m:
            return SampleResult(indices=np.asarray(acc, dtype=np.intp), radius=mid)
        if len(acc) > m:
            lo_r = mid
        else:
            hi_r = mid
            hi_acc = acc
    # no exact hit: keep the separated set found at hi_r, relax the radius
    # and top up by continued dart throwing
    accepted = hi_acc
    radius = lo_r
    while len(accepted) < m:
        accepted = _dart_throw(pts, order, radius, accepted=accepted, stop_at=m)
        radius *= 0.5
        if radius == 0.0 and len(accepted) < m:
            # radius 0 accepts everything, including duplicates
            accepted = _dart_throw(pts, order, 0.0, accepted=accepted, stop_at=m)
            break
    return SampleResult(indices=np.asarray(accepted, dtype=np.intp), radius=radius * 2.0)


def density_profile(cloud, selected, sigma):
    """Summed Gaussian weight of each selected point to the other selected.

    The uniformity diagnostic behind the sampling reports: for selected
    point p, sum over other selected q of exp(-||p - q||^2 / (2 sigma^2)).
    """
    pts = _as_pts(cloud)
    if isinstance(selected, SampleResult):
        idx = selected.indices
    else:
        idx = np.asarray(selected, dtype=np.intp)
    if idx.ndim != 1 or idx.size < 1:
        raise ValidationError("selection must be a nonempty 1-d index sequence")
    if idx.size and (idx.min() < 0 or idx.max() >= pts.shape[0]):
        raise ValidationError("selection indices out of range")
    sigma = float(sigma)
    if not sigma > 0:
        raise ValidationError(f"sigma must be > 0, got {sigma}")
    sel = pts[idx]
    m = sel.shape[0]
    inv = -1.0 / (2.0 * sigma * sigma)
    out = np.empty(m)
    chunk = max(1, min(m, 8_388_608 // max(m, 1)))  # cap the pairwise block
    for lo in range(0, m, chunk):
        block = sel[lo: lo + chunk]
        d2 = ((block[:, None, :] - sel[None, :, :]) ** 2).sum(axis=2)
        g = np.exp(inv * d2)
        rows = np.arange(block.shape[0])
        g[rows, lo + rows] = 0.0
        out[lo: lo + chunk] = g.sum(axis=1)
    return out
