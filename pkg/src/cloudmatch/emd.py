"""Earth Mover's Distance between equal-size clouds.

Two routes:

* `emd_exact` solves the assignment problem exactly (scipy's Hungarian-type
  solver over the full distance matrix) — the small-n oracle; O(n^2) memory.
* `emd_auction` is an auction-based approximation whose auxiliary memory is
  O(n): persons (S1 points) bid for objects (S2 points) with benefit
  -distance, distances recomputed on demand in fixed-width chunks so the
  n x n cost matrix never exists.  A converged run is within epsilon of the
  optimal mean cost; when the bid budget runs out the remaining persons are
  assigned greedily and no bound is claimed.

Epsilon scaling (a decreasing epsilon schedule with carried-over prices) is
on by default; the optimality guarantee is in terms of the final epsilon.
"""

from dataclasses import dataclass

import numpy as np

from .core import PointCloud
from .errors import CapacityError, ValidationError

__all__ = ["Assignment", "AuctionConfig", "emd_exact", "emd_auction", "EXACT_CAP"]

# largest n accepted by the exact solver (n^2 float64 cost matrix)
EXACT_CAP = 2048

# persons per bidding chunk; keeps per-round temporaries at O(n) floats
_CHUNK = 256


def _as_pts(cloud, name):
    if isinstance(cloud, PointCloud):
        return cloud.points
    pts = np.asarray(cloud, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
        raise ValidationError(f"{name} must be a nonempty (n, 3) cloud, got {pts.shape}")
    if not np.isfinite(pts).all():
        raise ValidationError(f"{name} contains non-finite coordinates")
    return pts


def _check_pair(s1, s2):
    p = _as_pts(s1, "s1")
    q = _as_pts(s2, "s2")
    if p.shape[0] != q.shape[0]:
        raise ValidationError(
            f"EMD needs equal sizes, got |s1|={p.shape[0]} and |s2|={q.shape[0]}"
        )
    return p, q


def _mapping_cost(p, q, mapping):
    d = p - q[mapping]
    return float(np.mean(np.sqrt((d * d).sum(axis=1))))


@dataclass(frozen=True)
class Assignment:
    """A bijection S1 -> S2 with its mean Euclidean transport cost.

    mapping[i] is the S2 index assigned to S1 point i.  `converged` is False
    when the auction hit its bid budget and fell back to greedy completion.
    """

    mapping: np.ndarray
    mean_cost: float
    converged: bool = True

    def __post_init__(self):
        m = np.asarray(self.mapping, dtype=np.intp)
        n = m.shape[0]
        if m.ndim != 1 or not np.array_equal(np.sort(m), np.arange(n)):
            raise ValidationError("mapping must be a permutation of 0..n-1")
        object.__setattr__(self, "mapping", m)
        object.__setattr__(self, "mean_cost", float(self.mean_cost))

    def recompute_mean_cost(self, s1, s2):
        """Mean cost re-evaluated from the mapping and the two clouds."""
        p, q = _check_pair(s1, s2)
        if p.shape[0] != self.mapping.shape[0]:
            raise ValidationError("clouds do not match the mapping size")
        return _mapping_cost(p, q, self.mapping)


@dataclass(frozen=True)
class AuctionConfig:
    """Auction parameters.

    epsilon: final slack of the optimality guarantee; None resolves to
        1e-3 x the diagonal of the joint bounding box.
    epsilon_scaling: run a decreasing-epsilon schedule, starting at
        0.25 x the bounding-box diagonal and multiplying by scaling_factor,
        with prices carried between phases.
    max_iterations: total bid budget before greedy completion; None
        resolves to 50 * n.
    seed: accepted for interface stability; the algorithm is deterministic
        (lowest-index tie rules) and draws no random numbers.
    """

    epsilon: float | None = None
    epsilon_scaling: bool = True
    scaling_factor: float = 0.25
    max_iterations: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValidationError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 < self.scaling_factor < 1:
            raise ValidationError(
                f"scaling_factor must be in (0, 1), got {self.scaling_factor}"
            )
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValidationError(
                f"max_iterations must be >= 1, got {self.max_iterations}"
            )


def _bbox_diag(p, q):
    lo = np.minimum(p.min(axis=0), q.min(axis=0))
    hi = np.maximum(p.max(axis=0), q.max(axis=0))
    return float(np.sqrt(((hi - lo) ** 2).sum()))


def resolve_epsilon(s1, s2, cfg=None):
    """The final epsilon an auction run would use for this instance."""
    cfg = cfg or AuctionConfig()
    if cfg.epsilon is not None:
        return float(cfg.epsilon)
    p, q = _check_pair(s1, s2)
    diag = _bbox_diag(p, q)
    return 1e-3 * diag if diag > 0 else 1e-12


def emd_exact(s1, s2):
    """Globally optimal assignment; n is capped at EXACT_CAP."""
    from scipy.optimize import linear_sum_assignment

    p, q = _check_pair(s1, s2)
    n = p.shape[0]
    if n > EXACT_CAP:
        raise CapacityError(f"emd_exact is capped at n={EXACT_CAP}, got {n}")
    # full matrix is fine here: this is the O(n^2)-memory oracle
    cost = np.empty((n, n))
    for lo in range(0, n, _CHUNK):
        cost[lo: lo + _CHUNK] = _dist_block(p[lo: lo + _CHUNK], q)
    rows, cols = linear_sum_assignment(cost)
    mapping = np.empty(n, dtype=np.intp)
    mapping[rows] = cols
    return Assignment(mapping, _mapping_cost(p, q, mapping), converged=True)


def _dist_block(p_rows, q):
    # per-axis accumulation: no (b, n, 3) temporary, no BLAS reduction,
    # same arithmetic as the reference scans
    acc = np.subtract.outer(p_rows[:, 0], q[:, 0])
    np.square(acc, out=acc)
    for a in (1, 2):
        t = np.subtract.outer(p_rows[:, a], q[:, a])
        np.square(t, out=t)
        acc += t
    return np.sqrt(acc, out=acc)


def _epsilon_schedule(eps_final, diag, scaling, factor):
    if not scaling:
        return [eps_final]
    eps0 = 0.25 * diag
    sched = []
    eps = eps0
    while eps > eps_final:
        sched.append(eps)
        eps *= factor
    sched.append(eps_final)
    return sched


def _greedy_complete(p, q, person_obj, object_free):
    """Assign remaining persons in ascending index to the nearest free object."""
    for i in np.flatnonzero(person_obj < 0):
        cand = np.flatnonzero(object_free)
        d = q[cand] - p[i]
        j = cand[int(np.argmin((d * d).sum(axis=1)))]
        person_obj[i] = j
        object_free[j] = False


def emd_auction(s1, s2, cfg=None):
    """Auction approximation of EMD with O(n) auxiliary memory.

    Returns a complete Assignment.  If the run converged (every person
    assigned within the bid budget), mean_cost <= optimal mean + epsilon.
    """
    cfg = cfg or AuctionConfig()
    p, q = _check_pair(s1, s2)
    n = p.shape[0]

    max_bids = cfg.max_iterations if cfg.max_iterations is not None else 50 * n
    diag = _bbox_diag(p, q)
    if cfg.epsilon is not None:
        eps_final = float(cfg.epsilon)
    elif diag > 0:
        eps_final = 1e-3 * diag
    else:
        # all 2n points coincide; any bijection is optimal
        return Assignment(np.arange(n, dtype=np.intp), 0.0, converged=True)

    if n == 1:
        return Assignment(
            np.zeros(1, dtype=np.intp), _mapping_cost(p, q, np.zeros(1, dtype=np.intp))
        )

    schedule = _epsilon_schedule(eps_final, diag, cfg.epsilon_scaling, cfg.scaling_factor)

    prices = np.zeros(n)
    person_obj = np.full(n, -1, dtype=np.intp)
    owner = np.full(n, -1, dtype=np.intp)
    bids_used = 0
    truncated = False

    for eps in schedule:
        person_obj.fill(-1)
        owner.fill(-1)
        while True:
            unassigned = np.flatnonzero(person_obj < 0)
            if unassigned.size == 0:
                break
            if bids_used >= max_bids:
                truncated = True
                break
            if unassigned.size > max_bids - bids_used:
                unassigned = unassigned[: max_bids - bids_used]
            bids_used += unassigned.size

            bid_obj = np.empty(unassigned.size, dtype=np.intp)
            bid_price = np.empty(unassigned.size)
            for lo in range(0, unassigned.size, _CHUNK):
                rows = unassigned[lo: lo + _CHUNK]
                values = _dist_block(p[rows], q)
                np.negative(values, out=values)
                values -= prices
                j1 = values.argmax(axis=1)
                r = np.arange(rows.size)
                v1 = values[r, j1]
                values[r, j1] = -np.inf
                v2 = values.max(axis=1)
                bid_obj[lo: lo + rows.size] = j1
                bid_price[lo: lo + rows.size] = prices[j1] + (v1 - v2) + eps

            # per object: highest bid wins, ties to the lowest person index
            order = np.lexsort((unassigned, -bid_price, bid_obj))
            first = np.ones(order.size, dtype=bool)
            obj_sorted = bid_obj[order]
            first[1:] = obj_sorted[1:] != obj_sorted[:-1]
            win = order[first]
            w_obj = bid_obj[win]
            w_person = unassigned[win]
            prev = owner[w_obj]
            person_obj[prev[prev >= 0]] = -1
            owner[w_obj] = w_person
            person_obj[w_person] = w_obj
            prices[w_obj] = bid_price[win]
        if truncated:
            break

    if truncated:
        _greedy_complete(p, q, person_obj, owner < 0)

    mapping = person_obj
    return Assignment(mapping, _mapping_cost(p, q, mapping), converged=not truncated)
