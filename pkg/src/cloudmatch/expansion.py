"""Expansion penalty for batches of surface elements.

Each element's points get a Euclidean minimum spanning tree, rooted at the
middle vertex of the tree's diameter (the simple path with the most
vertices) with every edge directed toward the root.  Edges at least
lambda times the element's mean edge length are penalized by their length,
averaged over all K*N points; the subgradient moves each penalized edge's
tail toward its head, with the tree topology, the filter set, and the mean
edge length all held constant.

Tie-breaking is fixed so results are reproducible: MST candidate edges are
ordered by (length, lower endpoint index, higher endpoint index); farthest-
vertex steps of the diameter search pick the lowest index; an even-length
diameter roots at the middle vertex nearer (by hops) to the lower-indexed
endpoint.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import PointCloud
from .errors import ValidationError

__all__ = [
    "ElementBatch",
    "SpanningTree",
    "ExpansionConfig",
    "PenaltyResult",
    "build_mst",
    "root_and_direct",
    "expansion_penalty",
]


@dataclass(frozen=True)
class ExpansionConfig:
    """lambda_factor filters which MST edges are long enough to penalize."""

    lambda_factor: float = 1.5

    def __post_init__(self):
        if not self.lambda_factor > 0:
            raise ValidationError(f"lambda_factor must be > 0, got {self.lambda_factor}")


class ElementBatch:
    """K surface elements of N points each, stored as a (K, N, 3) array."""

    __slots__ = ("_elements",)

    def __init__(self, elements):
        arr = np.asarray(elements, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValidationError(f"elements must have shape (K, N, 3), got {arr.shape}")
        if arr.shape[0] < 1:
            raise ValidationError("need at least one element (K >= 1)")
        if arr.shape[1] < 2:
            raise ValidationError("elements need at least two points (N >= 2)")
        if not np.isfinite(arr).all():
            raise ValidationError("elements contain non-finite coordinates")
        arr = arr.copy()
        arr.setflags(write=False)
        self._elements = arr

    @classmethod
    def from_cloud(cls, cloud, k):
        """Split a cloud into k consecutive blocks of equal size."""
        pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
        k = int(k)
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        n = pts.shape[0]
        if n % k != 0:
            raise ValidationError(f"cloud size {n} is not divisible by k={k}")
        return cls(pts.reshape(k, n // k, 3))

    @property
    def elements(self):
        return self._elements

    @property
    def k(self):
        return self._elements.shape[0]

    @property
    def n(self):
        return self._elements.shape[1]


@dataclass(frozen=True)
class SpanningTree:
    """A spanning tree over n vertices: n-1 edges with Euclidean lengths.

    While undirected (root is None) each edge is stored (lower, higher).
    After rooting, edges[i] = (u, v) means u's single outgoing edge points
    toward the root via v.
    """

    n: int
    edges: np.ndarray
    lengths: np.ndarray
    root: int | None = None
    mean_edge_length: float = field(init=False)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.intp)
        w = np.asarray(self.lengths, dtype=np.float64)
        if e.shape != (self.n - 1, 2) or w.shape != (self.n - 1,):
            raise ValidationError(
                f"a tree over {self.n} vertices needs {self.n - 1} edges, "
                f"got edges {e.shape} and lengths {w.shape}"
            )
        e = e.copy()
        w = w.copy()
        e.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "lengths", w)
        object.__setattr__(self, "mean_edge_length", float(w.sum() / (self.n - 1)))

    def total_weight(self):
        return float(self.lengths.sum())


def _as_element(points):
    pts = points.points if isinstance(points, PointCloud) else np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError(f"points must have shape (n, 3), got {pts.shape}")
    if pts.shape[0] < 2:
        raise ValidationError("an MST needs at least 2 points")
    if not np.isfinite(pts).all():
        raise ValidationError("points contain non-finite coordinates")
    return pts


def build_mst(points):
    """Euclidean MST by Prim's method, O(n^2) time and O(n) extra memory.

    Deterministic: among equal-length candidate edges the one with the
    smaller (lower index, higher index) pair wins.
    """
    pts = _as_element(points)
    n = pts.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    diff = pts - pts[0]
    best_dist = np.sqrt((diff * diff).sum(axis=1))
    best_from = np.zeros(n, dtype=np.intp)
    best_dist[0] = np.inf

    edges = np.empty((n - 1, 2), dtype=np.intp)
    lengths = np.empty(n - 1)
    idx = np.arange(n)
    for step in range(n - 1):
        masked = np.where(in_tree, np.inf, best_dist)
        dmin = masked.min()
        tied = np.flatnonzero(masked == dmin)
        if tied.size > 1:
            lo = np.minimum(best_from[tied], tied)
            hi = np.maximum(best_from[tied], tied)
            v = int(tied[np.lexsort((hi, lo))[0]])
        else:
            v = int(tied[0])
        u = int(best_from[v])
        edges[step] = (min(u, v), max(u, v))
        lengths[step] = best_dist[v]
        in_tree[v] = True

        diff = pts - pts[v]
        d_new = np.sqrt((diff * diff).sum(axis=1))
        closer = d_new < best_dist
        # equal length: keep the lexicographically smaller endpoint pair
        eq = d_new == best_dist
        if eq.any():
            n_lo = np.minimum(v, idx)
            n_hi = np.maximum(v, idx)
            o_lo = np.minimum(best_from, idx)
            o_hi = np.maximum(best_from, idx)
            closer |= eq & ((n_lo < o_lo) | ((n_lo == o_lo) & (n_hi < o_hi)))
        closer &= ~in_tree
        best_dist[closer] = d_new[closer]
        best_from[closer] = v
    return SpanningTree(n=n, edges=edges, lengths=lengths, root=None)


def _adjacency(n, edges):
    adj = [[] for _ in range(n)]
    for k, (u, v) in enumerate(edges):
        adj[u].append((v, k))
        adj[v].append((u, k))
    for lst in adj:
        lst.sort()
    return adj


def _bfs_hops(adj, start, n):
    hops = np.full(n, -1, dtype=np.intp)
    parent = np.full(n, -1, dtype=np.intp)
    parent_edge = np.full(n, -1, dtype=np.intp)
    hops[start] = 0
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v, k in adj[u]:
            if hops[v] < 0:
                hops[v] = hops[u] + 1
                parent[v] = u
                parent_edge[v] = k
                queue.append(v)
    return hops, parent, parent_edge


def root_and_direct(tree):
    """Root a tree at the middle of its hop-count diameter; direct edges to it.

    The diameter is found by the double traversal: farthest (by hops) from
    vertex 0, then farthest from that endpoint, lowest index on ties.
    """
    n = tree.n
    adj = _adjacency(n, tree.edges)
    hops0, _, _ = _bfs_hops(adj, 0, n)
    a = int(np.flatnonzero(hops0 == hops0.max())[0])
    hops_a, parent_a, _ = _bfs_hops(adj, a, n)
    b = int(np.flatnonzero(hops_a == hops_a.max())[0])
    # unique tree path a -> b
    path = [b]
    while path[-1] != a:
        path.append(int(parent_a[path[-1]]))
    path.reverse()
    hops_count = len(path) - 1
    if hops_count % 2 == 0:
        root = path[hops_count // 2]
    elif a < b:
        root = path[(hops_count - 1) // 2]
    else:
        root = path[(hops_count + 1) // 2]

    _, parent_r, parent_edge_r = _bfs_hops(adj, root, n)
    tails = np.flatnonzero(np.arange(n) != root)
    edges = np.stack([tails, parent_r[tails]], axis=1)
    lengths = tree.lengths[parent_edge_r[tails]]
    return SpanningTree(n=n, edges=edges, lengths=lengths, root=int(root))


@dataclass(frozen=True)
class PenaltyResult:
    """Expansion penalty value, per-point subgradients, and the edges that fired.

    gradients has shape (K, N, 3); active_edges[i] is the (m_i, 2) array of
    directed (tail, head) pairs penalized in element i.
    """

    value: float
    gradients: np.ndarray
    active_edges: list

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


def expansion_penalty(batch, cfg=None):
    """Mean length of over-long MST edges across a batch, with subgradients.

    value = (1 / (K*N)) * sum_i sum_{(u,v) in T_i, |uv| >= lambda * l_i} |uv|
    where l_i is element i's mean MST edge length.  The gradient of an
    active edge's tail u is (u - v) / (|uv| * K * N); heads get nothing, so
    a descent step shrinks u toward v.  Zero-length edges contribute no
    gradient.
    """
    if not isinstance(batch, ElementBatch):
        batch = ElementBatch(batch)
    cfg = cfg or ExpansionConfig()
    k, n = batch.k, batch.n
    scale = 1.0 / (k * n)

    total = 0.0
    gradients = np.zeros((k, n, 3))
    active_edges = []
    for i in range(k):
        pts = batch.elements[i]
        tree = root_and_direct(build_mst(pts))
        threshold = cfg.lambda_factor * tree.mean_edge_length
        mask = tree.lengths >= threshold
        act = tree.edges[mask]
        lens = tree.lengths[mask]
        total += float(lens.sum())
        nz = lens > 0
        tails, heads, lens_nz = act[nz, 0], act[nz, 1], lens[nz]
        gradients[i, tails] += (pts[tails] - pts[heads]) / lens_nz[:, None] * scale
        active_edges.append(act)
    return PenaltyResult(value=total * scale, gradients=gradients, active_edges=active_edges)
