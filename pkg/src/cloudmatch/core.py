"""Fundamental geometric types, deterministic generators, and seeds.

Coordinates are float64 everywhere inside the library.  The synthetic
generators round their output through float32 so that binary PLY files
(which store float32) round-trip generated clouds bit-exactly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "Point3",
    "PointCloud",
    "LabeledPointCloud",
    "gen_uniform_box",
    "gen_two_density",
]


@dataclass(frozen=True)
class Point3:
    """A single 3D point. All coordinates must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValidationError(f"coordinate {name} is not finite: {v!r}")
            object.__setattr__(self, name, v)

    def to_array(self):
        return np.array([self.x, self.y, self.z], dtype=np.float64)


def _as_points_array(points, what="points"):
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValidationError(f"{what} must have shape (n, 3), got {arr.shape}")
    if arr.shape[0] < 1:
        raise ValidationError(f"{what} must contain at least one point")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{what} contain non-finite coordinates")
    return arr


class PointCloud:
    """An ordered sequence of 3D points backed by an immutable (n, 3) array.

    Duplicate points are legal; order is significant and preserved by all
    file round-trips.
    """

    __slots__ = ("_points",)

    def __init__(self, points):
        arr = _as_points_array(points).copy()
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self):
        """Read-only (n, 3) float64 array."""
        return self._points

    def __len__(self):
        return self._points.shape[0]

    def __getitem__(self, i):
        x, y, z = self._points[int(i)]
        return Point3(x, y, z)

    def __eq__(self, other):
        if not isinstance(other, PointCloud) or isinstance(other, LabeledPointCloud) != isinstance(self, LabeledPointCloud):
            return NotImplemented
        return self._points.shape == other._points.shape and bool(
            np.all(self._points == other._points)
        )

    def __repr__(self):
        return f"{type(self).__name__}(n={len(self)})"

    def bounding_box(self):
        """(mins, maxs) of the axis-aligned bounding box, each shape (3,)."""
        return self._points.min(axis=0), self._points.max(axis=0)


class LabeledPointCloud(PointCloud):
    """A point cloud with a parallel binary source channel.

    Label 0 marks points from the input cloud, label 1 points from the
    coarse prediction.
    """

    __slots__ = ("_labels",)

    def __init__(self, points, labels):
        super().__init__(points)
        lab = np.asarray(labels)
        if lab.ndim != 1 or lab.shape[0] != len(self):
            raise ValidationError(
                f"labels must be a 1-d sequence of length {len(self)}, got shape {lab.shape}"
            )
        if not np.isin(lab, (0, 1)).all():
            raise ValidationError("labels must all be 0 or 1")
        lab = lab.astype(np.uint8).copy()
        lab.setflags(write=False)
        self._labels = lab

    @property
    def labels(self):
        """Read-only (n,) uint8 array of {0, 1} source flags."""
        return self._labels

    def __eq__(self, other):
        if not isinstance(other, LabeledPointCloud):
            return NotImplemented
        return (
            self._points.shape == other._points.shape
            and bool(np.all(self._points == other._points))
            and bool(np.all(self._labels == other._labels))
        )


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _rng(seed):
    return np.random.default_rng(_check_seed(seed))


def _quantize(arr):
    # round through float32 so binary PLY round-trips are lossless
    return arr.astype(np.float32).astype(np.float64)


def gen_uniform_box(n, bounds=((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)), seed=0):
    """n points i.i.d. uniform in an axis-aligned box, deterministic under seed.

    `bounds` is ((xmin, ymin, zmin), (xmax, ymax, zmax)).  The box must have
    positive extent on at least one axis; degenerate (flat) axes are allowed.
    """
    n = int(n)
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    b = np.asarray(bounds, dtype=np.float64)
    if b.shape != (2, 3):
        raise ValidationError(f"bounds must have shape (2, 3), got {b.shape}")
    if not np.isfinite(b).all():
        raise ValidationError("bounds contain non-finite values")
    lo, hi = b[0], b[1]
    if (hi < lo).any():
        raise ValidationError("box max must be >= box min on every axis")
    if not (hi > lo).any():
        raise ValidationError("box must have positive extent on at least one axis")
    rng = _rng(seed)
    pts = lo + rng.random((n, 3)) * (hi - lo)
    # float32 rounding must not push points outside the box
    return PointCloud(np.clip(_quantize(pts), lo, hi))


def gen_two_density(n_left, n_right, seed=0):
    """A planar cloud with two uniform halves of different density.

    The left half-square [0,1] x [0,0.5] x {0} receives n_left points and the
    right half-square [0,1] x [0.5,1] x {0} receives n_right, so the right
    part is denser whenever n_right > n_left.  Left points come first.
    """
    n_left, n_right = int(n_left), int(n_right)
    if n_left < 1 or n_right < 1:
        raise ValidationError(
            f"both counts must be >= 1, got n_left={n_left}, n_right={n_right}"
        )
    rng = _rng(seed)
    left = np.zeros((n_left, 3))
    left[:, 0] = rng.random(n_left)
    left[:, 1] = rng.random(n_left) * 0.5
    right = np.zeros((n_right, 3))
    right[:, 0] = rng.random(n_right)
    right[:, 1] = 0.5 + rng.random(n_right) * 0.5
    pts = _quantize(np.vstack([left, right]))
    # float32 rounding must not lift a left-half point onto y = 0.5
    below_half = float(np.nextafter(np.float32(0.5), np.float32(0.0)))
    pts[:n_left, 1] = np.minimum(pts[:n_left, 1], below_half)
    return PointCloud(pts)
