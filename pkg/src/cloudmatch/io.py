"""Point-cloud file I/O: XYZ and XYZL text, binary little-endian PLY.

Text formats print 9 significant digits, which bounds the round-trip error
of unit-scale coordinates below 1e-6 and reproduces float32-valued
coordinates exactly.  PLY stores float32 coordinates and an optional uchar
`label` property.
"""

import struct

import numpy as np

from .core import LabeledPointCloud, PointCloud
from .errors import ParseError, ValidationError

__all__ = ["read_cloud", "write_cloud"]

FORMATS = ("xyz", "xyzl", "ply")

_SUFFIXES = {".xyz": "xyz", ".xyzl": "xyzl", ".ply": "ply"}


def _resolve_format(path, fmt):
    if fmt is not None:
        f = str(fmt).lower()
        if f not in FORMATS:
            raise ValidationError(f"unknown format {fmt!r}, expected one of {FORMATS}")
        return f
    name = str(path).lower()
    for suffix, f in _SUFFIXES.items():
        if name.endswith(suffix):
            return f
    raise ValidationError(
        f"cannot infer format from {path!r}; pass format explicitly"
    )


def read_cloud(path, fmt=None):
    """Read a cloud from `path`.

    Returns a PointCloud for xyz/unlabeled ply and a LabeledPointCloud for
    xyzl/labeled ply.  Point order is the file order.
    """
    f = _resolve_format(path, fmt)
    if f == "ply":
        return _read_ply(path)
    return _read_text(path, with_labels=(f == "xyzl"))


def write_cloud(cloud, path, fmt=None):
    """Write `cloud` to `path` in the given (or suffix-inferred) format.

    Labeled clouds require a label-carrying format (xyzl or ply); writing
    one as plain xyz is an error rather than a silent label drop.
    """
    if not isinstance(cloud, PointCloud):
        raise ValidationError(f"expected a PointCloud, got {type(cloud).__name__}")
    f = _resolve_format(path, fmt)
    labeled = isinstance(cloud, LabeledPointCloud)
    if labeled and f == "xyz":
        raise ValidationError(
            "cannot write a labeled cloud as xyz: labels would be lost "
            "(use xyzl or ply)"
        )
    if not labeled and f == "xyzl":
        raise ValidationError("xyzl requires a labeled cloud")
    if f == "ply":
        _write_ply(cloud, path)
    else:
        _write_text(cloud, path, with_labels=(f == "xyzl"))


def _read_text(path, with_labels):
    pts = []
    labels = []
    n_fields = 4 if with_labels else 3
    with open(path, "r", newline=None) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) != n_fields:
                raise ParseError(
                    f"expected {n_fields} fields, got {len(fields)}",
                    path=path,
                    line=lineno,
                )
            try:
                xyz = [float(v) for v in fields[:3]]
            except ValueError:
                raise ParseError("malformed number", path=path, line=lineno) from None
            if not all(np.isfinite(v) for v in xyz):
                raise ValidationError(
                    f"{path}:{lineno}: non-finite coordinate"
                )
            pts.append(xyz)
            if with_labels:
                if fields[3] not in ("0", "1"):
                    raise ValidationError(
                        f"{path}:{lineno}: label must be 0 or 1, got {fields[3]!r}"
                    )
                labels.append(int(fields[3]))
    if not pts:
        raise ParseError("file contains no points", path=path)
    if with_labels:
        return LabeledPointCloud(pts, labels)
    return PointCloud(pts)


def _write_text(cloud, path, with_labels):
    with open(path, "w", newline="\n") as fh:
        if with_labels:
            for (x, y, z), lab in zip(cloud.points, cloud.labels):
                fh.write(f"{x:.9g} {y:.9g} {z:.9g} {int(lab)}\n")
        else:
            for x, y, z in cloud.points:
                fh.write(f"{x:.9g} {y:.9g} {z:.9g}\n")


def _read_ply(path):
    with open(path, "rb") as fh:
        data = fh.read()
    end = data.find(b"end_header\n")
    if not data.startswith(b"ply\n") or end < 0:
        raise ParseError("not a ply file (missing ply/end_header)", path=path)
    header_lines = data[: end].decode("ascii", errors="replace").split("\n")
    body = data[end + len(b"end_header\n"):]

    n_vertices = None
    props = []
    fmt_seen = None
    for lineno, line in enumerate(header_lines[1:], start=2):
        fields = line.split()
        if not fields or fields[0] == "comment":
            continue
        if fields[0] == "format":
            fmt_seen = fields[1] if len(fields) > 1 else None
        elif fields[0] == "element":
            if len(fields) != 3 or fields[1] != "vertex":
                raise ParseError(
                    f"unsupported element line {line!r}", path=path, line=lineno
                )
            try:
                n_vertices = int(fields[2])
            except ValueError:
                raise ParseError("bad vertex count", path=path, line=lineno) from None
        elif fields[0] == "property":
            if len(fields) != 3:
                raise ParseError(
                    f"unsupported property line {line!r}", path=path, line=lineno
                )
            props.append((fields[1], fields[2]))
    if fmt_seen != "binary_little_endian":
        raise ParseError(
            f"unsupported ply format {fmt_seen!r} (need binary_little_endian)",
            path=path,
        )
    if n_vertices is None or n_vertices < 1:
        raise ParseError("missing or empty vertex element", path=path)

    expected = [("float", "x"), ("float", "y"), ("float", "z")]
    labeled = props == expected + [("uchar", "label")]
    if not labeled and props != expected:
        raise ParseError(f"unsupported vertex properties {props}", path=path)

    record = struct.calcsize("<3fB" if labeled else "<3f")
    if len(body) < n_vertices * record:
        raise ParseError(
            f"truncated body: need {n_vertices * record} bytes, have {len(body)}",
            path=path,
        )
    if labeled:
        dt = np.dtype([("xyz", "<f4", (3,)), ("label", "u1")])
        rows = np.frombuffer(body, dtype=dt, count=n_vertices)
        pts = rows["xyz"].astype(np.float64)
        labels = rows["label"]
        if not np.isfinite(pts).all():
            raise ValidationError(f"{path}: non-finite coordinate")
        if not np.isin(labels, (0, 1)).all():
            raise ValidationError(f"{path}: label outside {{0, 1}}")
        return LabeledPointCloud(pts, labels)
    pts = np.frombuffer(body, dtype="<f4", count=3 * n_vertices).reshape(-1, 3)
    pts = pts.astype(np.float64)
    if not np.isfinite(pts).all():
        raise ValidationError(f"{path}: non-finite coordinate")
    return PointCloud(pts)


def _write_ply(cloud, path):
    labeled = isinstance(cloud, LabeledPointCloud)
    header = [
        "ply",
        "format binary_little_endian 1.0",
        f"element vertex {len(cloud)}",
        "property float x",
        "property float y",
        "property float z",
    ]
    if labeled:
        header.append("property uchar label")
    header.append("end_header")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        xyz = cloud.points.astype("<f4")
        if labeled:
            dt = np.dtype([("xyz", "<f4", (3,)), ("label", "u1")])
            rows = np.empty(len(cloud), dtype=dt)
            rows["xyz"] = xyz
            rows["label"] = cloud.labels
            fh.write(rows.tobytes())
        else:
            fh.write(np.ascontiguousarray(xyz).tobytes())
