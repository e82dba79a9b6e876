"""Geometric core of two-stage point-cloud completion.

Distances (Chamfer, exact and auction-approximated EMD), the MST-based
expansion penalty with its subgradient, density-aware subset sampling,
and the merge/subsample/joint-loss plumbing, all over plain numpy arrays.
"""

from .chamfer import chamfer_distance
from .core import (
    LabeledPointCloud,
    Point3,
    PointCloud,
    gen_two_density,
    gen_uniform_box,
)
from .emd import Assignment, AuctionConfig, emd_auction, emd_exact, resolve_epsilon
from .errors import CapacityError, ParseError, ValidationError
from .expansion import (
    ElementBatch,
    ExpansionConfig,
    PenaltyResult,
    SpanningTree,
    build_mst,
    expansion_penalty,
    root_and_direct,
)
from .io import read_cloud, write_cloud
from .pipeline import LossReport, LossWeights, joint_loss, merge, merge_and_subsample
from .sampling import (
    MdsConfig,
    SampleResult,
    default_sigma,
    density_profile,
    fps_sample,
    mds_sample,
    pds_sample,
)
from .spatial import SpatialIndex, build

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "AuctionConfig",
    "CapacityError",
    "ElementBatch",
    "ExpansionConfig",
    "LabeledPointCloud",
    "LossReport",
    "LossWeights",
    "MdsConfig",
    "ParseError",
    "PenaltyResult",
    "Point3",
    "PointCloud",
    "SampleResult",
    "SpanningTree",
    "SpatialIndex",
    "ValidationError",
    "build",
    "build_mst",
    "chamfer_distance",
    "default_sigma",
    "density_profile",
    "emd_auction",
    "emd_exact",
    "expansion_penalty",
    "fps_sample",
    "gen_two_density",
    "gen_uniform_box",
    "joint_loss",
    "mds_sample",
    "merge",
    "merge_and_subsample",
    "pds_sample",
    "read_cloud",
    "resolve_epsilon",
    "root_and_direct",
    "write_cloud",
]
