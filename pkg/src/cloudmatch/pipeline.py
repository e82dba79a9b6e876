"""Second-stage plumbing: merge with source labels, subsample, joint loss.

The joint loss over caller-supplied clouds is

    total = EMD(coarse, gt) + alpha * expansion(batch) + beta * EMD(final, gt)

with the EMD terms computed by the auction approximation.  The neural
pieces that would produce `coarse` and `final` live outside this library.
"""

from dataclasses import dataclass

import numpy as np

from .core import LabeledPointCloud, PointCloud
from .emd import AuctionConfig, emd_auction
from .errors import ValidationError
from .expansion import ElementBatch, ExpansionConfig, expansion_penalty
from .sampling import MdsConfig, mds_sample

__all__ = [
    "LossWeights",
    "LossReport",
    "merge",
    "merge_and_subsample",
    "joint_loss",
]


@dataclass(frozen=True)
class LossWeights:
    """alpha scales the expansion penalty, beta the final-output EMD."""

    alpha: float = 0.1
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValidationError(
                f"weights must be >= 0, got alpha={self.alpha}, beta={self.beta}"
            )


@dataclass(frozen=True)
class LossReport:
    """The three joint-loss terms and their weighted total."""

    emd_coarse: float
    expansion: float
    emd_final: float
    total: float


def _require_cloud(cloud, name):
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(cloud)
    if len(cloud) < 1:
        raise ValidationError(f"{name} must be nonempty")
    return cloud


def merge(input_cloud, coarse_cloud):
    """Concatenate input (label 0) and coarse prediction (label 1).

    Input points come first; order within each source is preserved.
    """
    a = _require_cloud(input_cloud, "input")
    b = _require_cloud(coarse_cloud, "coarse")
    points = np.vstack([a.points, b.points])
    labels = np.concatenate([np.zeros(len(a), dtype=np.uint8), np.ones(len(b), dtype=np.uint8)])
    return LabeledPointCloud(points, labels)


def merge_and_subsample(input_cloud, coarse_cloud, m, cfg=None):
    """Merge, then keep an m-point minimum-density subset, labels attached."""
    merged = merge(input_cloud, coarse_cloud)
    result = mds_sample(merged, m, cfg or MdsConfig())
    idx = result.indices
    return LabeledPointCloud(merged.points[idx], merged.labels[idx])


def joint_loss(coarse, final, gt, batch, weights=None, emd_cfg=None, exp_cfg=None):
    """Evaluate the three-term joint loss over given clouds.

    `batch` is the surface-element decomposition of `coarse`; its K*N
    points must match the coarse cloud's size.  Both EMD terms require the
    same size as `gt` (no silent resampling).
    """
    coarse = _require_cloud(coarse, "coarse")
    final = _require_cloud(final, "final")
    gt = _require_cloud(gt, "gt")
    if not isinstance(batch, ElementBatch):
        batch = ElementBatch(batch)
    weights = weights or LossWeights()
    emd_cfg = emd_cfg or AuctionConfig()
    exp_cfg = exp_cfg or ExpansionConfig()

    if len(coarse) != len(gt):
        raise ValidationError(
            f"|coarse|={len(coarse)} must equal |gt|={len(gt)} for the EMD term"
        )
    if len(final) != len(gt):
        raise ValidationError(
            f"|final|={len(final)} must equal |gt|={len(gt)} for the EMD term"
        )
    if batch.k * batch.n != len(coarse):
        raise ValidationError(
            f"batch holds {batch.k * batch.n} points but |coarse|={len(coarse)}"
        )

    emd_coarse = emd_auction(coarse, gt, emd_cfg).mean_cost
    expansion = expansion_penalty(batch, exp_cfg).value
    emd_final = emd_auction(final, gt, emd_cfg).mean_cost
    total = emd_coarse + weights.alpha * expansion + weights.beta * emd_final
    return LossReport(
        emd_coarse=emd_coarse, expansion=expansion, emd_final=emd_final, total=total
    )
