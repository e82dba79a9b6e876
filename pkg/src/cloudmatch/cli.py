"""Command-line front end.

Every operation is reachable on files; results print as `key: value`
lines on stdout.  Exit codes: 0 success, 1 validation error, 2 I/O or
parse error.  All randomness comes from --seed, so identical invocations
produce byte-identical output.
"""

import argparse
import sys

import numpy as np

from . import __version__
from .chamfer import chamfer_distance
from .core import LabeledPointCloud, gen_two_density, gen_uniform_box
from .emd import AuctionConfig, emd_auction, emd_exact, resolve_epsilon
from .errors import ParseError, ValidationError
from .expansion import ElementBatch, ExpansionConfig, expansion_penalty
from .io import read_cloud, write_cloud
from .pipeline import LossWeights, joint_loss, merge, merge_and_subsample
from .sampling import (
    MdsConfig,
    default_sigma,
    density_profile,
    fps_sample,
    mds_sample,
    pds_sample,
)

_EXIT_VALIDATION = 1
_EXIT_IO = 2


class _CliArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the CLI contract reserves 2 for I/O
    def error(self, message):
        raise _CliArgumentError(message)


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _emit(pairs, out):
    for key, value in pairs:
        out.write(f"{key}: {_fmt(value)}\n")


def _auction_config(args):
    return AuctionConfig(
        epsilon=getattr(args, "epsilon", None),
        epsilon_scaling=not getattr(args, "no_scaling", False),
        max_iterations=getattr(args, "max_iters", None),
        seed=args.seed,
    )


def _add_io_flags(p, output=False):
    p.add_argument("--format", choices=["xyz", "xyzl", "ply"], default=None,
                   help="file format (default: infer from suffix)")
    if output:
        p.add_argument("-o", "--output", default=None, help="output cloud path")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    p.add_argument("--threads", type=int, default=1,
                   help="cap on internal parallelism (results are identical "
                        "for any value)")


def _build_parser():
    parser = _Parser(prog="cloudmatch", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic clouds")
    gen_sub = p.add_subparsers(dest="generator", required=True)
    g = gen_sub.add_parser("uniform-box", help="uniform points in a box")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--bounds", type=float, nargs=6,
                   metavar=("XMIN", "YMIN", "ZMIN", "XMAX", "YMAX", "ZMAX"),
                   default=[0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
    _add_common(g)
    _add_io_flags(g, output=True)
    g = gen_sub.add_parser("two-density", help="two uniform halves, right denser")
    g.add_argument("--n-left", type=int, required=True)
    g.add_argument("--n-right", type=int, required=True)
    _add_common(g)
    _add_io_flags(g, output=True)

    p = sub.add_parser("chamfer", help="Chamfer Distance between two clouds")
    p.add_argument("cloud_a")
    p.add_argument("cloud_b")
    p.add_argument("--squared", action="store_true",
                   help="average squared nearest-neighbor distances instead")
    _add_common(p)
    _add_io_flags(p)

    p = sub.add_parser("emd", help="Earth Mover's Distance between two clouds")
    p.add_argument("cloud_a")
    p.add_argument("cloud_b")
    p.add_argument("--epsilon", type=float, default=None,
                   help="final optimality slack (default: 1e-3 x bbox diagonal)")
    p.add_argument("--max-iters", type=int, default=None,
                   help="bid budget before greedy completion (default: 50n)")
    p.add_argument("--exact", action="store_true", help="exact assignment solver")
    p.add_argument("--no-scaling", action="store_true", help="disable epsilon scaling")
    _add_common(p)
    _add_io_flags(p)

    p = sub.add_parser("expansion", help="expansion penalty of element blocks")
    p.add_argument("cloud")
    p.add_argument("--k", type=int, required=True, help="number of elements")
    p.add_argument("--n", type=int, required=True, help="points per element")
    p.add_argument("--lambda", type=float, default=1.5, dest="lambda_factor",
                   help="edge-length filter multiplier")
    p.add_argument("--gradients-out", default=None,
                   help="write per-point gradients to this xyz file")
    _add_common(p)
    _add_io_flags(p)

    p = sub.add_parser("sample", help="subset sampling")
    p.add_argument("cloud")
    p.add_argument("--method", choices=["mds", "fps", "pds"], required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--sigma", type=float, default=None,
                   help="MDS Gaussian scale (default: 2x mean NN distance)")
    p.add_argument("--first", type=int, default=0, help="first selected index (mds/fps)")
    p.add_argument("--report", action="store_true",
                   help="report per-half counts and density statistics")
    _add_common(p)
    _add_io_flags(p, output=True)

    p = sub.add_parser("merge", help="merge input and coarse clouds with labels")
    p.add_argument("input_cloud")
    p.add_argument("coarse_cloud")
    p.add_argument("--subsample", type=int, default=None,
                   help="keep an m-point minimum-density subset")
    p.add_argument("--sigma", type=float, default=None)
    _add_common(p)
    _add_io_flags(p, output=True)

    p = sub.add_parser("loss", help="joint loss over coarse/final/ground-truth")
    p.add_argument("coarse")
    p.add_argument("final")
    p.add_argument("gt")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lambda", type=float, default=1.5, dest="lambda_factor")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--no-scaling", action="store_true")
    _add_common(p)
    _add_io_flags(p)

    return parser


def _write_output(cloud, args, default_fmt=None):
    if args.output is None:
        return []
    fmt = args.format or default_fmt
    write_cloud(cloud, args.output, fmt)
    return [("output", args.output)]


def _cmd_gen(args, out):
    if args.generator == "uniform-box":
        b = args.bounds
        cloud = gen_uniform_box(args.n, ((b[0], b[1], b[2]), (b[3], b[4], b[5])), args.seed)
    else:
        cloud = gen_two_density(args.n_left, args.n_right, args.seed)
    pairs = [("generator", args.generator), ("n", len(cloud)), ("seed", args.seed)]
    pairs += _write_output(cloud, args, default_fmt="xyz")
    _emit(pairs, out)


def _cmd_chamfer(args, out):
    a = read_cloud(args.cloud_a, args.format)
    b = read_cloud(args.cloud_b, args.format)
    value = chamfer_distance(a, b, squared=args.squared)
    _emit([("n_a", len(a)), ("n_b", len(b)), ("squared", args.squared),
           ("chamfer", value)], out)


def _cmd_emd(args, out):
    a = read_cloud(args.cloud_a, args.format)
    b = read_cloud(args.cloud_b, args.format)
    pairs = [("n", len(a))]
    if args.exact:
        result = emd_exact(a, b)
        pairs += [("method", "exact")]
    else:
        cfg = _auction_config(args)
        result = emd_auction(a, b, cfg)
        pairs += [("method", "auction"),
                  ("epsilon", resolve_epsilon(a, b, cfg)),
                  ("converged", result.converged)]
    pairs += [("mean_cost", result.mean_cost)]
    _emit(pairs, out)


def _cmd_expansion(args, out):
    cloud = read_cloud(args.cloud, args.format)
    if args.k * args.n != len(cloud):
        raise ValidationError(
            f"--k {args.k} x --n {args.n} must equal the cloud size {len(cloud)}"
        )
    batch = ElementBatch(cloud.points.reshape(args.k, args.n, 3))
    cfg = ExpansionConfig(lambda_factor=args.lambda_factor)
    result = expansion_penalty(batch, cfg)
    n_active = sum(len(e) for e in result.active_edges)
    pairs = [("k", args.k), ("n", args.n), ("lambda", args.lambda_factor),
             ("active_edges", n_active), ("value", result.value)]
    if args.gradients_out is not None:
        grads = result.gradients.reshape(-1, 3)
        with open(args.gradients_out, "w", newline="\n") as fh:
            for gx, gy, gz in grads:
                fh.write(f"{gx:.9g} {gy:.9g} {gz:.9g}\n")
        pairs.append(("gradients_out", args.gradients_out))
    _emit(pairs, out)


def _cmd_sample(args, out):
    cloud = read_cloud(args.cloud, args.format)
    sigma = args.sigma if args.sigma is not None else default_sigma(cloud)
    if args.method == "mds":
        result = mds_sample(cloud, args.count, MdsConfig(sigma=sigma, first_point=args.first))
    elif args.method == "fps":
        result = fps_sample(cloud, args.count, first_point=args.first)
    else:
        result = pds_sample(cloud, args.count, seed=args.seed)
    idx = result.indices
    pairs = [("method", args.method), ("n", len(cloud)), ("count", len(idx))]
    if args.method == "pds":
        pairs.append(("radius", result.radius))
    else:
        pairs.append(("sigma", sigma))
    if args.report:
        y = cloud.points[idx, 1]
        dens = density_profile(cloud, result, sigma)
        mean = float(dens.mean())
        cv = float(dens.std() / mean) if mean > 0 else 0.0
        pairs += [("left_count", int((y < 0.5).sum())),
                  ("right_count", int((y >= 0.5).sum())),
                  ("density_mean", mean),
                  ("density_cv", cv)]
    if args.output is not None:
        sub = cloud.points[idx]
        if isinstance(cloud, LabeledPointCloud):
            selected = LabeledPointCloud(sub, cloud.labels[idx])
            pairs += _write_output(selected, args, default_fmt="xyzl")
        else:
            from .core import PointCloud

            pairs += _write_output(PointCloud(sub), args, default_fmt="xyz")
    _emit(pairs, out)


def _cmd_merge(args, out):
    a = read_cloud(args.input_cloud, args.format)
    b = read_cloud(args.coarse_cloud, args.format)
    if args.subsample is not None:
        cfg = MdsConfig(sigma=args.sigma)
        merged = merge_and_subsample(a, b, args.subsample, cfg)
    else:
        merged = merge(a, b)
    pairs = [("n_input", len(a)), ("n_coarse", len(b)), ("n_merged", len(merged)),
             ("n_label0", int((merged.labels == 0).sum())),
             ("n_label1", int((merged.labels == 1).sum()))]
    if args.output is not None:
        fmt = args.format
        if fmt is None and not str(args.output).lower().endswith((".ply", ".xyzl")):
            fmt = "xyzl"
        write_cloud(merged, args.output, fmt)
        pairs.append(("output", args.output))
    _emit(pairs, out)


def _cmd_loss(args, out):
    coarse = read_cloud(args.coarse, args.format)
    final = read_cloud(args.final, args.format)
    gt = read_cloud(args.gt, args.format)
    if args.k * args.n != len(coarse):
        raise ValidationError(
            f"--k {args.k} x --n {args.n} must equal the coarse size {len(coarse)}"
        )
    batch = ElementBatch(coarse.points.reshape(args.k, args.n, 3))
    report = joint_loss(
        coarse, final, gt, batch,
        weights=LossWeights(alpha=args.alpha, beta=args.beta),
        emd_cfg=_auction_config(args),
        exp_cfg=ExpansionConfig(lambda_factor=args.lambda_factor),
    )
    _emit([("emd_coarse", report.emd_coarse), ("expansion", report.expansion),
           ("emd_final", report.emd_final), ("alpha", args.alpha),
           ("beta", args.beta), ("total", report.total)], out)


_COMMANDS = {
    "gen": _cmd_gen,
    "chamfer": _cmd_chamfer,
    "emd": _cmd_emd,
    "expansion": _cmd_expansion,
    "sample": _cmd_sample,
    "merge": _cmd_merge,
    "loss": _cmd_loss,
}


def run(argv=None, out=None, err=None):
    """Parse and run one invocation; returns the exit code."""
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _CliArgumentError as exc:
        err.write(f"error: {exc}\n")
        return _EXIT_VALIDATION
    try:
        if getattr(args, "threads", 1) < 1:
            raise ValidationError("--threads must be >= 1")
        if getattr(args, "seed", 0) < 0:
            raise ValidationError("--seed must be >= 0")
        _COMMANDS[args.command](args, out)
        return 0
    except (ParseError, OSError) as exc:
        err.write(f"error: {exc}\n")
        return _EXIT_IO
    except (ValidationError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return _EXIT_VALIDATION


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
