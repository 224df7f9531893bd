"""Command-line entry point ``tubal``.

Exit codes: 0 success, 2 argument error, 3 divergence, 4 I/O or format
error, 1 anything else raised by the package.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .data import (gen_gaussian_op, gen_lowrank, make_checkerboard, make_facade,
                   n_measurements, occlude_center, recovery_error)
from .exceptions import ArgumentError, DivergenceError, FormatError, ShapeError, TubalError
from .experiments import ExperimentSpec, run_experiment
from .objectives import inpainting_objective, noisy_observe, save_measurements
from .ppm import load_image, save_image
from .solvers import VARIANTS, SolverConfig, solve
from .tensor_core import read_tns3, write_tns3
from .tsvd import stht, tubal_rank

EXIT_OK, EXIT_ERROR, EXIT_ARGS, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3, 4
IMAGE_RANK_TOL = 1e-6


def _box(text):
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    if w < 0 or h < 0:
        raise argparse.ArgumentTypeError("box sides must be nonnegative")
    return w, h


def _cmd_gen(args):
    if args.what == "lowrank":
        write_tns3(gen_lowrank(*args.dims, args.rank, seed=args.seed), args.out)
    elif args.what == "checkerboard":
        save_image(make_checkerboard(args.size or 128, cell=args.cell, seed=args.seed), args.out)
    elif args.what == "facade":
        save_image(make_facade(args.size or 200, seed=args.seed), args.out)
    else:
        dims = tuple(args.dims)
        if (args.m is None) == (args.rate is None):
            raise ArgumentError("give exactly one of --m or --rate")
        M = args.m if args.m is not None else n_measurements(dims, args.rate)
        op = gen_gaussian_op(M, dims, seed=args.seed)
        y = None
        if args.truth:
            y = noisy_observe(op, read_tns3(args.truth), args.noise, seed=args.seed + 1)
        save_measurements(args.out, op, y)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_tsvd(args):
    X = read_tns3(args.input)
    report = tubal_rank(X, args.rel_tol)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
    if args.out:
        if args.rank is None:
            raise ArgumentError("--out needs --rank")
        write_tns3(stht(X, args.rank), args.out)
    print(f"tubal rank {report.tubal_rank}")
    return EXIT_OK


def _cmd_cs_run(args):
    spec = ExperimentSpec.from_json(args.spec)
    if args.output_dir:
        spec.output_dir = args.output_dir
    result = run_experiment(spec)
    n_div = sum(r["status"] == "diverged" for r in result.rows)
    print(f"{len(result.rows)} runs, {n_div} diverged; summary in "
          f"{os.path.join(result.output_dir, 'summary.csv')}")
    return EXIT_DIVERGED if result.diverged else EXIT_OK


def _cmd_inpaint(args):
    img = load_image(args.image)
    if img.shape[2] != 3:
        raise ShapeError("expected an RGB image")
    rank = args.rank
    if rank is None:
        rank = tubal_rank(img, IMAGE_RANK_TOL).tubal_rank
        print(f"measured tubal rank {rank} at rel_tol {IMAGE_RANK_TOL:g}")
    w, h = args.mask_box
    op, y = occlude_center(img, w, h)
    cfg = SolverConfig(rank=rank, step_size=args.step_size, max_iters=args.max_iters,
                       tol=args.tol, variant=args.variant, batch_size=args.batch_size,
                       seed=args.seed, ground_truth=img)
    obj = inpainting_objective(op, y, n_blocks=args.n_blocks)
    try:
        trace = solve(obj, cfg)
    except DivergenceError as exc:
        if args.trace and exc.trace is not None:
            exc.trace.to_csv(args.trace)
        raise
    if args.trace:
        trace.to_csv(args.trace)
    save_image(trace.X, args.out)
    print(f"{trace.status} after {trace.n_iter} iterations, "
          f"RE {recovery_error(trace.X, img):.3e}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="tubal", description="Low tubal rank tensor recovery.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate synthetic data")
    g.add_argument("what", choices=("lowrank", "sensing", "checkerboard", "facade"))
    g.add_argument("--dims", type=int, nargs=3, default=(20, 20, 10), metavar=("N1", "N2", "N3"))
    g.add_argument("--rank", type=int, default=1)
    g.add_argument("--size", type=int, help="image side length")
    g.add_argument("--cell", type=int, default=16, help="checkerboard cell size")
    g.add_argument("--m", type=int, help="number of measurements")
    g.add_argument("--rate", type=float, help="sampling rate M / (n1 n2 n3)")
    g.add_argument("--truth", help="TNS3 tensor to observe (sensing only)")
    g.add_argument("--noise", type=float, default=0.0, help="relative noise level")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True, help="output file (directory for sensing)")
    g.set_defaults(func=_cmd_gen)

    t = sub.add_parser("tsvd", help="tubal rank report and rank-r truncation")
    t.add_argument("--input", required=True)
    t.add_argument("--rank", type=int)
    t.add_argument("--out")
    t.add_argument("--report")
    t.add_argument("--rel-tol", type=float, default=1e-10)
    t.set_defaults(func=_cmd_tsvd)

    c = sub.add_parser("cs-run", help="run an experiment spec")
    c.add_argument("--spec", required=True)
    c.add_argument("--output-dir", help="override the output directory named in the experiment file")
    c.set_defaults(func=_cmd_cs_run)

    i = sub.add_parser("inpaint", help="recover a centered occlusion of a PPM image")
    i.add_argument("--image", required=True)
    i.add_argument("--mask-box", type=_box, required=True, metavar="WxH")
    i.add_argument("--rank", type=int, help="default: measured tubal rank of the image")
    i.add_argument("--out", required=True)
    i.add_argument("--trace")
    i.add_argument("--variant", choices=VARIANTS, default="istht")
    i.add_argument("--step-size", type=float, default=1.0)
    i.add_argument("--max-iters", type=int, default=500)
    i.add_argument("--tol", type=float, default=1e-10)
    i.add_argument("--batch-size", type=int)
    i.add_argument("--n-blocks", type=int, default=1)
    i.add_argument("--seed", type=int, default=0)
    i.set_defaults(func=_cmd_inpaint)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen" and args.seed is None and args.what in ("lowrank", "sensing"):
        args.seed = 0
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"tubal: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (FormatError, OSError) as exc:
        print(f"tubal: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ArgumentError, ShapeError) as exc:
        print(f"tubal: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except TubalError as exc:
        print(f"tubal: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
