"""Command-line interface.

Subcommands: ``synth`` (test shapes), ``hull`` / ``hull-approx`` (ADMM
convex hulls), ``segment`` (label-driven segmentation), ``oracle-hull``
(computational-geometry baseline), ``compare`` (equivalent-radius
Hausdorff error), and ``report`` (figures from a diagnostics CSV). Every
command is deterministic for a fixed configuration and seed.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io as cio
from .geometry import convex_layers_approx, exact_hull, hull_error, mask_points, rasterize_hull
from .grid import GridShape, MaskField
from .models import HullParams, ModelSpec, SegParams
from .solver import AdmmParams, solve
from .synth import SHAPE_NAMES, synth


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(part) for part in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"bad --dims {text!r}; expected e.g. 128x128 or 64x64x64")
    if len(dims) not in (2, 3):
        raise ValueError(f"--dims needs 2 or 3 axes, got {len(dims)}")
    return dims


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epsilon", type=float, default=None, help="constraint band half-width")
    parser.add_argument("--rho2", type=float, default=None, help="Hessian-split penalty")
    parser.add_argument("--rho3", type=float, default=None, help="identity-split penalty")
    parser.add_argument("--rho1", type=float, default=None,
                        help="gradient-split penalty (default 2*sqrt(rho2*rho3))")
    parser.add_argument("--max-iters", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None, help="relative sup-norm phi change")
    parser.add_argument("--band-refresh", type=int, default=None,
                        help="iterations between band recomputation")
    parser.add_argument("--init", default=None, help="initial shape mask (default: built in)")
    parser.add_argument("--diag", default=None, help="write per-iteration diagnostics CSV here")
    parser.add_argument("--figures", default=None, help="render figures into this directory")


def _admm_params(args, kind: str) -> AdmmParams:
    overrides = {}
    for flag, name in (("epsilon", "epsilon"), ("rho2", "rho2"), ("rho3", "rho3"),
                       ("rho1", "rho1"), ("max_iters", "max_iters"), ("tol", "tol"),
                       ("band_refresh", "band_refresh")):
        value = getattr(args, flag)
        if value is not None:
            overrides[name] = value
    return AdmmParams.for_model(kind, **overrides)


def _finish_solve(args, spec, params) -> int:
    init = cio.load_mask(args.init) if args.init else None
    result = solve(spec, init_mask=init, params=params)
    cio.save_mask(args.out, result.mask)
    if args.diag:
        cio.write_diagnostics(args.diag, result.history)
    if args.figures:
        from .report import render_run_figures

        background = spec.image.values if spec.image is not None else (
            spec.input_set.values.astype(float) if spec.input_set is not None else None
        )
        render_run_figures(args.figures, result.history, result.mask, background)
    status = "converged" if result.converged else "max-iters"
    print(f"{spec.kind}: {result.iterations} iterations ({status}), "
          f"mask cells {result.mask.count}, wrote {args.out}")
    return 0


def _cmd_synth(args) -> int:
    mask = synth(args.shape, _parse_dims(args.dims), args.outliers, args.seed)
    cio.save_mask(args.out, mask)
    print(f"synth {args.shape}: {mask.count} cells on {'x'.join(map(str, mask.shape.dims))}, "
          f"wrote {args.out}")
    return 0


def _cmd_hull(args) -> int:
    x = cio.load_mask(args.input)
    spec = ModelSpec.exact_hull(x)
    return _finish_solve(args, spec, _admm_params(args, spec.kind))


def _cmd_hull_approx(args) -> int:
    x = cio.load_mask(args.input)
    softplus_t = None if args.exact_penalty else args.softplus_t
    spec = ModelSpec.approx_hull(x, HullParams(lam=args.lam, softplus_t=softplus_t))
    return _finish_solve(args, spec, _admm_params(args, spec.kind))


def _cmd_segment(args) -> int:
    image = cio.to_unit_interval(cio.load_grid_data(args.image))
    labels_out, labels_in = cio.load_labels(args.labels)
    seg = SegParams(a=args.a, b=args.b, mu=args.mu, alpha_h=args.alpha_h,
                    g_alpha=args.g_alpha, g_beta=args.g_beta, sigma=args.sigma)
    spec = ModelSpec.segmentation(image, labels_in, labels_out, seg)
    return _finish_solve(args, spec, _admm_params(args, spec.kind))


def _cmd_compare(args) -> int:
    candidate = cio.load_mask(args.candidate)
    reference = cio.load_mask(args.reference)
    err = hull_error(candidate, reference)
    print(f"{100.0 * err:.2f}")
    return 0


def _cmd_oracle_hull(args) -> int:
    x = cio.load_mask(args.input)
    points = mask_points(x)
    hull = convex_layers_approx(points, args.layers) if args.layers else exact_hull(points)
    if hull.degenerate:
        raise ValueError("input points are affinely degenerate; no full-dimensional hull")
    mask = rasterize_hull(hull, x.shape)
    cio.save_mask(args.out, mask)
    print(f"oracle hull: {len(hull.vertices)} vertices, {mask.count} cells, wrote {args.out}")
    return 0


def _cmd_report(args) -> int:
    from .report import render_run_figures

    history = cio.read_diagnostics(args.diag)
    mask = cio.load_mask(args.mask) if args.mask else None
    background = None
    if args.input:
        background = np.asarray(cio.load_grid_data(args.input), dtype=float)
    written = render_run_figures(args.out_dir, history, mask, background)
    print("wrote " + ", ".join(written))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convexsdf",
        description="Convexity-constrained level-set solvers and exact-geometry baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic shape mask")
    p.add_argument("--shape", required=True,
                   help=f"one of {', '.join(SHAPE_NAMES)}; append :ARG for size/gap")
    p.add_argument("--dims", required=True, help="e.g. 128x128 or 64x64x64")
    p.add_argument("--outliers", type=float, default=0.0,
                   help="outlier count as a fraction of shape cells")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("hull", help="exact convex hull of a mask via ADMM")
    p.add_argument("--input", required=True, help="u8 mask volume")
    p.add_argument("--out", required=True)
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_hull)

    p = sub.add_parser("hull-approx", help="outlier-tolerant convex hull via ADMM")
    p.add_argument("--input", required=True, help="u8 mask volume")
    p.add_argument("--out", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=800.0,
                   help="outlier penalty weight")
    p.add_argument("--softplus-t", type=float, default=5.0, help="penalty ramp sharpness")
    p.add_argument("--exact-penalty", action="store_true",
                   help="use the exact positive part instead of softplus")
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_hull_approx)

    p = sub.add_parser("segment", help="2-phase segmentation with convexity prior")
    p.add_argument("--image", required=True)
    p.add_argument("--labels", required=True, help="raster: 0 unlabeled, 1 background, 2 object")
    p.add_argument("--out", required=True)
    p.add_argument("--mu", type=float, default=1.0, help="boundary term weight")
    p.add_argument("--alpha-h", type=float, default=1.5, help="Heaviside smoothing width")
    p.add_argument("--a", type=float, default=1.0, help="similarity distance weight")
    p.add_argument("--b", type=float, default=10.0, help="similarity intensity weight")
    p.add_argument("--sigma", type=float, default=1.5, help="edge detector Gaussian width")
    p.add_argument("--g-alpha", type=float, default=1.0, help="edge detector scale")
    p.add_argument("--g-beta", type=float, default=10.0, help="edge detector sharpness")
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("compare", help="equivalent-radius Hausdorff error, in percent")
    p.add_argument("--candidate", required=True)
    p.add_argument("--reference", required=True)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("oracle-hull", help="exact or onion-peeled hull, rasterized")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--layers", type=int, default=0,
                   help="peel roughly this many boundary points first")
    p.set_defaults(func=_cmd_oracle_hull)

    p = sub.add_parser("report", help="render figures from a diagnostics CSV")
    p.add_argument("--diag", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--mask", default=None)
    p.add_argument("--input", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
