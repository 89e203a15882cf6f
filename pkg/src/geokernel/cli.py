"""
Command-line interface.

Exit codes: 0 success, 2 usage or input error, 3 I/O failure, 4 numerical
failure, 5 acceptance failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import contour as contour_mod
from . import experiments, geometry, interpolant, surface_ops, testbeds
from .exceptions import (DegenerateGradient, DuplicatePoints, IllConditioned,
                         MalformedModelFile, NonDifferentiableKernel)
from .io import format_cloud, read_cloud, write_text
from .kernels import parse_kernel

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _read_cloud(path):
    try:
        return read_cloud(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None
    except ValueError as exc:
        raise CliError(f"{path}: {exc}", EXIT_USAGE) from None


def _read_model(path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None
    try:
        return interpolant.deserialize(data)
    except MalformedModelFile as exc:
        raise CliError(f"{path}: {exc}", EXIT_USAGE) from None


def _emit(args, text):
    """Write ``text`` to ``--out`` (or stdout)."""
    path = args.out
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        write_text(path, text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


def _kernel(args):
    try:
        return parse_kernel(args.kernel)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None


# ------------------------------------------------------------------ commands

def cmd_sample(args):
    try:
        surface = testbeds.parse_surface(args.surface)
        X = testbeds.sample(surface, args.m, args.sampler, args.seed)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    comments = [f"surface={testbeds.format_surface(surface)}", f"sampler={args.sampler}",
                f"m={X.shape[0]}", f"seed={args.seed}"]
    _emit(args, format_cloud(X, comments=comments))


def cmd_fit(args):
    X, y = _read_cloud(args.cloud)
    if args.ones:
        y = np.ones(X.shape[0])
    elif args.values is not None:
        Xv, y = _read_cloud(args.values)
        if y is None:
            raise CliError(f"{args.values} has no y column", EXIT_USAGE)
        if Xv.shape[0] != X.shape[0]:
            raise CliError(f"{args.values} has {Xv.shape[0]} rows, the cloud has "
                           f"{X.shape[0]}", EXIT_USAGE)
    elif y is None:
        raise CliError("give --ones, --values FILE, or a cloud with a y column", EXIT_USAGE)
    model, report = interpolant.fit(_kernel(args), X, y, args.alpha)
    stats = geometry.level_stats(model, X) if args.ones else None
    msg = (f"m={X.shape[0]} residual={report.residual_norm:.3e} "
           f"jitter={report.jitter_added:.3e} attempts={report.cholesky_attempts}")
    if stats is not None:
        msg += f" mean_level={stats.mean_level!r}"
    print(msg, file=sys.stderr)
    _emit(args, interpolant.serialize(model).decode("utf-8") + "\n")


def cmd_geometry(args):
    model = _read_model(args.model)
    P, _ = _read_cloud(args.points)
    if P.shape[1] != model.dim:
        raise CliError(f"query points have dimension {P.shape[1]}, model {model.dim}",
                       EXIT_USAGE)
    d = model.dim
    frames = geometry.frames(model, P, args.tau_grad)
    _, g, _ = interpolant.evaluate(model, P, 1)
    gn = np.linalg.norm(g, axis=1)
    header = ([f"x{i + 1}" for i in range(d)] + [f"nu{i + 1}" for i in range(d)]
              + ["grad_norm"] + [f"kappa{i + 1}" for i in range(d - 1)]
              + ["H", "K", "status"])
    lines = [",".join(header)]
    for k, fr in enumerate(frames):
        x = [repr(float(v)) for v in P[k]]
        if fr is None:
            nan = ["nan"] * (d + (d - 1) + 2)
            lines.append(",".join(x + nan[:d] + [repr(float(gn[k]))] + nan[d:] + ["DEGENERATE"]))
            continue
        row = (x + [repr(float(v)) for v in fr.normal] + [repr(fr.grad_norm)]
               + [repr(float(v)) for v in fr.principal_curvatures]
               + [repr(fr.mean_curvature), repr(fr.gauss_curvature), "OK"])
        lines.append(",".join(row))
    _emit(args, "\n".join(lines) + "\n")


def cmd_operator(args):
    X, y = _read_cloud(args.cloud)
    if args.values is not None:
        Xv, y = _read_cloud(args.values)
        if y is None or Xv.shape[0] != X.shape[0]:
            raise CliError(f"{args.values} must hold one y value per cloud point", EXIT_USAGE)
    P, _ = _read_cloud(args.eval) if args.eval else (X, None)
    try:
        kind = surface_ops.parse_kind(args.kind, X.shape[1])
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    sig_spec = parse_kernel(args.signature_kernel) if args.signature_kernel else None
    op = surface_ops.assemble_operator(_kernel(args), X, args.alpha, P, kind, sig_spec,
                                       args.tau_grad)
    if args.assemble:
        _emit(args, op.to_csv())
        return
    if y is None:
        raise CliError("--apply needs values (--values FILE or a y column)", EXIT_USAGE)
    out = op.apply(y)
    comments = [f"kind={surface_ops.format_kind(kind)}"]
    _emit(args, format_cloud(P, out, comments))


def _parse_box(text, dim):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise CliError(f"malformed box {text!r}", EXIT_USAGE) from None
    if len(vals) != 2 * dim:
        raise CliError(f"box needs {2 * dim} numbers lo1,hi1,...; got {len(vals)}", EXIT_USAGE)
    try:
        return contour_mod.check_box(np.array(vals).reshape(dim, 2), dim)
    except ValueError as exc:
        raise CliError(f"malformed box: {exc}", EXIT_USAGE) from None


def cmd_contour(args):
    model = _read_model(args.model)
    d = model.dim
    box = (_parse_box(args.box, d) if args.box
           else contour_mod.default_box(model.centers))
    if args.level == "mean":
        level = geometry.level_stats(model, model.centers).mean_level
    else:
        try:
            level = float(args.level)
        except ValueError:
            raise CliError(f"level must be a number or 'mean', got {args.level!r}",
                           EXIT_USAGE) from None
    try:
        grid = contour_mod.sample_grid(model, box, args.resolution)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    _emit(args, format_cloud(grid.points(), grid.values.ravel(),
                             [f"level={level!r}", f"resolution={args.resolution}"]))
    if d == 2:
        lines = contour_mod.marching_squares(grid.axes[0], grid.axes[1], grid.values, level)
        text = ["# level=" + repr(level), "line,closed,x1,x2"]
        for k, line in enumerate(lines):
            closed = contour_mod.is_closed(line)
            text += [f"{k},{int(closed)},{float(p[0])!r},{float(p[1])!r}" for p in line]
        summary = f"level={level!r} polylines={len(lines)} closed={sum(map(contour_mod.is_closed, lines))}"
        print(summary, file=sys.stderr)
        if args.polylines:
            try:
                write_text(args.polylines, "\n".join(text) + "\n")
            except OSError as exc:
                raise CliError(f"cannot write {args.polylines}: {exc.strerror or exc}",
                               EXIT_IO) from None
    elif args.polylines:
        raise CliError("polyline extraction needs a planar model", EXIT_USAGE)


def cmd_experiment(args):
    names = list(experiments.EXPERIMENTS) if args.name == "all" else [args.name]
    reports = []
    for name in names:
        kwargs = dict(kernel=args.kernel_override, alpha=args.alpha_override,
                      seed=args.seed, m=args.m)
        reports.append(experiments.run(name, **kwargs))
    md = "".join(r.to_markdown() + "\n" for r in reports)
    _emit(args, md)
    if args.csv:
        body = "".join(r.to_csv() if i == 0 else r.to_csv().split("\n", 1)[1]
                       for i, r in enumerate(reports))
        try:
            write_text(args.csv, body)
        except OSError as exc:
            raise CliError(f"cannot write {args.csv}: {exc.strerror or exc}", EXIT_IO) from None
    if not all(r.passed for r in reports):
        raise CliError("acceptance failure: " + ", ".join(r.name for r in reports if not r.passed),
                       EXIT_ACCEPTANCE)


# -------------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(f"{self.prog}: {message}", EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kernel", default="laplace:eps=1",
                        help="gauss:l=<l>, laplace or laplace:eps=<eps> (default %(default)s)")
    common.add_argument("--alpha", type=float, default=0.0, help="regularization weight")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tau-grad", type=float, default=geometry.TAU_GRAD,
                        help="gradient lengths below this are degenerate")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="geokernel", description="Kernel geometry of point clouds.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", parents=[common], help="sample a test surface")
    s.add_argument("surface", help="e.g. sphere:r=1, torus:R1=2,R2=0.5, quad:a=1,b=2,h=0.5,n=16")
    s.add_argument("--m", type=int, default=256)
    s.add_argument("--sampler", default="default",
                   choices=["default", "fibonacci", "rejection", "random", "grid", "subset"])
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("fit", parents=[common], help="fit a kernel model")
    s.add_argument("cloud")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--ones", action="store_true", help="fit the signature function")
    g.add_argument("--values", help="CSV with a y column")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("geometry", parents=[common], help="normals and curvatures")
    s.add_argument("model")
    s.add_argument("points")
    s.set_defaults(func=cmd_geometry)

    s = sub.add_parser("operator", parents=[common], help="surface gradient / Laplace-Beltrami")
    s.add_argument("cloud")
    s.add_argument("--values")
    s.add_argument("--eval", help="evaluation points (default: the cloud)")
    s.add_argument("--kind", default="lb", help="lb or grad<i> (1-based)")
    s.add_argument("--signature-kernel", default=None)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--apply", action="store_true", default=True)
    g.add_argument("--assemble", action="store_true")
    s.set_defaults(func=cmd_operator)

    s = sub.add_parser("contour", parents=[common], help="grid values and level polylines")
    s.add_argument("model")
    s.add_argument("--box", help="lo1,hi1,lo2,hi2,... (default: inflated cloud box)")
    s.add_argument("--resolution", type=int, default=200)
    s.add_argument("--level", default="1", help="number or 'mean'")
    s.add_argument("--polylines", help="write polylines CSV here (planar models)")
    s.set_defaults(func=cmd_contour)

    s = sub.add_parser("experiment", parents=[common], help="run a numerical experiment")
    s.add_argument("name", choices=sorted(experiments.EXPERIMENTS) + ["all"])
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--csv", help="also write the report rows as CSV")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command == "experiment":
            # experiment defaults come from the experiment unless flags are given
            argv_list = sys.argv[1:] if argv is None else list(argv)
            given = {a.split("=")[0] for a in argv_list}
            args.kernel_override = args.kernel if "--kernel" in given else None
            args.alpha_override = args.alpha if "--alpha" in given else None
        args.func(args)
        return EXIT_OK
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (DegenerateGradient, IllConditioned, NonDifferentiableKernel) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DuplicatePoints, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
