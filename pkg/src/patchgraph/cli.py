"""Command-line entry point: solve, track, and eval subcommands.

Every numeric or boolean setting of :class:`config.RunConfig` is
exposed as a flag; ``--config FILE`` supplies key=value overrides with
flag > file > default precedence.  Exit codes: 0 success, 1 runtime
failure, 2 usage or format error.
"""

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import bench
from .config import RunConfig, resolve_config
from .errors import (FormatError, InputError, NumericalError,
                     ParameterError, PatchGraphError)
from .graphlearn import (VARIANTS, read_problem_file, solve_variant,
                         write_matrix_file)
from .tracker import PatchGraphTracker

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _add_config_flags(parser):
    parser.add_argument("--config", metavar="FILE",
                        help="key=value config file")
    for field in dataclasses.fields(RunConfig):
        flag = "--" + field.name.replace("_", "-")
        kind = field.type.__name__ if isinstance(field.type, type) \
            else field.type
        if field.name == "variant":
            parser.add_argument(flag, choices=VARIANTS, default=None,
                                help="solver/tracker variant")
        elif kind == "bool":
            parser.add_argument(flag, action=argparse.BooleanOptionalAction,
                                default=None, help=f"({field.default})")
        elif kind == "int":
            parser.add_argument(flag, type=int, default=None,
                                help=f"(default {field.default})")
        elif kind == "float":
            parser.add_argument(flag, type=float, default=None,
                                help=f"(default {field.default})")


def _resolve(args):
    overrides = {f.name: getattr(args, f.name, None)
                 for f in dataclasses.fields(RunConfig)}
    return resolve_config(args.config, overrides)


def _echo_comment_lines(cfg):
    return [f"# {line}" for line in cfg.echo_lines()]


def cmd_solve(args):
    cfg = _resolve(args)
    X, seeds = read_problem_file(args.matrix)
    sol = solve_variant(X, seeds, cfg.graph_params(), variant=cfg.variant)
    os.makedirs(args.out, exist_ok=True)
    write_matrix_file(os.path.join(args.out, "w.txt"), sol.w)
    write_matrix_file(os.path.join(args.out, "A.txt"), sol.A)
    trace_path = os.path.join(args.out, "trace.txt")
    with open(trace_path, "w") as fh:
        fh.write(f"# variant = {sol.variant}\n")
        for line in _echo_comment_lines(cfg):
            fh.write(line + "\n")
        fh.write(f"# converged = {sol.converged}\n")
        fh.write(f"# iterations = {sol.iterations}\n")
        for value in sol.trace:
            fh.write(f"{value:.17g}\n")
    print(f"wrote w.txt, A.txt, trace.txt to {args.out}")
    return EXIT_OK


def _format_record(rec):
    b = rec.box
    return (f"{rec.frame},{b.lx:.6f},{b.ly:.6f},{b.w:.6f},{b.h:.6f},"
            f"{rec.confidence:.6f},{int(rec.updated)}")


def cmd_track(args):
    cfg = _resolve(args)
    spec = bench.load_otb_sequence(args.sequence)
    frames = bench.load_sequence(spec.image_dir)
    tracker = PatchGraphTracker(**cfg.tracker_kwargs())
    records = [tracker.start(frames[0], spec.boxes[0])]
    for frame in frames[1:]:
        records.append(tracker.step(frame))
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "results.csv")
    with open(out_path, "w") as fh:
        for line in _echo_comment_lines(cfg):
            fh.write(line + "\n")
        fh.write("frame,lx,ly,w,h,confidence,updated\n")
        for rec in records:
            fh.write(_format_record(rec) + "\n")
    print(f"wrote {out_path} ({len(records)} frames)")
    return EXIT_OK


def cmd_eval(args):
    cfg = _resolve(args)
    if not os.path.isdir(args.root):
        raise InputError(f"dataset root not found: {args.root!r}")
    seq_dirs = sorted(
        os.path.join(args.root, name) for name in os.listdir(args.root)
        if os.path.isdir(os.path.join(args.root, name)))
    if not seq_dirs:
        raise InputError(f"no sequence directories under {args.root!r}")

    def factory(frame0, box0):
        tracker = PatchGraphTracker(**cfg.tracker_kwargs())
        tracker.start(frame0, box0)
        return tracker

    os.makedirs(args.out, exist_ok=True)
    reports = []
    for seq_dir in seq_dirs:
        try:
            spec = bench.load_otb_sequence(seq_dir)
            _, report = bench.run_ope(spec, factory)
        except (PatchGraphError, OSError) as exc:
            print(f"sequence {seq_dir}: {exc}", file=sys.stderr)
            continue
        bench.emit_plot_data(report, args.out, prefix=f"{report['name']}_")
        reports.append(report)
    if not reports:
        print("no sequence completed", file=sys.stderr)
        return EXIT_RUNTIME

    tags = sorted({tag for r in reports for tag in r["attributes"]})
    report_path = os.path.join(args.out, "report.txt")
    with open(report_path, "w") as fh:
        for line in _echo_comment_lines(cfg):
            fh.write(line + "\n")
        fh.write(f"sequences: {len(reports)}\n")
        fh.write(f"mean_pr20: {np.mean([r['pr20'] for r in reports]):.6f}\n")
        fh.write(f"mean_sr_auc: "
                 f"{np.mean([r['sr_auc'] for r in reports]):.6f}\n")
        fh.write(f"mean_sr_at_05: "
                 f"{np.mean([r['sr_at_05'] for r in reports]):.6f}\n")
        for r in reports:
            fh.write(f"{r['name']}.pr20: {r['pr20']:.6f}\n")
            fh.write(f"{r['name']}.sr_auc: {r['sr_auc']:.6f}\n")
            fh.write(f"{r['name']}.sr_at_05: {r['sr_at_05']:.6f}\n")
            fh.write(f"{r['name']}.fps: {r['fps']:.2f}\n")
        for tag in tags:
            group = bench.group_by_attribute(reports, tag)
            if group["empty"]:
                fh.write(f"attr.{tag}: empty\n")
            else:
                fh.write(f"attr.{tag}.count: {group['count']}\n")
                fh.write(f"attr.{tag}.pr20: {group['pr20']:.6f}\n")
                fh.write(f"attr.{tag}.sr_auc: {group['sr_auc']:.6f}\n")
    print(f"wrote {report_path} ({len(reports)} sequences)")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="patchgraph",
        description="Patch-graph weighted tracking toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the graph solver on a "
                             "problem file")
    p_solve.add_argument("matrix", help="problem file (matrix + seeds)")
    p_solve.add_argument("--out", default=".", help="output directory")
    _add_config_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_track = sub.add_parser("track", help="track one sequence directory")
    p_track.add_argument("sequence", help="sequence directory (OTB layout)")
    p_track.add_argument("--out", default=".", help="output directory")
    _add_config_flags(p_track)
    p_track.set_defaults(func=cmd_track)

    p_eval = sub.add_parser("eval", help="evaluate a dataset directory")
    p_eval.add_argument("root", help="directory of sequence directories")
    p_eval.add_argument("--out", default="eval_out",
                        help="output directory")
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, InputError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, PatchGraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
