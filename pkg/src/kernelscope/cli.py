"""kernelscope command line.

Exit codes: 0 success, 1 analysis or tolerance failure, 2 usage error.
"""

import argparse
import csv
import os
import sys
from importlib import resources

from . import analyzer, report
from .accumulate import ChunkedTwoStage, Sequential, parse_scheme
from .conv_core import ConvShape, count_nondecreasing, geometric_sweep, validate
from .exec_model import (
    CHUNK_COUNT,
    DeviceSpec,
    ExecPath,
    Variant,
    launch_geometry,
    memory_traffic,
    resource_check,
    resource_warnings,
    shared_mem_footprint,
)
from .timing import TimingLogError, load

DEFAULT_SHAPE = (16384, 128, 48, 48)
FIXTURE_ENV = "KERNELSCOPE_FIXTURES"

TIMING_HELP = """\
timing CSV schema: header 'variant,path,runtime_ms,run_id'; variant in
{naive,coalesced,shared,warp}; path in {fwd,bwd_in,bwd_k,epoch,conv_total};
all times in milliseconds (epoch rows too); run_id optional.  Repeated runs
are averaged after dropping the first sample when three or more exist."""


def fixture_dir():
    env = os.environ.get(FIXTURE_ENV)
    if env:
        return env
    return str(resources.files("kernelscope") / "fixtures")


def fixture(name):
    return os.path.join(fixture_dir(), name)


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _scheme(text):
    try:
        return parse_scheme(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _enum(cls):
    def conv(text):
        try:
            return cls.parse(text)
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e)) from None

    return conv


def _shape_flags(p, defaults):
    for axis, d in zip("BHLK", defaults):
        p.add_argument(f"--{axis}", type=_positive, default=d, help=f"default {d}")


def _device_flag(p):
    p.add_argument("--device", default=None, help="device spec JSON (default: bundled p100.json)")


def _timings_flag(p):
    p.add_argument("--timings", default=None, help="timing CSV (default: bundled table2.csv)")


def _shape(args):
    return ConvShape(args.B, args.H, args.L, args.K)


def _device(args):
    return args.device or fixture("p100.json")


def _timings(args):
    return args.timings or fixture("table2.csv")


# -- validate -----------------------------------------------------------------


def _validation_rows(reports):
    for r in reports:
        yield from r.rows()


def cmd_validate(args, out):
    schemes = args.scheme or [Sequential(), ChunkedTwoStage()]
    failures = []
    if args.sweep:
        shapes = geometric_sweep(H=args.H, L=args.L, K=args.K, B0=args.sweep_b0, steps=args.sweep_steps)
    else:
        shapes = [_shape(args)]
    reports = [validate(s, args.seed, schemes, fused=args.fused) for s in shapes]

    out.write(f"seed={args.seed} schemes={','.join(map(str, schemes))} fused={args.fused}\n")
    out.write(f"{'B':>6} {'H':>4} {'L':>4} {'K':>4}  {'path':<7} {'scheme':<14} {'max_abs':>11} {'max_rel':>11}\n")
    for row in _validation_rows(reports):
        out.write(
            f"{row['B']:>6} {row['H']:>4} {row['L']:>4} {row['K']:>4}  {row['path']:<7} {row['scheme']:<14}"
            f" {row['max_abs']:11.3e} {row['max_rel']:11.3e}\n"
        )
    for r in reports:
        if len(schemes) > 1:
            out.write(f"dk spread across schemes at {r.shape}: abs {r.dk_spread_abs:.3e} rel {r.dk_spread_rel:.3e}\n")
        for path in ("fwd", "bwd_in"):
            e = r.error(path)
            if e.max_abs > args.tol_abs:
                failures.append(f"{path} max abs error {e.max_abs:.3e} > {args.tol_abs:g} at {r.shape}")
        for e in r.dk_errors():
            if e.max_rel > args.tol_dk_rel:
                failures.append(f"bwd_k[{e.scheme}] max rel error {e.max_rel:.3e} > {args.tol_dk_rel:g} at {r.shape}")
    if args.sweep:
        for s in schemes:
            series = [r.error("bwd_k", str(s)).max_abs for r in reports]
            ok = count_nondecreasing(series)
            need = min(3, len(series) - 1)
            out.write(f"bwd_k[{s}] error trend: non-decreasing in {ok} of {len(series) - 1} steps\n")
            if ok < need:
                failures.append(f"bwd_k[{s}] error trend non-decreasing in only {ok} steps")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, ["B", "H", "L", "K", "path", "scheme", "max_abs", "max_rel"], lineterminator="\n")
            w.writeheader()
            for row in _validation_rows(reports):
                w.writerow({**row, "max_abs": f"{row['max_abs']:.6e}", "max_rel": f"{row['max_rel']:.6e}"})
    for f in failures:
        out.write(f"FAIL: {f}\n")
    out.write("PASS\n" if not failures else "")
    return 1 if failures else 0


# -- analyze / roofline -------------------------------------------------------


def _bundle(args):
    timings, device_path = _timings(args), _device(args)
    device = DeviceSpec.load(device_path)
    shape = _shape(args)
    log = load(timings)
    prov = report.provenance(timings, device_path, device, shape, args.chunk_count)
    return report.build(log, shape, device, prov, chunk_count=args.chunk_count), device


def cmd_analyze(args, out):
    bundle, _ = _bundle(args)
    report.write(bundle, args.out)
    out.write(report.text_report(bundle))
    out.write(f"\nwrote {args.out}/{{speedups,bandwidth,roofline,epoch}}.csv, report.txt, provenance.json\n")
    return 0


def cmd_roofline(args, out):
    timings, device_path = _timings(args), _device(args)
    device = DeviceSpec.load(device_path)
    shape = _shape(args)
    log = load(timings)

    def traffic(v, p, s):
        return memory_traffic(v, p, s, chunk_count=args.chunk_count)

    points = analyzer.roofline_points(analyzer.runtime_table(log.records), shape, device, traffic)
    bundle = report.ReportBundle(provenance={}, speedups=[], bandwidth=[], roofline=points)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "roofline.csv"), "w", newline="") as fh:
        fh.write(report.roofline_csv(bundle))
    out.write(f"ridge {analyzer.ridge(device):.2f} FLOP/byte ({device.peak_fp32:g} GFLOP/s / {device.peak_bw:g} GB/s)\n")
    for p in points:
        note = " (lower-bound AI)" if p.lower_bound_ai else ""
        out.write(f"{p.variant.value:<10} {p.path.value:<7} ai={p.ai:.2f} {p.throughput:.2f} GFLOP/s roof={p.roof:.2f} {p.bound.value}{note}\n")
    if args.svg:
        from .plot import roofline_svg

        roofline_svg(points, device, os.path.join(args.out, "roofline.svg"))
        out.write(f"wrote {args.out}/roofline.svg\n")
    return 0


# -- model --------------------------------------------------------------------


def cmd_model(args, out):
    device = DeviceSpec.load(_device(args))
    shape = _shape(args)
    v, path = args.variant, args.path
    g = launch_geometry(v, path, shape, chunk_count=args.chunk_count)
    smem = shared_mem_footprint(v, shape) if path is not ExecPath.BWD_K else 0
    violations = resource_check(g, smem, device)
    warnings = resource_warnings(g, device)
    t = memory_traffic(v, path, shape, chunk_count=args.chunk_count)
    bw_note = "" if t.reliable else "bandwidth N/A (logical lower bound only)"
    if args.format == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["variant", "path", "grid", "block", "smem_bytes", "reads", "writes", "total", "model_tag", "uncertainty", "violations", "note"])
        w.writerow(
            [v.value, path.value, "x".join(map(str, g.grid)), g.block_threads, smem, t.reads, t.writes, t.total,
             t.model_tag.value, t.uncertainty, "; ".join(violations), bw_note]
        )
        return 0
    out.write(f"{v.value} {path.value} at {shape}\n")
    out.write(f"launch:  {g}\n")
    out.write(f"smem:    {smem} B per block\n")
    out.write(f"device:  {device.name}\n")
    for line in violations:
        out.write(f"VIOLATION: {line}\n")
    for line in warnings:
        out.write(f"warning: {line}\n")
    if not violations:
        out.write("resources: ok\n")
    out.write(f"traffic: reads {t.reads} B, writes {t.writes} B, total {t.total} B [{t.model_tag.value}]")
    out.write(f" +/- {t.uncertainty} B\n" if t.uncertainty else "\n")
    if bw_note:
        out.write(f"note:    {bw_note}\n")
    return 0


# -- parser -------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kernelscope",
        description="Counter-free analysis of depthwise-convolution GPU kernels.",
        epilog=TIMING_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="float32 reference vs float64 oracle")
    _shape_flags(p, (64, 8, 48, 48))
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--scheme", type=_scheme, action="append", help="sequential | pairwise | chunked[:size] (repeatable)")
    p.add_argument("--fused", action="store_true", help="contract multiply-adds (FMA)")
    p.add_argument("--sweep", action="store_true", help="geometric B*L sweep at fixed H, L, K")
    p.add_argument("--sweep-b0", type=_positive, default=16)
    p.add_argument("--sweep-steps", type=_positive, default=4)
    p.add_argument("--tol-abs", type=float, default=1e-6, help="fwd/bwd_in max abs error (default 1e-6)")
    p.add_argument("--tol-dk-rel", type=float, default=1e-5, help="bwd_k max relative error (default 1e-5)")
    p.add_argument("--csv", help="write the error table to this CSV")
    p.set_defaults(func=cmd_validate)

    for name, func, helptext in (
        ("analyze", cmd_analyze, "speedup, bandwidth, roofline and epoch reports"),
        ("roofline", cmd_roofline, "roofline points (CSV, optional SVG)"),
    ):
        p = sub.add_parser(name, help=helptext, epilog=TIMING_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
        _timings_flag(p)
        _device_flag(p)
        _shape_flags(p, DEFAULT_SHAPE)
        p.add_argument("--chunk-count", type=_positive, default=CHUNK_COUNT)
        p.add_argument("--out", default="report")
        if name == "roofline":
            p.add_argument("--svg", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("model", help="launch geometry, shared memory and traffic of one kernel")
    p.add_argument("--variant", type=_enum(Variant), required=True)
    p.add_argument("--path", type=_enum(ExecPath), default=ExecPath.FWD)
    _shape_flags(p, DEFAULT_SHAPE)
    _device_flag(p)
    p.add_argument("--chunk-count", type=_positive, default=CHUNK_COUNT)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_model)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (TimingLogError, analyzer.IncompleteInputError, analyzer.ModelViolationError, ValueError, OSError) as e:
        print(f"kernelscope {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
