"""Assemble and write analysis reports (CSV tables + text summary)."""

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field

from . import analyzer
from .exec_model import PATHS, ExecPath, Variant, memory_traffic

NA = "N/A"


@dataclass
class ReportBundle:
    provenance: dict
    speedups: list
    bandwidth: list
    roofline: list
    epochs: list = field(default_factory=list)  # (Variant, EpochRecord, EpochTranslation or None)
    runtimes: dict = field(default_factory=dict)


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def provenance(timings_path, device_path, device, shape, chunk_count):
    return {
        "timings": os.path.abspath(timings_path),
        "timings_sha256": file_digest(timings_path),
        "device": os.path.abspath(device_path),
        "device_sha256": file_digest(device_path),
        "device_name": device.name,
        "shape": {"B": shape.B, "H": shape.H, "L": shape.L, "K": shape.K},
        "chunk_count": chunk_count,
    }


def check_complete(log):
    """Every logged variant needs all three kernel paths, and the naive baseline must exist."""
    table = analyzer.runtime_table(log.records)
    missing = []
    variants = log.variants()
    if Variant.NAIVE not in variants:
        variants = [Variant.NAIVE] + variants
    for v in variants:
        missing += [(v, p) for p in PATHS if (v, p) not in table]
    if missing:
        raise analyzer.IncompleteInputError(missing)
    return table


def build(log, shape, device, prov, chunk_count=64):
    table = check_complete(log)

    def traffic(v, p, s):
        return memory_traffic(v, p, s, chunk_count=chunk_count)

    variants = [v for v in Variant if (v, ExecPath.FWD) in table]
    bandwidth = [
        analyzer.effective_bandwidth(v, table, analyzer.variant_traffic(v, shape, traffic), device) for v in variants
    ]
    reported = log.reported_totals()
    speedups = analyzer.speedup_table(table, Variant.NAIVE, reported)
    points = analyzer.roofline_points(table, shape, device, traffic)

    epochs = []
    base = log.epoch_record(Variant.NAIVE, sum(table[(Variant.NAIVE, p)] for p in PATHS))
    for v in variants:
        rec = log.epoch_record(v, sum(table[(v, p)] for p in PATHS))
        if rec is None:
            continue
        tr = analyzer.epoch_translation(base, rec) if base is not None else None
        epochs.append((v, rec, tr))
    return ReportBundle(prov, speedups, bandwidth, points, epochs, table)


def _f(x, nd=6):
    return NA if x is None else f"{x:.{nd}f}"


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def speedups_csv(b):
    rows = [
        [r.variant.value] + [_f(r.per_path[p]) for p in PATHS] + [_f(r.conv_total), _f(r.conv_total_reported)]
        for r in b.speedups
    ]
    return _csv(["variant", "fwd", "bwd_in", "bwd_k", "conv_total", "conv_total_reported"], rows)


def bandwidth_csv(b):
    rows = []
    for r in b.bandwidth:
        per = [_f(r.per_path.get(p), 4) if r.eff_bw is not None else NA for p in PATHS]
        rows.append(
            [r.variant.value, _f(r.eff_bw, 4), _f(r.peak_util, 6)]
            + per
            + ["+".join(p.value for p in r.paths_used) or NA]
        )
    return _csv(["variant", "eff_bw_gbs", "peak_util", "fwd_gbs", "bwd_in_gbs", "bwd_k_gbs", "paths_used"], rows)


def roofline_csv(b):
    rows = [
        [
            p.variant.value,
            p.path.value,
            p.flops,
            p.bytes_moved,
            _f(p.ai),
            _f(p.throughput, 4),
            p.bound.value,
            _f(p.roof, 4),
            "lower-bound" if p.lower_bound_ai else "",
        ]
        for p in b.roofline
    ]
    return _csv(["variant", "path", "flops", "bytes", "ai", "gflops", "bound", "roof_gflops", "caveat"], rows)


def epoch_csv(b):
    rows = []
    for v, rec, tr in b.epochs:
        rows.append(
            [
                v.value,
                _f(rec.epoch_time, 4),
                _f(rec.conv_total, 4),
                _f(tr and tr.measured_epoch_speedup),
                _f(tr and tr.predicted_epoch_speedup),
                _f(1.0 - rec.conv_total / 1000.0 / rec.epoch_time),
            ]
        )
    return _csv(["variant", "epoch_s", "conv_total_ms", "measured_speedup", "predicted_speedup", "nonkernel_share"], rows)


def text_report(b):
    prov = b.provenance
    s = prov["shape"]
    out = [
        "# kernelscope analysis report",
        f"# timings: {prov['timings']} (sha256 {prov['timings_sha256'][:16]})",
        f"# device:  {prov['device']} ({prov['device_name']}, sha256 {prov['device_sha256'][:16]})",
        f"# shape:   B={s['B']} H={s['H']} L={s['L']} K={s['K']}  chunk_count={prov['chunk_count']}",
        "",
        "Kernel runtimes (ms)",
        f"{'variant':<10} {'fwd':>9} {'bwd_in':>9} {'bwd_k':>9} {'total':>9}",
    ]
    for v in Variant:
        if (v, ExecPath.FWD) not in b.runtimes:
            continue
        ms = [b.runtimes[(v, p)] for p in PATHS]
        out.append(f"{v.value:<10} " + " ".join(f"{m:9.2f}" for m in ms) + f" {sum(ms):9.2f}")

    out += ["", "Speedup vs naive", f"{'variant':<10} {'fwd':>7} {'bwd_in':>7} {'bwd_k':>7} {'total':>7} {'reported':>8}"]
    for r in b.speedups:
        rep = f"{r.conv_total_reported:8.3f}" if r.conv_total_reported is not None else f"{NA:>8}"
        out.append(f"{r.variant.value:<10} " + " ".join(f"{r.per_path[p]:7.3f}" for p in PATHS) + f" {r.conv_total:7.3f} {rep}")

    out += ["", "Effective bandwidth (mean of fwd and bwd_in)", f"{'variant':<10} {'GB/s':>8} {'peak':>7}"]
    for r in b.bandwidth:
        if r.eff_bw is None:
            out.append(f"{r.variant.value:<10} {NA:>8} {NA:>7}  (logical traffic is only a lower bound)")
        else:
            out.append(f"{r.variant.value:<10} {r.eff_bw:8.2f} {100 * r.peak_util:6.1f}%")

    out += ["", "Roofline", f"{'variant':<10} {'path':<7} {'AI':>7} {'GFLOP/s':>9} {'roof':>9}  bound"]
    for p in b.roofline:
        note = "  (AI is a lower-bound proxy)" if p.lower_bound_ai else ""
        out.append(
            f"{p.variant.value:<10} {p.path.value:<7} {p.ai:7.2f} {p.throughput:9.2f} {p.roof:9.2f}  {p.bound.value}{note}"
        )

    if b.epochs:
        out += ["", "Epoch translation vs naive", f"{'variant':<10} {'epoch s':>8} {'conv ms':>9} {'measured':>8} {'predicted':>9} {'non-kernel':>10}"]
        for v, rec, tr in b.epochs:
            meas = f"{tr.measured_epoch_speedup:8.3f}" if tr else f"{NA:>8}"
            pred = f"{tr.predicted_epoch_speedup:9.3f}" if tr else f"{NA:>9}"
            share = 1.0 - rec.conv_total / 1000.0 / rec.epoch_time
            out.append(f"{v.value:<10} {rec.epoch_time:8.2f} {rec.conv_total:9.2f} {meas} {pred} {100 * share:9.1f}%")
    return "\n".join(out) + "\n"


def write(b, outdir):
    os.makedirs(outdir, exist_ok=True)
    files = {
        "speedups.csv": speedups_csv(b),
        "bandwidth.csv": bandwidth_csv(b),
        "roofline.csv": roofline_csv(b),
        "epoch.csv": epoch_csv(b),
        "report.txt": text_report(b),
        "provenance.json": json.dumps(b.provenance, indent=2, sort_keys=True) + "\n",
    }
    for name, text in files.items():
        with open(os.path.join(outdir, name), "w", newline="") as fh:
            fh.write(text)
    return sorted(files)
