"""Timing-log CSV reader.

Schema (header required)::

    variant,path,runtime_ms,run_id

``variant`` is one of naive/coalesced/shared/warp and ``path`` one of
fwd/bwd_in/bwd_k/epoch/conv_total.  All times are milliseconds, epoch rows
included; ``run_id`` may be empty.  Repeated runs of the same (variant, path)
are averaged after dropping the warm-up sample.
"""

import csv
from dataclasses import dataclass, field

from .analyzer import EpochRecord, RuntimeRecord, aggregate
from .exec_model import ExecPath, Variant

HEADER = ("variant", "path", "runtime_ms", "run_id")
SUMMARY_PATHS = ("epoch", "conv_total")


class TimingLogError(ValueError):
    pass


@dataclass
class TimingLog:
    records: list = field(default_factory=list)
    epochs: dict = field(default_factory=dict)  # Variant -> [ms]
    conv_totals: dict = field(default_factory=dict)  # Variant -> [ms]

    def __len__(self):
        return len(self.records) + sum(map(len, self.epochs.values())) + sum(map(len, self.conv_totals.values()))

    def variants(self):
        seen = {r.variant for r in self.records} | set(self.epochs) | set(self.conv_totals)
        return [v for v in Variant if v in seen]

    def reported_totals(self):
        return {v: aggregate(ms) for v, ms in self.conv_totals.items()}

    def epoch_record(self, variant, conv_total_ms=None):
        """Epoch time (s) with the supplied conv total, or ``conv_total_ms`` when none was logged."""
        if variant not in self.epochs:
            return None
        conv = aggregate(self.conv_totals[variant]) if variant in self.conv_totals else conv_total_ms
        if conv is None:
            return None
        return EpochRecord(variant, aggregate(self.epochs[variant]) / 1000.0, conv)


def parse(lines, source="<timings>"):
    reader = csv.reader(line for line in lines if line.strip() and not line.lstrip().startswith("#"))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise TimingLogError(f"{source}: no records (empty file)") from None
    if tuple(header[:3]) != HEADER[:3] or header[3:] not in ([], ["run_id"]):
        raise TimingLogError(f"{source}: header must be {','.join(HEADER)}, got {','.join(header)}")
    log = TimingLog()
    for lineno, row in enumerate(reader, start=2):
        row = [c.strip() for c in row] + [""] * (4 - len(row))
        if len(row) > 4:
            raise TimingLogError(f"{source}:{lineno}: expected at most 4 columns")
        vname, pname, ms_text, rid = row[:4]
        try:
            variant = Variant.parse(vname)
            ms = float(ms_text)
            run_id = int(rid) if rid else None
        except ValueError as e:
            raise TimingLogError(f"{source}:{lineno}: {e}") from None
        if not ms > 0:
            raise TimingLogError(f"{source}:{lineno}: runtime_ms must be positive, got {ms_text}")
        if pname in SUMMARY_PATHS:
            target = log.epochs if pname == "epoch" else log.conv_totals
            target.setdefault(variant, []).append(ms)
            continue
        try:
            path = ExecPath.parse(pname)
        except ValueError:
            allowed = ", ".join([p.value for p in ExecPath] + list(SUMMARY_PATHS))
            raise TimingLogError(f"{source}:{lineno}: unknown path {pname!r} (allowed: {allowed})") from None
        log.records.append(RuntimeRecord(variant, path, ms, run_id))
    if not len(log):
        raise TimingLogError(f"{source}: no records")
    return log


def load(path):
    with open(path, newline="") as fh:
        return parse(fh.read().splitlines(), source=str(path))
