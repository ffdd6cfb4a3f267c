"""Counter-free performance analysis from kernel timings and analytical models."""

import enum
from dataclasses import dataclass, field
from statistics import fmean
from typing import Optional

from .exec_model import PATHS, VARIANTS, ExecPath, Variant, logical_traffic, memory_traffic

# FWD and BWD_IN only: BWD_K traffic depends on the unspecified partial layout.
BANDWIDTH_PATHS = (ExecPath.FWD, ExecPath.BWD_IN)


def _label(x):
    return getattr(x, "value", x)


class IncompleteInputError(ValueError):
    """Required (variant, path) measurements are absent."""

    def __init__(self, missing, what="records"):
        self.missing = list(missing)
        gaps = ", ".join(f"({_label(v)}, {_label(p)})" for v, p in self.missing)
        super().__init__(f"missing {what}: {gaps}" if gaps else f"missing {what}")


class ModelViolationError(ValueError):
    pass


class Bound(enum.Enum):
    MEMORY = "MemoryBound"
    COMPUTE = "ComputeBound"


@dataclass(frozen=True)
class RuntimeRecord:
    variant: Variant
    path: ExecPath
    runtime_ms: float
    run_id: Optional[int] = None

    def __post_init__(self):
        if not self.runtime_ms > 0:
            raise ValueError(f"runtime must be positive, got {self.runtime_ms!r}")


@dataclass(frozen=True)
class EpochRecord:
    variant: Variant
    epoch_time: float  # seconds
    conv_total: float  # milliseconds

    def __post_init__(self):
        if not (self.epoch_time > 0 and self.conv_total > 0):
            raise ValueError("epoch and convolution times must be positive")
        if not self.conv_total / 1000.0 < self.epoch_time:
            raise ValueError(
                f"{self.variant.value}: convolution time {self.conv_total} ms exceeds epoch {self.epoch_time} s"
            )


@dataclass
class RooflinePoint:
    variant: Variant
    path: ExecPath
    flops: int
    bytes_moved: int
    ai: float
    throughput: float  # GFLOP/s
    bound: Bound
    roof: float  # attainable GFLOP/s at this AI
    lower_bound_ai: bool = False  # logical-traffic proxy, true AI is lower


@dataclass
class BandwidthReport:
    variant: Variant
    eff_bw: Optional[float]  # GB/s, None means N/A
    peak_util: Optional[float]
    paths_used: tuple = ()
    per_path: dict = field(default_factory=dict)
    reliable: bool = True


@dataclass
class SpeedupRow:
    variant: Variant
    per_path: dict
    conv_total: float
    conv_total_reported: Optional[float] = None


def flops(path, shape):
    """Multiply-add pairs count as two operations."""
    B, H, L, K = shape.as_tuple()
    if path is ExecPath.BWD_K:
        return H * K * B * L * 2
    return B * H * L * 2 * K


def achieved_throughput(f, runtime_ms):
    """GFLOP/s for ``f`` operations finished in ``runtime_ms``."""
    if not runtime_ms > 0:
        raise ValueError(f"runtime must be positive, got {runtime_ms!r}")
    return f / (runtime_ms * 1e6)


def arithmetic_intensity(f, traffic):
    if traffic.total <= 0:
        raise ValueError("arithmetic intensity needs non-zero traffic")
    return f / traffic.total


def ridge(d):
    """FLOP/byte where the bandwidth roof meets the compute roof."""
    return d.peak_fp32 / d.peak_bw


def classify(ai, d):
    # ai == ridge counts as memory bound
    return Bound.COMPUTE if ai > ridge(d) else Bound.MEMORY


def attainable(ai, d):
    return min(d.peak_fp32, ai * d.peak_bw)


def bandwidth_gbs(nbytes, runtime_ms):
    return nbytes / (runtime_ms * 1e6)


def aggregate(samples):
    """Mean runtime; the first (warm-up) sample is dropped once there are three or more."""
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    if len(samples) >= 3:
        samples = samples[1:]
    return fmean(samples)


def runtime_table(records):
    """Collapse repeated runs into one runtime per (variant, path).

    Samples are ordered by ``run_id`` (records without one keep file order).
    """
    groups = {}
    for i, r in enumerate(records):
        groups.setdefault((r.variant, r.path), []).append((r.run_id if r.run_id is not None else -1, i, r.runtime_ms))
    return {key: aggregate(ms for _, _, ms in sorted(vals)) for key, vals in groups.items()}


def _require(table, variant, paths):
    missing = [(variant, p) for p in paths if (variant, p) not in table]
    if missing:
        raise IncompleteInputError(missing)


def effective_bandwidth(v, records, traffic, device):
    """Modeled bytes over measured time, averaged over FWD and BWD_IN.

    ``traffic`` maps ExecPath to TrafficEstimate for this variant.  The naive
    variant comes back as N/A since only its logical lower bound is known.
    """
    table = records if isinstance(records, dict) else runtime_table(records)
    if v is Variant.NAIVE or any(not traffic[p].reliable for p in BANDWIDTH_PATHS if p in traffic):
        return BandwidthReport(v, None, None, reliable=False)
    _require(table, v, BANDWIDTH_PATHS)
    per_path = {p: bandwidth_gbs(traffic[p].total, table[(v, p)]) for p in PATHS if (v, p) in table and p in traffic}
    eff = fmean(per_path[p] for p in BANDWIDTH_PATHS)
    return BandwidthReport(v, eff, eff / device.peak_bw, BANDWIDTH_PATHS, per_path)


def variant_traffic(v, shape, traffic_source=memory_traffic):
    return {p: traffic_source(v, p, shape) for p in PATHS}


def roofline_points(records, shape, device, traffic_source=memory_traffic):
    """One roofline point per measured (variant, path), in canonical order."""
    table = records if isinstance(records, dict) else runtime_table(records)
    if not table:
        raise IncompleteInputError([], "records: no records")
    points = []
    for v in VARIANTS:
        for p in PATHS:
            if (v, p) not in table:
                continue
            t = traffic_source(v, p, shape) if v is not Variant.NAIVE else logical_traffic(p, shape)
            f = flops(p, shape)
            ai = arithmetic_intensity(f, t)
            points.append(
                RooflinePoint(
                    variant=v,
                    path=p,
                    flops=f,
                    bytes_moved=t.total,
                    ai=ai,
                    throughput=achieved_throughput(f, table[(v, p)]),
                    bound=classify(ai, device),
                    roof=attainable(ai, device),
                    lower_bound_ai=v is Variant.NAIVE,
                )
            )
    return points


def speedup(base_ms, var_ms):
    return base_ms / var_ms


def speedup_table(records, baseline=Variant.NAIVE, reported_totals=None):
    """Per-path and convolution-total speedups of every variant over ``baseline``.

    The total uses the sum of the three path runtimes; ``reported_totals``
    (variant -> ms) adds a second total column computed from supplied values.
    """
    table = records if isinstance(records, dict) else runtime_table(records)
    _require(table, baseline, PATHS)
    base_total = sum(table[(baseline, p)] for p in PATHS)
    rows = []
    for v in VARIANTS:
        if not any((v, p) in table for p in PATHS):
            continue
        _require(table, v, PATHS)
        row = SpeedupRow(
            variant=v,
            per_path={p: speedup(table[(baseline, p)], table[(v, p)]) for p in PATHS},
            conv_total=speedup(base_total, sum(table[(v, p)] for p in PATHS)),
        )
        if reported_totals and baseline in reported_totals and v in reported_totals:
            row.conv_total_reported = speedup(reported_totals[baseline], reported_totals[v])
        rows.append(row)
    return rows


@dataclass
class EpochTranslation:
    measured_epoch_speedup: float
    predicted_epoch_speedup: float
    nonkernel_share_base: float
    nonkernel_share_var: float


def epoch_translation(e_base, e_var):
    """Compare the measured epoch speedup with a fixed-overhead prediction.

    The prediction assumes everything outside the convolution kernels costs
    the same in both runs, so only the saved kernel time shortens the epoch.
    """
    saved_s = (e_base.conv_total - e_var.conv_total) / 1000.0
    denom = e_base.epoch_time - saved_s
    if denom <= 0:
        raise ModelViolationError("fixed-overhead model predicts a non-positive epoch time")
    return EpochTranslation(
        measured_epoch_speedup=e_base.epoch_time / e_var.epoch_time,
        predicted_epoch_speedup=e_base.epoch_time / denom,
        nonkernel_share_base=1.0 - e_base.conv_total / 1000.0 / e_base.epoch_time,
        nonkernel_share_var=1.0 - e_var.conv_total / 1000.0 / e_var.epoch_time,
    )
