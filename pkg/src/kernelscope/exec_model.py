"""Analytical models of the four CUDA depthwise-convolution kernels.

Nothing here runs on a GPU: launch geometry, thread-to-element mappings,
shared-memory footprints, resource checks and element-granular memory-traffic
estimates are all closed-form functions of the problem shape.
"""

import enum
import json
from collections import Counter
from dataclasses import asdict, dataclass, fields
from typing import Optional, Tuple

FLOAT_BYTES = 4
NAIVE_BLOCK = 512
TTILE = 32
HTILE = 8
COALESCED_BLOCK = TTILE * HTILE
TPB = 256  # forced by the 1404 B footprint at K=48
WARP = 32
CHUNK_COUNT = 64


class Variant(enum.Enum):
    NAIVE = "naive"
    COALESCED = "coalesced"
    SHARED = "shared"
    WARP = "warp"

    @classmethod
    def parse(cls, text):
        try:
            return cls(text.strip().lower())
        except ValueError:
            allowed = ", ".join(v.value for v in cls)
            raise ValueError(f"unknown variant {text!r} (allowed: {allowed})") from None


class ExecPath(enum.Enum):
    FWD = "fwd"
    BWD_IN = "bwd_in"
    BWD_K = "bwd_k"

    @classmethod
    def parse(cls, text):
        try:
            return cls(text.strip().lower())
        except ValueError:
            allowed = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown execution path {text!r} (allowed: {allowed})") from None


VARIANTS = tuple(Variant)
PATHS = tuple(ExecPath)


class ModelTag(enum.Enum):
    LOGICAL = "Logical"
    DISTINCT_ROW = "DistinctRow"
    STAGED = "Staged"


@dataclass(frozen=True)
class DeviceSpec:
    name: str
    sm_count: int
    warp_size: int
    max_threads_per_block: int
    max_threads_per_sm: int
    smem_per_block: int
    smem_per_sm: int
    registers_per_sm: int
    l2_bytes: int
    mem_bytes: int
    peak_bw: float  # GB/s
    peak_fp32: float  # GFLOP/s

    def __post_init__(self):
        for f in fields(self):
            if f.name == "name":
                continue
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ValueError(f"device field {f.name} must be positive, got {v!r}")

    @classmethod
    def from_dict(cls, data):
        names = [f.name for f in fields(cls)]
        missing = [n for n in names if n not in data]
        extra = sorted(set(data) - set(names))
        if missing or extra:
            raise ValueError(f"device spec fields mismatch: missing={missing} unexpected={extra}")
        return cls(**{n: data[n] for n in names})

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"


@dataclass(frozen=True)
class LaunchGeometry:
    grid: Tuple[int, int, int]
    block_threads: int
    tile_params: Optional[dict] = None

    @property
    def total_blocks(self):
        gx, gy, gz = self.grid
        return gx * gy * gz

    @property
    def total_threads(self):
        return self.total_blocks * self.block_threads

    def __str__(self):
        gx, gy, gz = self.grid
        s = f"grid=({gx},{gy},{gz}) block=({self.block_threads},1,1)"
        if self.tile_params:
            s += " " + " ".join(f"{k}={v}" for k, v in self.tile_params.items())
        return s


@dataclass(frozen=True)
class TrafficEstimate:
    reads: int
    writes: int
    model_tag: ModelTag
    reliable: bool = True
    uncertainty: int = 0  # +/- bytes

    @property
    def total(self):
        return self.reads + self.writes


def _cdiv(a, b):
    return -(-a // b)


def launch_geometry(v, path, shape, chunk_count=CHUNK_COUNT):
    """Grid and block shape of one kernel launch.

    Weight-gradient launches of the optimized variants use ``chunk_count``
    blocks along x (one partition of the batch each) and one block row per
    channel; only the first reduction stage is described.
    """
    B, H, L, K = shape.as_tuple()
    if path is ExecPath.BWD_K:
        if v is Variant.NAIVE:
            return LaunchGeometry((_cdiv(K, NAIVE_BLOCK), H, 1), NAIVE_BLOCK)
        block = {Variant.COALESCED: COALESCED_BLOCK, Variant.SHARED: TPB, Variant.WARP: WARP}[v]
        return LaunchGeometry((chunk_count, H, 1), block, {"chunk_count": chunk_count})
    if v is Variant.NAIVE:
        return LaunchGeometry((_cdiv(L, NAIVE_BLOCK), H, B), NAIVE_BLOCK)
    if v is Variant.COALESCED:
        return LaunchGeometry(
            (_cdiv(L, TTILE), _cdiv(H, HTILE), B), COALESCED_BLOCK, {"TTILE": TTILE, "HTILE": HTILE}
        )
    if v is Variant.SHARED:
        return LaunchGeometry((_cdiv(L, TPB), B * H, 1), TPB, {"TPB": TPB})
    if v is Variant.WARP:
        return LaunchGeometry((B, H, 1), WARP, {"W": WARP})
    raise TypeError(v)


# -- thread mappings ----------------------------------------------------------


def naive_forward_index(block_idx, thread_idx, block_dim, L):
    """``(b, h, t)`` for one naive thread, or None when ``t >= L``."""
    bx, by, bz = block_idx
    t = bx * block_dim + thread_idx
    if t >= L:
        return None
    return (bz, by, t)


def coalesced_index(block_idx, thread_idx, H, L):
    bx, by, bz = block_idx
    t = bx * TTILE + thread_idx % TTILE
    h = by * HTILE + thread_idx // TTILE
    if t >= L or h >= H:
        return None
    return (bz, h, t)


def shared_tile_index(block_idx, thread_idx, H, L):
    """Flattened row ``s = b*H + h`` on grid y, temporal tile on grid x."""
    bx, by, _ = block_idx
    t = bx * TPB + thread_idx
    if t >= L:
        return None
    return (by // H, by % H, t)


def warp_lane_positions(lane, L, W=WARP):
    """Temporal positions handled by one lane: ``lane, lane + W, ...`` below L.

    For ``L <= 2W`` this is the two-position mapping ``{lane, lane + W}``.
    """
    if not 0 <= lane < W:
        raise ValueError(f"lane {lane} outside warp of {W}")
    return set(range(lane, L, W))


def thread_elements(v, shape, block_idx, thread_idx):
    """Output elements ``(b, h, t)`` one thread writes on the FWD/BWD_IN path."""
    B, H, L, K = shape.as_tuple()
    if v is Variant.NAIVE:
        e = naive_forward_index(block_idx, thread_idx, NAIVE_BLOCK, L)
    elif v is Variant.COALESCED:
        e = coalesced_index(block_idx, thread_idx, H, L)
    elif v is Variant.SHARED:
        e = shared_tile_index(block_idx, thread_idx, H, L)
    elif v is Variant.WARP:
        bx, by, _ = block_idx
        return [(bx, by, t) for t in sorted(warp_lane_positions(thread_idx, L))]
    else:
        raise TypeError(v)
    return [] if e is None else [e]


def coverage(v, path, shape):
    """Count how often each output element is produced by the launch."""
    if path is ExecPath.BWD_K:
        raise ValueError("coverage is defined for the FWD and BWD_IN mappings")
    g = launch_geometry(v, path, shape)
    gx, gy, gz = g.grid
    hits = Counter()
    for bz in range(gz):
        for by in range(gy):
            for bx in range(gx):
                for tid in range(g.block_threads):
                    hits.update(thread_elements(v, shape, (bx, by, bz), tid))
    return hits


def covers_exactly_once(v, path, shape):
    hits = coverage(v, path, shape)
    B, H, L, _ = shape.as_tuple()
    return len(hits) == B * H * L and all(c == 1 for c in hits.values()) and all(
        0 <= b < B and 0 <= h < H and 0 <= t < L for b, h, t in hits
    )


# -- resources ----------------------------------------------------------------


def shared_mem_footprint(v, shape):
    """Bytes of shared memory per block on the FWD/BWD_IN path."""
    L, K = shape.L, shape.K
    if v in (Variant.NAIVE, Variant.COALESCED):
        return 0
    if v is Variant.SHARED:
        return FLOAT_BYTES * ((TPB + K - 1) + K)
    if v is Variant.WARP:
        return FLOAT_BYTES * (L + K)
    raise TypeError(v)


def resource_check(g, smem, d):
    """Hard-limit violations of one launch on device ``d``; empty when it fits."""
    out = []
    if g.block_threads > d.max_threads_per_block:
        out.append(f"threads per block: {g.block_threads} > {d.max_threads_per_block}")
    if smem > d.smem_per_block:
        out.append(f"shared memory per block: {smem} B > {d.smem_per_block} B")
    return out


def resource_warnings(g, d):
    if g.block_threads % d.warp_size:
        return [f"block of {g.block_threads} threads is not a multiple of the warp size {d.warp_size}"]
    return []


# -- memory traffic -----------------------------------------------------------


def logical_traffic(path, shape):
    """Each tensor touched exactly once: the lower bound on data movement."""
    B, H, L, K = shape.as_tuple()
    act = FLOAT_BYTES * B * H * L
    ker = FLOAT_BYTES * H * K
    if path is ExecPath.BWD_K:
        return TrafficEstimate(2 * act, ker, ModelTag.LOGICAL)
    return TrafficEstimate(act + ker, act, ModelTag.LOGICAL)


def _input_elements(v, shape):
    """Input floats fetched from global memory per run, all rows."""
    B, H, L, K = shape.as_tuple()
    if v is Variant.COALESCED:
        per_row = L + K - 1
    elif v is Variant.SHARED:
        per_row = _cdiv(L, TPB) * (min(TPB, L) + K - 1)
    elif v is Variant.WARP:
        per_row = L + K
    else:
        raise TypeError(v)
    return B * H * per_row


def memory_traffic(v, path, shape, chunk_count=CHUNK_COUNT):
    """Modeled global-memory bytes for one kernel run.

    The naive kernel gets the logical lower bound, flagged unreliable: its
    redundant loads depend on caching that cannot be observed without counters.
    """
    if v is Variant.NAIVE:
        est = logical_traffic(path, shape)
        return TrafficEstimate(est.reads, est.writes, ModelTag.LOGICAL, reliable=False)
    B, H, L, K = shape.as_tuple()
    tag = ModelTag.STAGED if v is Variant.WARP else ModelTag.DISTINCT_ROW
    ker = FLOAT_BYTES * H * K
    act = FLOAT_BYTES * B * H * L
    staged = FLOAT_BYTES * _input_elements(v, shape)
    if path is ExecPath.BWD_K:
        partials = FLOAT_BYTES * chunk_count * H * K
        reads = act + staged + partials
        writes = partials + ker
        return TrafficEstimate(reads, writes, tag, uncertainty=2 * partials)
    return TrafficEstimate(staged + ker, act, tag)
