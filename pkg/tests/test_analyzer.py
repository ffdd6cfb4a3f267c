import math
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernelscope.analyzer import (
    Bound,
    EpochRecord,
    IncompleteInputError,
    ModelViolationError,
    RuntimeRecord,
    achieved_throughput,
    aggregate,
    arithmetic_intensity,
    classify,
    effective_bandwidth,
    epoch_translation,
    flops,
    ridge,
    roofline_points,
    runtime_table,
    speedup,
    speedup_table,
    variant_traffic,
)
from kernelscope.conv_core import ConvShape
from kernelscope.exec_model import PATHS, ExecPath, TrafficEstimate, ModelTag, Variant, logical_traffic, memory_traffic
from kernelscope.timing import load

from conftest import REFERENCE_SHAPE

FWD, BWD_IN, BWD_K = ExecPath.FWD, ExecPath.BWD_IN, ExecPath.BWD_K
RUNTIMES = {
    Variant.NAIVE: (29.97, 30.25, 73.26),
    Variant.COALESCED: (28.23, 28.78, 49.64),
    Variant.SHARED: (16.36, 16.03, 34.17),
    Variant.WARP: (10.46, 10.61, 19.91),
}


def records(runtimes=RUNTIMES, scale=1.0):
    return [RuntimeRecord(v, p, ms * scale) for v, row in runtimes.items() for p, ms in zip(PATHS, row)]


def test_flops():
    assert flops(FWD, REFERENCE_SHAPE) == 9_663_676_416
    unit = ConvShape(1, 1, 1, 1)
    assert {flops(p, unit) for p in PATHS} == {2}


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10**4), st.integers(1, 10**3), st.integers(1, 10**3), st.integers(1, 100))
def test_flop_symmetry(B, H, L, K):
    s = ConvShape(B, H, L, K)
    assert flops(FWD, s) == flops(BWD_IN, s) == flops(BWD_K, s)


def test_throughput():
    f = 9_663_676_416
    assert achieved_throughput(f, 10.46) == pytest.approx(923.87, abs=0.01)
    assert achieved_throughput(f, 29.97) == pytest.approx(322.44, abs=0.01)
    assert achieved_throughput(2, 1) == pytest.approx(2e-6)
    for bad in (0, -1.0):
        with pytest.raises(ValueError):
            achieved_throughput(f, bad)


def test_arithmetic_intensity():
    f = flops(FWD, REFERENCE_SHAPE)
    assert arithmetic_intensity(f, memory_traffic(Variant.WARP, FWD, REFERENCE_SHAPE)) == pytest.approx(8.00, abs=0.005)
    assert arithmetic_intensity(f, logical_traffic(FWD, REFERENCE_SHAPE)) == pytest.approx(12.0, abs=0.005)
    assert arithmetic_intensity(2, logical_traffic(FWD, ConvShape(1, 1, 1, 1))) == pytest.approx(1 / 6)
    with pytest.raises(ValueError):
        arithmetic_intensity(2, TrafficEstimate(0, 0, ModelTag.LOGICAL))


def test_ridge(p100):
    assert ridge(p100) == pytest.approx(14.48, abs=0.005)
    same = p100.__class__(**{**p100.to_dict(), "peak_bw": p100.peak_fp32})
    assert ridge(same) == 1.0
    doubled = p100.__class__(**{**p100.to_dict(), "peak_bw": 2 * p100.peak_bw})
    assert ridge(doubled) == pytest.approx(ridge(p100) / 2)


def test_classification_boundary(p100):
    r = ridge(p100)
    assert classify(r, p100) is Bound.MEMORY
    assert classify(math.nextafter(r, math.inf), p100) is Bound.COMPUTE
    assert classify(math.nextafter(r, 0), p100) is Bound.MEMORY


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_classification_consistency(ai):
    from kernelscope.exec_model import DeviceSpec

    d = DeviceSpec("t", 1, 32, 1024, 2048, 1, 1, 1, 1, 1, 732, 10600)
    assert (classify(ai, d) is Bound.MEMORY) == (ai <= ridge(d))


@pytest.mark.parametrize(
    "v,bw,util",
    [(Variant.WARP, 114.7, 0.157), (Variant.COALESCED, 42.1, 0.058), (Variant.SHARED, 74.1, 0.101)],
)
def test_effective_bandwidth(p100, v, bw, util):
    r = effective_bandwidth(v, records(), variant_traffic(v, REFERENCE_SHAPE), p100)
    assert r.eff_bw == pytest.approx(bw, abs=0.05)
    # utilisation quoted to one decimal of a percent
    assert r.peak_util == pytest.approx(util, abs=0.001)
    assert set(r.paths_used) == {FWD, BWD_IN}
    assert set(r.per_path) == set(PATHS)


def test_naive_bandwidth_is_not_available(p100):
    r = effective_bandwidth(Variant.NAIVE, records(), variant_traffic(Variant.NAIVE, REFERENCE_SHAPE), p100)
    assert r.eff_bw is None and r.peak_util is None and not r.reliable


def test_missing_path_is_reported(p100):
    recs = [r for r in records() if not (r.variant is Variant.WARP and r.path is BWD_IN)]
    with pytest.raises(IncompleteInputError, match=r"\(warp, bwd_in\)"):
        effective_bandwidth(Variant.WARP, recs, variant_traffic(Variant.WARP, REFERENCE_SHAPE), p100)


def test_roofline_fixture_points(p100):
    pts = roofline_points(records(), REFERENCE_SHAPE, p100)
    assert len(pts) == 12
    for p in pts:
        assert p.bound is Bound.MEMORY
        assert p.throughput <= min(p100.peak_fp32, p.ai * p100.peak_bw) + 1e-9
        assert p.roof == min(p100.peak_fp32, p.ai * p100.peak_bw)
    warp_fwd = next(p for p in pts if p.variant is Variant.WARP and p.path is FWD)
    assert warp_fwd.ai == pytest.approx(8.00, abs=0.005)
    assert warp_fwd.throughput == pytest.approx(923.9, abs=0.05)
    assert all(p.lower_bound_ai == (p.variant is Variant.NAIVE) for p in pts)
    with pytest.raises(IncompleteInputError, match="no records"):
        roofline_points([], REFERENCE_SHAPE, p100)


def test_speedups():
    rows = {r.variant: r for r in speedup_table(records())}
    assert rows[Variant.WARP].conv_total == pytest.approx(133.48 / 40.98)
    assert rows[Variant.WARP].per_path[BWD_K] == pytest.approx(3.680, abs=5e-4)
    assert rows[Variant.WARP].per_path[FWD] == pytest.approx(2.865, abs=5e-4)
    assert all(v == 1.0 for v in rows[Variant.NAIVE].per_path.values())
    assert rows[Variant.NAIVE].conv_total == 1.0


def test_reported_totals_column():
    totals = {Variant.NAIVE: 133.47, Variant.WARP: 40.99}
    rows = {r.variant: r for r in speedup_table(records(), reported_totals=totals)}
    assert rows[Variant.WARP].conv_total_reported == pytest.approx(3.256, abs=5e-4)
    assert rows[Variant.SHARED].conv_total_reported is None


def test_missing_baseline():
    recs = [r for r in records() if r.variant is not Variant.NAIVE]
    with pytest.raises(IncompleteInputError, match=r"\(naive, fwd\)"):
        speedup_table(recs)


times = st.floats(1e-3, 1e4)


@settings(max_examples=200, deadline=None)
@given(times, times)
def test_speedup_antisymmetry(a, b):
    assert abs(speedup(a, b) * speedup(b, a) - 1) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 100))
def test_scale_invariance(c):
    base = {r.variant: r for r in speedup_table(records())}
    scaled = {r.variant: r for r in speedup_table(records(scale=c))}
    for v in base:
        assert scaled[v].conv_total == pytest.approx(base[v].conv_total, rel=1e-12)
        for p in PATHS:
            assert scaled[v].per_path[p] == pytest.approx(base[v].per_path[p], rel=1e-12)
    f = flops(FWD, REFERENCE_SHAPE)
    assert achieved_throughput(f, 10.46 * c) == pytest.approx(achieved_throughput(f, 10.46) / c, rel=1e-12)


def test_epoch_translation():
    e = epoch_translation(EpochRecord(Variant.NAIVE, 44.82, 133.47), EpochRecord(Variant.WARP, 34.74, 40.99))
    assert e.measured_epoch_speedup == pytest.approx(1.290, abs=5e-4)
    assert e.predicted_epoch_speedup == pytest.approx(44.82 / (44.82 - 0.09248), rel=1e-12)
    assert e.predicted_epoch_speedup == pytest.approx(1.0021, abs=5e-5)
    assert 0 < e.nonkernel_share_var < 1


def test_epoch_identity():
    r = EpochRecord(Variant.NAIVE, 10.0, 100.0)
    e = epoch_translation(r, r)
    assert e.measured_epoch_speedup == e.predicted_epoch_speedup == 1.0


def test_epoch_model_violation():
    # valid records can never trigger this; unchecked ones can
    base = SimpleNamespace(epoch_time=1.0, conv_total=3000.0)
    var = SimpleNamespace(epoch_time=0.5, conv_total=1000.0)
    with pytest.raises(ModelViolationError):
        epoch_translation(base, var)


def test_epoch_record_invariant():
    with pytest.raises(ValueError):
        EpochRecord(Variant.NAIVE, 0.1, 100.0)


def test_warmup_aggregation():
    assert aggregate([5.0]) == 5.0
    assert aggregate([5.0, 3.0]) == 4.0
    assert aggregate([9.0, 2.0, 4.0]) == 3.0
    recs = [
        RuntimeRecord(Variant.WARP, FWD, 2.0, run_id=1),
        RuntimeRecord(Variant.WARP, FWD, 100.0, run_id=0),
        RuntimeRecord(Variant.WARP, FWD, 4.0, run_id=2),
    ]
    assert runtime_table(recs) == {(Variant.WARP, FWD): 3.0}
    with pytest.raises(ValueError):
        RuntimeRecord(Variant.WARP, FWD, 0.0)


def test_fixture_drives_same_numbers(table2_path, p100):
    log = load(table2_path)
    rows = {r.variant: r for r in speedup_table(log.records, reported_totals=log.reported_totals())}
    # path sums give 133.48 / 40.98; the supplied totals give 133.47 / 40.99
    assert rows[Variant.WARP].conv_total == pytest.approx(3.2572, abs=5e-5)
    assert rows[Variant.WARP].conv_total_reported == pytest.approx(3.2562, abs=5e-5)
