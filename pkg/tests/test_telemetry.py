"""Telemetry tests: providers, aggregation vs brute-force oracle, CSV."""

import logging
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgetagger.telemetry import (AGG_CSV_HEADER, RAW_CSV_HEADER, AggBucket,
                                  MockTemperature, SysfsTemperature,
                                  TelemetryLog, TelemetryRecord,
                                  TemperatureSampler, ThermalPolicy,
                                  aggregate, iso_from_ns, ns_from_iso,
                                  read_agg_csv, read_raw_csv, thermal_events,
                                  write_agg_csv, write_raw_csv)

NS = 1_000_000_000


def rec(t_s, temp=None, lat=None, total=None, model="m", scenario="headless"):
    return TelemetryRecord(wall_time_ns=int(t_s * NS), model_id=model,
                           scenario=scenario, cpu_temp_c=temp,
                           inference_time_ms=lat, total_time_ms=total)


def test_sysfs_millidegrees(tmp_path):
    probe = tmp_path / "temp"
    probe.write_text("54321\n")
    assert SysfsTemperature(probe).read_temp_c() == 54.321


def test_mock_returns_scripted_series_then_repeats():
    mock = MockTemperature([60.0, 61.0, 62.0])
    assert [mock.read_temp_c() for _ in range(5)] == [60.0, 61.0, 62.0,
                                                      62.0, 62.0]


def test_out_of_band_reading_rejected_and_counted(tmp_path):
    probe = tmp_path / "temp"
    probe.write_text("-300000")
    sampler = TemperatureSampler(SysfsTemperature(probe))
    assert sampler.sample() is None
    assert sampler.rejected == 1
    assert not sampler.degraded


def test_out_of_band_record_construction_rejected():
    with pytest.raises(ValueError):
        rec(0.0, temp=-300.0)
    with pytest.raises(ValueError):
        TelemetryRecord(wall_time_ns=0, model_id="m", scenario="desktop")


def test_unreadable_interface_degrades_with_one_warning(tmp_path, caplog):
    sampler = TemperatureSampler(SysfsTemperature(tmp_path / "absent"))
    with caplog.at_level(logging.WARNING, logger="edgetagger.telemetry"):
        assert sampler.sample() is None
        assert sampler.sample() is None
    assert sampler.degraded
    warnings = [r for r in caplog.records if "latency-only" in r.message]
    assert len(warnings) == 1


def test_full_day_of_5s_records_fills_144_even_buckets():
    records = [rec(t * 5.0, temp=55.0 + (t % 7), lat=40.0 + (t % 3))
               for t in range(17280)]  # 24 h at one record per 5 s
    buckets = aggregate(records, bucket_s=600.0)
    assert len(buckets) == 144
    assert all(b.count == 120 for b in buckets)
    assert [b.bucket_start_ns for b in buckets] == \
        [i * 600 * NS for i in range(144)]


def test_tiny_bucket_stats():
    buckets = aggregate([rec(1.0, lat=1.0), rec(2.0, lat=2.0),
                         rec(3.0, lat=3.0)])
    assert len(buckets) == 1
    b = buckets[0]
    assert (b.lat_mean_ms, b.lat_min_ms, b.lat_max_ms) == (2.0, 1.0, 3.0)
    assert b.lat_p95_ms == 3.0
    assert b.temp_mean is None  # no temperature data present


def brute_force(records, bucket_s=600.0):
    """Single-pass reference aggregation used as the oracle."""
    bucket_ns = int(bucket_s * NS)
    keys, temps, lats, counts = [], {}, {}, {}
    for r in records:
        key = (r.wall_time_ns // bucket_ns * bucket_ns, r.model_id, r.scenario)
        if key not in counts:
            keys.append(key)
            counts[key] = 0
            temps[key] = []
            lats[key] = []
        counts[key] += 1
        if r.cpu_temp_c is not None:
            temps[key].append(r.cpu_temp_c)
        if r.inference_time_ms is not None:
            lats[key].append(r.inference_time_ms)

    def stats(vals):
        if not vals:
            return (None,) * 4
        acc = 0.0
        for v in vals:
            acc += v
        ordered = sorted(vals)
        rank = math.ceil(95 * len(vals) / 100)
        return acc / len(vals), min(vals), max(vals), ordered[rank - 1]

    out = []
    for key in sorted(keys):
        start, model_id, scenario = key
        t = stats(temps[key])
        l = stats(lats[key])
        out.append(AggBucket(bucket_start_ns=start, model_id=model_id,
                             scenario=scenario, count=counts[key],
                             temp_mean=t[0], temp_min=t[1], temp_max=t[2],
                             temp_p95=t[3], lat_mean_ms=l[0], lat_min_ms=l[1],
                             lat_max_ms=l[2], lat_p95_ms=l[3]))
    return out


def test_ten_thousand_random_records_match_brute_force_exactly():
    import random
    rng = random.Random(42)
    t = 0.0
    records = []
    for _ in range(10_000):
        t += rng.uniform(0.0, 2.0)
        records.append(rec(
            t,
            temp=rng.uniform(40.0, 90.0) if rng.random() < 0.9 else None,
            lat=rng.uniform(20.0, 400.0) if rng.random() < 0.8 else None,
            model=rng.choice(["a", "b"]),
            scenario=rng.choice(["headless", "gui"])))
    got = aggregate(records)
    want = brute_force(records)
    assert got == want
    for b in got:
        if b.temp_mean is not None:
            assert b.temp_min <= b.temp_mean <= b.temp_max
        if b.lat_mean_ms is not None:
            assert b.lat_min_ms <= b.lat_mean_ms <= b.lat_max_ms


def test_empty_buckets_omitted():
    buckets = aggregate([rec(10.0, temp=50.0), rec(3400.0, temp=51.0)])
    assert [b.bucket_start_ns for b in buckets] == [0, 3000 * NS]


def test_unsorted_records_rejected():
    with pytest.raises(ValueError):
        aggregate([rec(5.0), rec(1.0)])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(min_value=0.0, max_value=599.9),
                          st.floats(min_value=30.0, max_value=100.0)),
                min_size=1, max_size=40),
       st.lists(st.tuples(st.floats(min_value=600.0, max_value=1199.9),
                          st.floats(min_value=30.0, max_value=100.0)),
                min_size=1, max_size=40))
def test_aggregation_partition_stable_across_bucket_boundary(left, right):
    a = [rec(t, temp=v) for t, v in sorted(left)]
    b = [rec(t, temp=v) for t, v in sorted(right)]
    assert aggregate(a) + aggregate(b) == aggregate(a + b)


def mkbucket(index, temp_max):
    return AggBucket(bucket_start_ns=index * 600 * NS, model_id="m",
                     scenario="headless", count=1, temp_mean=temp_max,
                     temp_min=temp_max, temp_max=temp_max, temp_p95=temp_max,
                     lat_mean_ms=None, lat_min_ms=None, lat_max_ms=None,
                     lat_p95_ms=None)


def test_thermal_crossings_up_then_down():
    buckets = [mkbucket(i, t) for i, t in enumerate([80.0, 86.0, 87.0, 82.0])]
    events = thermal_events(buckets, ThermalPolicy())
    assert [(e.bucket_index, e.direction) for e in events] == \
        [(1, "up"), (3, "down")]
    assert events[0].max_temp_c == 86.0


def test_thermal_all_cool_is_empty():
    buckets = [mkbucket(i, 70.0 + i) for i in range(5)]
    assert thermal_events(buckets, ThermalPolicy()) == []


def test_thermal_threshold_is_inclusive():
    buckets = [mkbucket(i, 85.0) for i in range(4)]
    events = thermal_events(buckets, ThermalPolicy())
    assert [(e.bucket_index, e.direction) for e in events] == [(0, "up")]


def test_telemetry_log_keeps_timestamps_monotonic():
    sink = TelemetryLog()
    sink.append(rec(10.0))
    sink.append(rec(5.0))
    times = [r.wall_time_ns for r in sink.snapshot()]
    assert times == sorted(times)
    assert len(sink) == 2


def test_iso_timestamp_roundtrip_at_nanosecond_precision():
    ns = 1_755_950_400_123_456_789
    text = iso_from_ns(ns)
    assert text.endswith("+00:00")
    assert ns_from_iso(text) == ns
    assert ns_from_iso("1970-01-01T00:00:00Z") == 0
    assert ns_from_iso("1970-01-01T00:00:01.5+00:00") == 1_500_000_000


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=4_102_444_800 * NS))
def test_iso_roundtrip_property(ns):
    assert ns_from_iso(iso_from_ns(ns)) == ns


def test_raw_csv_roundtrip_field_for_field(tmp_path):
    records = [
        rec(0.123456789, temp=54.321, lat=123.456, total=130.0),
        rec(5.0, temp=None, lat=77.7, total=None, model='odd,"name"'),
        rec(10.0, temp=60.0, lat=None, scenario="gui"),
    ]
    path = tmp_path / "raw.csv"
    write_raw_csv(path, records)
    first = path.read_text(encoding="utf-8").splitlines()[0]
    assert first == ",".join(RAW_CSV_HEADER)
    assert read_raw_csv(path) == records


def test_agg_csv_roundtrip(tmp_path):
    records = [rec(t * 5.0, temp=50.0 + 0.01 * t, lat=40.0 + t % 13)
               for t in range(500)]
    buckets = aggregate(records)
    path = tmp_path / "agg.csv"
    write_agg_csv(path, buckets)
    first = path.read_text(encoding="utf-8").splitlines()[0]
    assert first == ",".join(AGG_CSV_HEADER)
    assert read_agg_csv(path) == buckets
