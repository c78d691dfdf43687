"""Temperature and latency telemetry: sampling, aggregation, CSV interchange.

Records carry wall-clock timestamps for bucket alignment; latencies are
measured upstream with a monotonic clock.  Aggregation uses plain local
arithmetic (sum, min, max, nearest-rank percentile) so results are exactly
reproducible.
"""

from __future__ import annotations

import csv
import io
import logging
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import EdgeTaggerError

__all__ = [
    "SCENARIOS",
    "DEFAULT_THERMAL_PATH",
    "RAW_CSV_HEADER",
    "AGG_CSV_HEADER",
    "TelemetryRecord",
    "AggBucket",
    "ThermalPolicy",
    "ThermalEvent",
    "TemperatureUnavailable",
    "SysfsTemperature",
    "MockTemperature",
    "TemperatureSampler",
    "TelemetryLog",
    "aggregate",
    "thermal_events",
    "iso_from_ns",
    "ns_from_iso",
    "write_raw_csv",
    "read_raw_csv",
    "write_agg_csv",
    "read_agg_csv",
]

log = logging.getLogger(__name__)

SCENARIOS = ("headless", "gui")
DEFAULT_THERMAL_PATH = Path("/sys/class/thermal/thermal_zone0/temp")
TEMP_SANITY_C = (-20.0, 120.0)

RAW_CSV_HEADER = ["wall_time_iso", "model_id", "scenario", "cpu_temp_c",
                  "inference_ms", "total_ms"]
AGG_CSV_HEADER = ["bucket_start_iso", "model_id", "scenario", "count",
                  "temp_mean", "temp_min", "temp_max", "temp_p95",
                  "lat_mean_ms", "lat_min_ms", "lat_max_ms", "lat_p95_ms"]


class TemperatureUnavailable(EdgeTaggerError):
    """The platform thermal interface cannot be read."""


@dataclass(frozen=True)
class TelemetryRecord:
    wall_time_ns: int
    model_id: str
    scenario: str
    cpu_temp_c: float | None = None
    inference_time_ms: float | None = None
    total_time_ms: float | None = None

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}, "
                             f"got {self.scenario!r}")
        if self.cpu_temp_c is not None and not (
                TEMP_SANITY_C[0] <= self.cpu_temp_c <= TEMP_SANITY_C[1]):
            raise ValueError(
                f"cpu_temp_c {self.cpu_temp_c} outside sanity band "
                f"{TEMP_SANITY_C}")


@dataclass(frozen=True)
class ThermalPolicy:
    warning_threshold_c: float = 85.0

    def __post_init__(self) -> None:
        if self.warning_threshold_c <= 0:
            raise ValueError("warning_threshold_c must be positive")


@dataclass(frozen=True)
class ThermalEvent:
    bucket_index: int
    bucket_start_ns: int
    direction: str  # "up" when max temperature reaches the threshold
    max_temp_c: float


@dataclass(frozen=True)
class AggBucket:
    bucket_start_ns: int
    model_id: str
    scenario: str
    count: int
    temp_mean: float | None
    temp_min: float | None
    temp_max: float | None
    temp_p95: float | None
    lat_mean_ms: float | None
    lat_min_ms: float | None
    lat_max_ms: float | None
    lat_p95_ms: float | None


class SysfsTemperature:
    """Linux thermal zone reader; file content is millidegrees Celsius."""

    def __init__(self, path: Path = DEFAULT_THERMAL_PATH):
        self.path = Path(path)

    def read_temp_c(self) -> float:
        try:
            return int(self.path.read_text().strip()) / 1000.0
        except (OSError, ValueError) as exc:
            raise TemperatureUnavailable(
                f"cannot read thermal interface {self.path}: {exc}")


class MockTemperature:
    """Scripted temperature series for tests and mocked soak runs.

    Reads past the end of the series repeat the last value so long runs
    keep producing data.
    """

    def __init__(self, series, repeat_last: bool = True):
        self.series = [float(v) for v in series]
        self.repeat_last = repeat_last
        self._next = 0
        if not self.series:
            raise ValueError("mock temperature series is empty")

    def read_temp_c(self) -> float:
        if self._next < len(self.series):
            value = self.series[self._next]
            self._next += 1
            return value
        if self.repeat_last:
            return self.series[-1]
        raise TemperatureUnavailable("scripted temperature series exhausted")


class TemperatureSampler:
    """Validating wrapper over a provider.

    Out-of-band readings are dropped and counted; an unreadable interface
    degrades the run to latency-only telemetry after one warning.
    """

    def __init__(self, provider):
        self.provider = provider
        self.rejected = 0
        self.degraded = False
        self._warned = False

    def sample(self) -> float | None:
        if self.provider is None:
            return None
        try:
            value = self.provider.read_temp_c()
        except TemperatureUnavailable as exc:
            self.degraded = True
            if not self._warned:
                log.warning("temperature telemetry unavailable, continuing "
                            "latency-only: %s", exc)
                self._warned = True
            return None
        if not (TEMP_SANITY_C[0] <= value <= TEMP_SANITY_C[1]):
            self.rejected += 1
            log.warning("rejected temperature reading %.3f outside %s",
                        value, TEMP_SANITY_C)
            return None
        return value


class TelemetryLog:
    """Thread-safe record sink with a monotonic timestamp guard."""

    def __init__(self):
        self._records: list[TelemetryRecord] = []
        self._lock = threading.Lock()

    def append(self, record: TelemetryRecord) -> None:
        with self._lock:
            if self._records and record.wall_time_ns < self._records[-1].wall_time_ns:
                # wall clock stepped backwards; clamp to keep records sorted
                record = TelemetryRecord(
                    wall_time_ns=self._records[-1].wall_time_ns,
                    model_id=record.model_id, scenario=record.scenario,
                    cpu_temp_c=record.cpu_temp_c,
                    inference_time_ms=record.inference_time_ms,
                    total_time_ms=record.total_time_ms)
            self._records.append(record)

    def snapshot(self) -> list[TelemetryRecord]:
        with self._lock:
            return list(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


def nearest_rank_p95(sorted_values: list[float]) -> float:
    # ceil(95n/100) in integer arithmetic; float 0.95*n rounds up for some n
    rank = (95 * len(sorted_values) + 99) // 100
    return sorted_values[rank - 1]


def _stats(values: list[float]) -> tuple:
    if not values:
        return (None, None, None, None)
    return (sum(values) / len(values), min(values), max(values),
            nearest_rank_p95(sorted(values)))


def aggregate(records, bucket_s: float = 600.0) -> list[AggBucket]:
    """Group time-sorted records into aligned buckets and compute stats.

    Buckets are keyed by (bucket start, model_id, scenario); empty buckets
    are omitted.  p95 is the nearest-rank percentile.
    """
    if bucket_s <= 0:
        raise ValueError("bucket_s must be positive")
    bucket_ns = int(round(bucket_s * 1e9))
    previous = None
    groups: dict[tuple, list[TelemetryRecord]] = {}
    for record in records:
        if previous is not None and record.wall_time_ns < previous:
            raise ValueError("records must be time-sorted")
        previous = record.wall_time_ns
        start = (record.wall_time_ns // bucket_ns) * bucket_ns
        groups.setdefault((start, record.model_id, record.scenario),
                          []).append(record)
    buckets = []
    for (start, model_id, scenario), members in sorted(groups.items()):
        temps = [r.cpu_temp_c for r in members if r.cpu_temp_c is not None]
        lats = [r.inference_time_ms for r in members
                if r.inference_time_ms is not None]
        t_mean, t_min, t_max, t_p95 = _stats(temps)
        l_mean, l_min, l_max, l_p95 = _stats(lats)
        buckets.append(AggBucket(
            bucket_start_ns=start, model_id=model_id, scenario=scenario,
            count=len(members),
            temp_mean=t_mean, temp_min=t_min, temp_max=t_max, temp_p95=t_p95,
            lat_mean_ms=l_mean, lat_min_ms=l_min, lat_max_ms=l_max,
            lat_p95_ms=l_p95))
    return buckets


def thermal_events(buckets, policy: ThermalPolicy) -> list[ThermalEvent]:
    """Threshold crossings of bucket max temperature, threshold inclusive."""
    events = []
    hot = False
    for index, bucket in enumerate(buckets):
        if bucket.temp_max is None:
            continue
        now_hot = bucket.temp_max >= policy.warning_threshold_c
        if now_hot != hot:
            events.append(ThermalEvent(
                bucket_index=index, bucket_start_ns=bucket.bucket_start_ns,
                direction="up" if now_hot else "down",
                max_temp_c=bucket.temp_max))
            hot = now_hot
    return events


_ISO_RE = re.compile(r"^(.*?)(?:\.(\d+))?(Z|[+-]\d{2}:\d{2})$")


def iso_from_ns(wall_time_ns: int) -> str:
    """UTC ISO 8601 with nanosecond fraction; round-trips exactly."""
    secs, frac = divmod(int(wall_time_ns), 1_000_000_000)
    stamp = datetime.fromtimestamp(secs, tz=timezone.utc)
    return stamp.strftime("%Y-%m-%dT%H:%M:%S") + f".{frac:09d}+00:00"


def ns_from_iso(text: str) -> int:
    match = _ISO_RE.match(text.strip())
    if not match:
        raise ValueError(f"unparseable timestamp {text!r}")
    base, frac, zone = match.groups()
    if zone == "Z":
        zone = "+00:00"
    stamp = datetime.fromisoformat(base + zone)
    frac_ns = int((frac or "0").ljust(9, "0")[:9])
    return int(stamp.timestamp()) * 1_000_000_000 + frac_ns


def _cell(value) -> str:
    return "" if value is None else repr(float(value))


def _uncell(text: str) -> float | None:
    return None if text == "" else float(text)


def raw_csv_text(records) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(RAW_CSV_HEADER)
    for r in records:
        writer.writerow([iso_from_ns(r.wall_time_ns), r.model_id,
                         r.scenario, _cell(r.cpu_temp_c),
                         _cell(r.inference_time_ms),
                         _cell(r.total_time_ms)])
    return out.getvalue()


def write_raw_csv(path: Path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(raw_csv_text(records))


def read_raw_csv(path: Path) -> list[TelemetryRecord]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != RAW_CSV_HEADER:
            raise ValueError(f"unexpected raw CSV header {header}")
        return [TelemetryRecord(wall_time_ns=ns_from_iso(row[0]),
                                model_id=row[1], scenario=row[2],
                                cpu_temp_c=_uncell(row[3]),
                                inference_time_ms=_uncell(row[4]),
                                total_time_ms=_uncell(row[5]))
                for row in reader]


def agg_csv_text(buckets) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(AGG_CSV_HEADER)
    for b in buckets:
        writer.writerow([iso_from_ns(b.bucket_start_ns), b.model_id,
                         b.scenario, b.count,
                         _cell(b.temp_mean), _cell(b.temp_min),
                         _cell(b.temp_max), _cell(b.temp_p95),
                         _cell(b.lat_mean_ms), _cell(b.lat_min_ms),
                         _cell(b.lat_max_ms), _cell(b.lat_p95_ms)])
    return out.getvalue()


def write_agg_csv(path: Path, buckets) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(agg_csv_text(buckets))


def read_agg_csv(path: Path) -> list[AggBucket]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != AGG_CSV_HEADER:
            raise ValueError(f"unexpected aggregate CSV header {header}")
        return [AggBucket(bucket_start_ns=ns_from_iso(row[0]),
                          model_id=row[1], scenario=row[2], count=int(row[3]),
                          temp_mean=_uncell(row[4]), temp_min=_uncell(row[5]),
                          temp_max=_uncell(row[6]), temp_p95=_uncell(row[7]),
                          lat_mean_ms=_uncell(row[8]), lat_min_ms=_uncell(row[9]),
                          lat_max_ms=_uncell(row[10]),
                          lat_p95_ms=_uncell(row[11]))
                for row in reader]
