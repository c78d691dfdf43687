"""Live tagging engine: four cooperating contexts joined by bounded queues.

The record context turns an audio source into overlapping analysis windows,
the predict context runs the classifier, the write context optionally saves
window audio, and the control context applies operator commands between
windows. Backpressure is resolved by dropping the oldest queued window, so
a slow model degrades cadence instead of growing latency without bound.
"""

from __future__ import annotations

import collections
import logging
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional

from .audio import (AnalysisWindow, StreamGap, StreamResampler, Windower,
                    WindowSpec, capture_stream, paced, write_wav_float32)
from .errors import ConfigError
from .inference import (ModelHandle, ModelManifest, infer, load_model,
                        top_k)
from .telemetry import (SCENARIOS, SysfsTemperature, TelemetryLog,
                        TelemetryRecord, TemperatureSampler, ThermalPolicy,
                        aggregate, iso_from_ns, thermal_events, write_agg_csv,
                        write_raw_csv)

log = logging.getLogger(__name__)

VALID_TOP_K = (1, 3)


@dataclass(frozen=True)
class Prediction:
    """One classification result delivered to the operator surface."""

    model_id: str
    window_index: int
    window_start_ns: int
    top_k: tuple
    recording_time_s: float
    inference_time_ms: float
    total_time_ms: float

    def __post_init__(self) -> None:
        if len(self.top_k) not in VALID_TOP_K:
            raise ValueError(f"top_k must have 1 or 3 entries, "
                             f"got {len(self.top_k)}")
        scores = [s for _, s in self.top_k]
        if scores != sorted(scores, reverse=True):
            raise ValueError("top_k entries must be sorted by score")
        if self.inference_time_ms > self.total_time_ms:
            raise ValueError("inference time cannot exceed total time")

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "window_index": self.window_index,
            "window_start_iso": iso_from_ns(self.window_start_ns),
            "top_k": [[label, float(score)] for label, score in self.top_k],
            "recording_time_s": self.recording_time_s,
            "inference_time_ms": self.inference_time_ms,
            "total_time_ms": self.total_time_ms,
        }


@dataclass(frozen=True)
class EngineConfig:
    active_manifest: ModelManifest
    window_spec: WindowSpec = field(default_factory=WindowSpec)
    save_audio: bool = False
    scenario: str = "headless"
    predict_queue_capacity: int = 2
    top_k: int = 3
    telemetry_period_s: float = 5.0
    bucket_s: float = 600.0
    recordings_root: Path = Path("recordings")

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}")
        if self.predict_queue_capacity < 1:
            raise ConfigError("predict_queue_capacity must be >= 1")
        if self.top_k not in VALID_TOP_K:
            raise ConfigError(f"top_k must be one of {VALID_TOP_K}")
        if self.telemetry_period_s <= 0 or self.bucket_s <= 0:
            raise ConfigError("telemetry cadences must be positive")
        object.__setattr__(self, "recordings_root",
                           Path(self.recordings_root))


class OverrunCounter:
    """Monotonic counters for everything the live loop sheds or survives."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._dropped = 0
        self._backend = 0
        self._gaps = 0
        self._writes = 0

    def inc_dropped(self) -> None:
        with self._lock:
            self._dropped += 1

    def inc_backend_failure(self) -> None:
        with self._lock:
            self._backend += 1

    def inc_stream_gap(self) -> None:
        with self._lock:
            self._gaps += 1

    def inc_write_failure(self) -> None:
        with self._lock:
            self._writes += 1

    @property
    def windows_dropped(self) -> int:
        with self._lock:
            return self._dropped

    @property
    def backend_failures(self) -> int:
        with self._lock:
            return self._backend

    @property
    def stream_gaps(self) -> int:
        with self._lock:
            return self._gaps

    @property
    def write_failures(self) -> int:
        with self._lock:
            return self._writes

    def snapshot(self) -> dict:
        with self._lock:
            return {"windows_dropped": self._dropped,
                    "backend_failures": self._backend,
                    "stream_gaps": self._gaps,
                    "write_failures": self._writes}


@dataclass(frozen=True)
class RunSummary:
    run_id: str
    scenario: str
    model_ids: tuple
    predictions: int
    windows_dropped: int
    backend_failures: int
    stream_gaps: int
    write_failures: int
    wall_duration_s: float
    stream_duration_s: float
    started_iso: str
    finished_iso: str

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["model_ids"] = list(self.model_ids)
        return out


class DropOldestQueue:
    """Bounded FIFO whose put never blocks: overflow evicts the oldest item."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: collections.deque = collections.deque()
        self._cond = threading.Condition()
        self._closed = False

    def put(self, item):
        """Enqueue; returns the evicted item when full, else None."""
        with self._cond:
            if self._closed:
                return item  # treat post-close puts as immediately shed
            dropped = None
            if len(self._items) >= self.capacity:
                dropped = self._items.popleft()
            self._items.append(item)
            self._cond.notify()
            return dropped

    def get(self, timeout: Optional[float] = None):
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while not self._items and not self._closed:
                remaining = (None if deadline is None
                             else deadline - time.monotonic())
                if remaining is not None and remaining <= 0:
                    return None
                self._cond.wait(remaining)
            if self._items:
                return self._items.popleft()
            return None

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        with self._cond:
            return self._closed

    def drained(self) -> bool:
        with self._cond:
            return self._closed and not self._items

    def __len__(self) -> int:
        with self._cond:
            return len(self._items)


class CommandAck:
    """Completion handle for one control command."""

    def __init__(self) -> None:
        self._done = threading.Event()
        self._t0 = time.perf_counter()
        self.ok: Optional[bool] = None
        self.error: Optional[str] = None
        self.latency_ms: Optional[float] = None

    def wait(self, timeout: Optional[float] = None) -> bool:
        return self._done.wait(timeout)

    def resolve(self, ok: bool, error: Optional[str] = None) -> None:
        if self._done.is_set():
            return
        self.ok = ok
        self.error = error
        self.latency_ms = (time.perf_counter() - self._t0) * 1e3
        self._done.set()


@dataclass
class _Command:
    kind: str
    manifest: Optional[ModelManifest] = None
    value: object = None


COMMAND_KINDS = ("change_model", "set_topk", "set_save_audio", "end_process")


class ControlChannel:
    """Thread-safe mailbox feeding operator commands into the engine."""

    def __init__(self) -> None:
        self._items: collections.deque = collections.deque()
        self._cond = threading.Condition()

    def submit(self, kind: str, *, manifest: Optional[ModelManifest] = None,
               value: object = None) -> CommandAck:
        if kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command kind {kind!r}")
        ack = CommandAck()
        with self._cond:
            self._items.append((_Command(kind, manifest, value), ack))
            self._cond.notify_all()
        return ack

    def drain(self, timeout: float) -> list:
        """Return all queued (command, ack) pairs, waiting up to timeout."""
        deadline = time.monotonic() + timeout
        with self._cond:
            while not self._items:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return []
                self._cond.wait(remaining)
            out = list(self._items)
            self._items.clear()
            return out


def swap_model(control: ControlChannel, manifest: ModelManifest,
               timeout: float = 30.0) -> CommandAck:
    """Request a model swap and wait for the engine to acknowledge it."""
    ack = control.submit("change_model", manifest=manifest)
    ack.wait(timeout)
    return ack


def _filename_stamp(wall_time_ns: int) -> str:
    # ISO 8601 basic format: filesystem-safe (no colons), sorts by time.
    secs, frac = divmod(wall_time_ns, 1_000_000_000)
    base = time.strftime("%Y%m%dT%H%M%S", time.gmtime(secs))
    return f"{base}.{frac // 1_000_000:03d}Z"


def write_audio(window: AnalysisWindow, directory: Path,
                wall_time_ns: Optional[int] = None) -> Path:
    """Persist one window as a float32 WAV; returns the file path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ns = window.start_time_ns if wall_time_ns is None else wall_time_ns
    path = directory / f"{_filename_stamp(ns)}_{window.index:06d}.wav"
    write_wav_float32(path, window.sample_rate_hz, window.samples)
    return path


class Engine:
    """Owns the four run contexts and the state they share.

    The predict context is the sole writer of the active model handle, so
    swaps land exactly between windows. Duration is measured in stream time
    (audio consumed), which keeps prediction counts invariant under paced
    clock compression.
    """

    def __init__(self, cfg: EngineConfig, source, *,
                 control: Optional[ControlChannel] = None,
                 infer_fn: Optional[Callable] = None,
                 write_fn: Optional[Callable] = None,
                 temperature=None,
                 on_prediction: Optional[Callable] = None,
                 duration_s: Optional[float] = None,
                 clock_rate: Optional[float] = None,
                 chunk_ms: int = 250,
                 run_id: Optional[str] = None,
                 out_dir: Optional[Path] = None,
                 thermal_policy: Optional[ThermalPolicy] = None,
                 wall_epoch_ns: Optional[int] = None):
        if clock_rate is not None and clock_rate <= 0:
            raise ConfigError("clock_rate must be positive")
        if duration_s is not None and duration_s <= 0:
            raise ConfigError("duration_s must be positive")
        self.cfg = cfg
        self.source = source
        self.control = control if control is not None else ControlChannel()
        self.infer_fn = infer_fn if infer_fn is not None else infer
        self.write_fn = write_fn if write_fn is not None else write_audio
        self.on_prediction = on_prediction
        self.duration_s = duration_s
        self.clock_rate = clock_rate
        self.chunk_ms = chunk_ms
        self.run_id = run_id or (
            time.strftime("%Y%m%d-%H%M%S") + "-" + uuid.uuid4().hex[:6])
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.thermal_policy = thermal_policy or ThermalPolicy()

        self.counters = OverrunCounter()
        self.telemetry = TelemetryLog()
        if temperature is None:
            temperature = SysfsTemperature()
        self.sampler = TemperatureSampler(temperature)

        self._active: Optional[ModelHandle] = None
        self._pending_swap = None      # (handle, ack), owned via _swap_lock
        self._swap_lock = threading.Lock()
        self._top_k = cfg.top_k
        self._save_audio = cfg.save_audio
        self._stop = threading.Event()        # abort: shed queued work
        self._input_done = threading.Event()  # normal end: drain queues
        self._predict_q = DropOldestQueue(cfg.predict_queue_capacity)
        self._write_q = DropOldestQueue(8)
        self._listeners: list = []
        self._listener_lock = threading.Lock()
        self._last_prediction: Optional[Prediction] = None
        self._prediction_count = 0
        self._model_ids: list[str] = []
        self._last_temp: Optional[float] = None
        self._wall_epoch_override = wall_epoch_ns
        self._wall_epoch_ns = 0
        self._stream_epoch_ns: Optional[int] = None
        self._stream_pos_ns = 0
        self._start_perf: Optional[float] = None
        self._emitted_buckets = 0
        self._emitted_thermal: set = set()
        self._threads: list[threading.Thread] = []

    # ---------------------------------------------------------------- events

    def add_listener(self, fn: Callable) -> None:
        with self._listener_lock:
            self._listeners.append(fn)

    def remove_listener(self, fn: Callable) -> None:
        with self._listener_lock:
            if fn in self._listeners:
                self._listeners.remove(fn)

    def _emit(self, event: dict) -> None:
        with self._listener_lock:
            listeners = list(self._listeners)
        for fn in listeners:
            try:
                fn(event)
            except Exception:
                log.exception("event listener failed; removing it")
                self.remove_listener(fn)

    # ---------------------------------------------------------------- clocks

    def _wall_for(self, stream_ns: int) -> int:
        if self._stream_epoch_ns is None:
            return time.time_ns()
        return self._wall_epoch_ns + (stream_ns - self._stream_epoch_ns)

    # ------------------------------------------------------------- lifecycle

    def start(self) -> None:
        """Load the initial model and launch the run contexts."""
        if self._threads:
            raise RuntimeError("engine already started")
        self._active = load_model(self.cfg.active_manifest)
        self._model_ids.append(self._active.model_id)
        self._wall_epoch_ns = (time.time_ns()
                               if self._wall_epoch_override is None
                               else self._wall_epoch_override)
        self._start_perf = time.perf_counter()
        for name, target in (("record", self._record_loop),
                             ("write", self._write_loop),
                             ("predict", self._predict_loop),
                             ("control", self._control_loop)):
            t = threading.Thread(target=target, name=f"engine-{name}",
                                 daemon=True)
            t.start()
            self._threads.append(t)

    def request_stop(self) -> None:
        self._stop.set()

    def join(self, timeout: Optional[float] = None) -> bool:
        deadline = None if timeout is None else time.monotonic() + timeout
        for t in self._threads:
            remaining = (None if deadline is None
                         else max(0.0, deadline - time.monotonic()))
            t.join(remaining)
        return not any(t.is_alive() for t in self._threads)

    def run(self) -> RunSummary:
        """Run to completion (duration, source exhaustion, or end_process)."""
        self.start()
        started_iso = iso_from_ns(self._wall_epoch_ns)
        self._threads[0].join()          # record ends on duration/stop
        self._input_done.set()
        self._predict_q.close()
        self._write_q.close()
        for t in self._threads[1:3]:
            t.join()
        self._stop.set()                 # releases the control loop
        self._threads[3].join()
        wall_s = time.perf_counter() - self._start_perf
        summary = RunSummary(
            run_id=self.run_id,
            scenario=self.cfg.scenario,
            model_ids=tuple(dict.fromkeys(self._model_ids)),
            predictions=self._prediction_count,
            windows_dropped=self.counters.windows_dropped,
            backend_failures=self.counters.backend_failures,
            stream_gaps=self.counters.stream_gaps,
            write_failures=self.counters.write_failures,
            wall_duration_s=wall_s,
            stream_duration_s=self._stream_pos_ns / 1e9,
            started_iso=started_iso,
            finished_iso=iso_from_ns(self._wall_for(
                (self._stream_epoch_ns or 0) + self._stream_pos_ns)))
        if self.out_dir is not None:
            self._write_outputs(summary)
        return summary

    def _write_outputs(self, summary: RunSummary) -> None:
        import json
        self.out_dir.mkdir(parents=True, exist_ok=True)
        records = self.telemetry.snapshot()
        write_raw_csv(self.out_dir / "raw.csv", records)
        write_agg_csv(self.out_dir / "agg.csv",
                      aggregate(records, self.cfg.bucket_s))
        text = json.dumps(summary.to_dict(), indent=2, sort_keys=True)
        (self.out_dir / "run_summary.json").write_text(text + "\n",
                                                       encoding="utf-8")

    # ---------------------------------------------------------------- status

    def status(self) -> dict:
        uptime = (0.0 if self._start_perf is None
                  else time.perf_counter() - self._start_perf)
        temp = self.sampler.sample()
        if temp is not None:
            self._last_temp = temp
        last = self._last_prediction
        return {
            "run_id": self.run_id,
            "model_id": self._active.model_id if self._active else None,
            "scenario": self.cfg.scenario,
            "uptime_s": uptime,
            "last_prediction": last.to_dict() if last else None,
            "counters": self.counters.snapshot(),
            "cpu_temp_c": self._last_temp,
            "save_audio": self._save_audio,
            "top_k": self._top_k,
            "predictions": self._prediction_count,
        }

    # ------------------------------------------------------------ record

    def _chunks(self) -> Iterator:
        stream = capture_stream(self.source, self.chunk_ms, start_ns=0)
        if self.clock_rate is not None:
            stream = paced(stream, self.clock_rate)
        return stream

    def _record_loop(self) -> None:
        spec = self.cfg.window_spec
        rate = spec.target_rate_hz
        limit = (None if self.duration_s is None
                 else round(self.duration_s * rate))
        resampler: Optional[StreamResampler] = None
        windower = Windower(spec)
        fed = 0
        next_sample_s = 0.0
        try:
            for item in self._chunks():
                if self._stop.is_set():
                    return
                if isinstance(item, StreamGap):
                    self.counters.inc_stream_gap()
                    windower.notify_gap()
                    resampler = None
                    continue
                if self._stream_epoch_ns is None:
                    self._stream_epoch_ns = item.start_time_ns
                if resampler is None:
                    resampler = StreamResampler(item.sample_rate_hz, rate)
                out = resampler.push(item.samples)
                done = False
                if limit is not None and fed + len(out) >= limit:
                    out = out[:limit - fed]
                    done = True
                fed += len(out)
                self._stream_pos_ns = round(fed * 1e9 / rate)
                # Temperature is read at the boundary before the window is
                # handed over, so a prediction sees the newest sample.
                next_sample_s = self._periodic_telemetry(fed / rate,
                                                         next_sample_s)
                self._dispatch_windows(
                    windower.push(out, item.start_time_ns))
                if done:
                    return
            if resampler is not None and not self._stop.is_set():
                tail = resampler.flush()
                if limit is not None:
                    tail = tail[:max(0, limit - fed)]
                fed += len(tail)
                self._stream_pos_ns = round(fed * 1e9 / rate)
                self._dispatch_windows(windower.push(tail))
        except Exception:
            log.exception("record context failed; ending the stream")
        finally:
            self._input_done.set()
            self._predict_q.close()
            self._write_q.close()

    def _dispatch_windows(self, windows: list) -> None:
        for window in windows:
            ready_perf = time.perf_counter()
            dropped = self._predict_q.put((window, ready_perf))
            if dropped is not None:
                self.counters.inc_dropped()
                log.warning("predict queue full; dropped window %d",
                            dropped[0].index)
            if self._save_audio:
                shed = self._write_q.put(window)
                if shed is not None:
                    self.counters.inc_write_failure()
                    log.warning("write queue full; window %d audio not saved",
                                shed.index)

    def _periodic_telemetry(self, stream_s: float,
                            next_sample_s: float) -> float:
        while stream_s >= next_sample_s:
            temp = self.sampler.sample()
            if temp is not None:
                self._last_temp = temp
                stamp_ns = self._wall_for(
                    (self._stream_epoch_ns or 0)
                    + round(next_sample_s * 1e9))
                self.telemetry.append(TelemetryRecord(
                    wall_time_ns=stamp_ns,
                    model_id=self._active.model_id,
                    scenario=self.cfg.scenario,
                    cpu_temp_c=temp))
            next_sample_s += self.cfg.telemetry_period_s
        return next_sample_s

    # ------------------------------------------------------------ write

    def _write_loop(self) -> None:
        run_dir = self.cfg.recordings_root / self.run_id
        while True:
            window = self._write_q.get(timeout=0.1)
            if window is None:
                if self._stop.is_set() or self._write_q.drained():
                    return
                continue
            try:
                self.write_fn(window, run_dir,
                              wall_time_ns=self._wall_for(
                                  window.start_time_ns))
            except Exception as exc:
                self.counters.inc_write_failure()
                log.warning("audio write failed for window %d: %s",
                            window.index, exc)

    # ------------------------------------------------------------ predict

    def _apply_pending_swap(self) -> None:
        with self._swap_lock:
            pending, self._pending_swap = self._pending_swap, None
        if pending is None:
            return
        handle, ack = pending
        self._active = handle
        self._model_ids.append(handle.model_id)
        ack.resolve(True)
        log.info("model swapped to %s", handle.model_id)

    def _predict_loop(self) -> None:
        last_emit: Optional[float] = None
        while True:
            self._apply_pending_swap()
            if self._stop.is_set():
                return
            item = self._predict_q.get(timeout=0.05)
            if item is None:
                if self._predict_q.drained():
                    return
                continue
            window, ready_perf = item
            handle = self._active
            try:
                scores, timing = self.infer_fn(handle, window)
            except Exception as exc:
                self.counters.inc_backend_failure()
                log.warning("inference failed on window %d: %s",
                            window.index, exc)
                continue
            k = self._top_k
            entries = tuple(top_k(scores, handle.labels, k))
            now = time.perf_counter()
            total_ms = (now - ready_perf) * 1e3
            recording_s = now - (last_emit if last_emit is not None
                                 else self._start_perf)
            last_emit = now
            prediction = Prediction(
                model_id=scores.model_id,
                window_index=window.index,
                window_start_ns=self._wall_for(window.start_time_ns),
                top_k=entries,
                recording_time_s=recording_s,
                inference_time_ms=timing.inference_ms,
                total_time_ms=max(total_ms, timing.inference_ms),
            )
            self._last_prediction = prediction
            self._prediction_count += 1
            window_ns = round(self.cfg.window_spec.window_s * 1e9)
            self.telemetry.append(TelemetryRecord(
                wall_time_ns=self._wall_for(window.start_time_ns + window_ns),
                model_id=prediction.model_id,
                scenario=self.cfg.scenario,
                cpu_temp_c=self._last_temp,
                inference_time_ms=prediction.inference_time_ms,
                total_time_ms=prediction.total_time_ms))
            if self.on_prediction is not None:
                try:
                    self.on_prediction(prediction)
                except Exception:
                    log.exception("prediction callback failed")
            self._emit({"type": "prediction", **prediction.to_dict()})

    # ------------------------------------------------------------ control

    def _control_loop(self) -> None:
        next_tick = time.monotonic()
        while not self._stop.is_set():
            for cmd, ack in self.control.drain(timeout=0.05):
                self._dispatch_command(cmd, ack)
            if time.monotonic() >= next_tick:
                self._bucket_tick()
                next_tick = time.monotonic() + 0.5
        # Telemetry is complete by the time run() releases this loop, so one
        # last tick flushes every bucket that finished during the run.
        self._bucket_tick()
        for cmd, ack in self.control.drain(timeout=0.0):
            ack.resolve(False, "engine stopped")

    def _dispatch_command(self, cmd: _Command, ack: CommandAck) -> None:
        if cmd.kind == "end_process":
            self._stop.set()
            ack.resolve(True)
        elif cmd.kind == "set_topk":
            if cmd.value in VALID_TOP_K:
                self._top_k = int(cmd.value)
                ack.resolve(True)
            else:
                ack.resolve(False, f"top_k must be one of {VALID_TOP_K}")
        elif cmd.kind == "set_save_audio":
            self._save_audio = bool(cmd.value)
            ack.resolve(True)
        elif cmd.kind == "change_model":
            if (self._active is not None
                    and cmd.manifest == self._active.manifest):
                ack.resolve(True)  # already active: nothing to do
                return
            try:
                handle = load_model(cmd.manifest)
            except Exception as exc:
                ack.resolve(False, str(exc))
                log.warning("model swap rejected: %s", exc)
                return
            with self._swap_lock:
                stale = self._pending_swap
                self._pending_swap = (handle, ack)
            if stale is not None:
                stale[1].resolve(False, "superseded by a newer swap")
        else:
            ack.resolve(False, f"unknown command {cmd.kind!r}")

    def _bucket_tick(self) -> None:
        """Emit events for telemetry buckets that have fully elapsed."""
        records = self.telemetry.snapshot()
        if not records:
            return
        bucket_ns = round(self.cfg.bucket_s * 1e9)
        newest = records[-1].wall_time_ns
        buckets = aggregate(records, self.cfg.bucket_s)
        complete = [b for b in buckets
                    if b.bucket_start_ns + bucket_ns <= newest]
        for bucket in complete[self._emitted_buckets:]:
            self._emit({
                "type": "telemetry-bucket",
                "bucket_start_iso": iso_from_ns(bucket.bucket_start_ns),
                "model_id": bucket.model_id,
                "scenario": bucket.scenario,
                "count": bucket.count,
                "temp_mean": bucket.temp_mean,
                "temp_max": bucket.temp_max,
                "lat_mean_ms": bucket.lat_mean_ms,
                "lat_p95_ms": bucket.lat_p95_ms,
            })
        self._emitted_buckets = len(complete)
        for event in thermal_events(complete, self.thermal_policy):
            key = (event.bucket_start_ns, event.direction)
            if key in self._emitted_thermal:
                continue
            self._emitted_thermal.add(key)
            self._emit({
                "type": "thermal-event",
                "bucket_index": event.bucket_index,
                "bucket_start_iso": iso_from_ns(event.bucket_start_ns),
                "direction": event.direction,
                "max_temp_c": event.max_temp_c,
            })


def run_engine(cfg: EngineConfig, control: Optional[ControlChannel] = None,
               *, source, on_prediction: Optional[Callable] = None,
               **kwargs) -> tuple:
    """Run an engine to completion; returns (predictions, summary)."""
    predictions: list[Prediction] = []

    def collect(p: Prediction) -> None:
        predictions.append(p)
        if on_prediction is not None:
            on_prediction(p)

    engine = Engine(cfg, source, control=control, on_prediction=collect,
                    **kwargs)
    summary = engine.run()
    return predictions, summary
