"""Soak campaign harness: timed runs per model with idle gaps between.

A campaign executes plan entries strictly in order, one engine at a time,
journaling each completed entry so an interrupted campaign resumes from
where it stopped. The final report is derived entirely from artifacts
persisted on disk, so regenerating it later reproduces the same bytes.
"""

from __future__ import annotations

import json
import logging
import os
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .audio import SyntheticSource
from .engine import Engine, EngineConfig
from .errors import ConfigError
from .inference import ModelManifest, load_manifest
from .telemetry import (SCENARIOS, TelemetryRecord, TemperatureSampler,
                        ThermalPolicy, nearest_rank_p95, read_agg_csv,
                        read_raw_csv, thermal_events, write_raw_csv)

log = logging.getLogger(__name__)

IDLE_SAMPLE_PERIOD_S = 60.0


@dataclass(frozen=True)
class PlanEntry:
    manifest: ModelManifest
    run_duration_s: float = 86_400.0
    scenario: str = "headless"

    def __post_init__(self) -> None:
        if self.run_duration_s <= 0:
            raise ConfigError("run_duration_s must be positive")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}")


@dataclass(frozen=True)
class BenchmarkPlan:
    entries: tuple
    idle_between_s: float = 3600.0
    time_scale: float = 1.0
    campaign_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.entries:
            raise ConfigError("plan has no entries")
        if self.idle_between_s < 0:
            raise ConfigError("idle_between_s cannot be negative")
        if self.time_scale <= 0:
            raise ConfigError("time_scale must be positive")
        object.__setattr__(self, "entries", tuple(self.entries))


_PLAN_KEYS = {"entries", "idle_between_s", "time_scale", "campaign_id"}
_ENTRY_KEYS = {"manifest", "run_duration_s", "scenario"}


def load_plan(path: Path) -> BenchmarkPlan:
    """Parse a JSON plan file; manifest paths resolve against the plan."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read plan {path}: {exc}")
    if not isinstance(payload, dict):
        raise ConfigError("plan file must contain a JSON object")
    unknown = set(payload) - _PLAN_KEYS
    if unknown:
        raise ConfigError(f"unknown plan keys: {sorted(unknown)}")
    raw_entries = payload.get("entries")
    if not isinstance(raw_entries, list) or not raw_entries:
        raise ConfigError("plan entries must be a non-empty list")
    entries = []
    for i, raw in enumerate(raw_entries):
        if not isinstance(raw, dict):
            raise ConfigError(f"entry {i} must be an object")
        unknown = set(raw) - _ENTRY_KEYS
        if unknown:
            raise ConfigError(f"entry {i} has unknown keys {sorted(unknown)}")
        if "manifest" not in raw:
            raise ConfigError(f"entry {i} is missing 'manifest'")
        manifest_path = (path.parent / raw["manifest"]).resolve()
        entries.append(PlanEntry(
            manifest=load_manifest(manifest_path),
            run_duration_s=float(raw.get("run_duration_s", 86_400.0)),
            scenario=raw.get("scenario", "headless")))
    return BenchmarkPlan(
        entries=tuple(entries),
        idle_between_s=float(payload.get("idle_between_s", 3600.0)),
        time_scale=float(payload.get("time_scale", 1.0)),
        campaign_id=payload.get("campaign_id"))


@dataclass(frozen=True)
class RunReport:
    campaign_id: str
    campaign_dir: Path
    payload: dict

    @property
    def path(self) -> Path:
        return self.campaign_dir / "report.json"


def write_report(report: RunReport) -> Path:
    """Persist the report atomically; same bytes for the same artifacts."""
    _atomic_write(report.path,
                  json.dumps(report.payload, indent=2, sort_keys=True) + "\n")
    return report.path


def _entry_dir_name(index: int, model_id: str) -> str:
    return f"entry-{index:02d}-{model_id}"


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _read_journal(campaign_dir: Path) -> dict:
    """Completed entries keyed by index, in journal order."""
    journal = campaign_dir / "journal.ndjson"
    done = {}
    if journal.is_file():
        for line in journal.read_text(encoding="utf-8").splitlines():
            if line.strip():
                record = json.loads(line)
                done[record["entry_index"]] = record
    return done


def _append_journal(campaign_dir: Path, record: dict) -> None:
    with open(campaign_dir / "journal.ndjson", "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def _default_source_factory(entry: PlanEntry):
    return SyntheticSource(rate=32000, signal="sine", freq_hz=1000.0,
                           amplitude=1.0)


def _idle_cooldown(campaign_dir: Path, index: int, wall_s: float,
                   scaled_period_s: float, sampler: TemperatureSampler,
                   scenario: str) -> None:
    """Sit out the gap between entries, sampling temperature slowly."""
    deadline = time.monotonic() + wall_s
    records = []
    while True:
        temp = sampler.sample()
        if temp is not None:
            records.append(TelemetryRecord(
                wall_time_ns=time.time_ns(), model_id="idle",
                scenario=scenario, cpu_temp_c=temp))
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            break
        time.sleep(min(scaled_period_s, remaining))
    if records:
        write_raw_csv(campaign_dir / f"idle-after-{index:02d}.csv", records)


def execute_plan(plan: BenchmarkPlan, *,
                 reports_root: Path = Path("reports"),
                 source_factory: Optional[Callable] = None,
                 temperature=None,
                 thermal_policy: Optional[ThermalPolicy] = None,
                 on_entry_complete: Optional[Callable] = None) -> RunReport:
    """Run every pending plan entry in order and write the campaign report.

    Already-journaled entries are skipped, which makes a rerun after a
    crash resume from the first incomplete entry.
    """
    campaign_id = plan.campaign_id or (
        "campaign-" + time.strftime("%Y%m%d-%H%M%S") + "-"
        + uuid.uuid4().hex[:6])
    campaign_dir = Path(reports_root) / campaign_id
    campaign_dir.mkdir(parents=True, exist_ok=True)
    meta_path = campaign_dir / "campaign.json"
    if not meta_path.is_file():
        meta = {
            "campaign_id": campaign_id,
            "idle_between_s": plan.idle_between_s,
            "time_scale": plan.time_scale,
            "entries": [{"model_id": e.manifest.model_id,
                         "run_duration_s": e.run_duration_s,
                         "scenario": e.scenario} for e in plan.entries],
        }
        _atomic_write(meta_path, json.dumps(meta, indent=2, sort_keys=True)
                      + "\n")
    factory = source_factory or _default_source_factory
    sampler = TemperatureSampler(temperature)
    done = _read_journal(campaign_dir)
    idle_wall_s = plan.idle_between_s * plan.time_scale

    for index, entry in enumerate(plan.entries):
        if index in done:
            log.info("entry %d (%s) already journaled; skipping",
                     index, entry.manifest.model_id)
            continue
        if index > 0 and idle_wall_s > 0:
            _idle_cooldown(campaign_dir, index - 1, idle_wall_s,
                           IDLE_SAMPLE_PERIOD_S * plan.time_scale,
                           sampler, plan.entries[index - 1].scenario)
        record = _run_entry(campaign_dir, index, entry, plan, factory,
                            temperature, thermal_policy)
        _append_journal(campaign_dir, record)
        done[index] = record
        if on_entry_complete is not None:
            on_entry_complete(index, record)

    report = build_report(campaign_dir, policy=thermal_policy)
    write_report(report)
    return report


def _run_entry(campaign_dir: Path, index: int, entry: PlanEntry,
               plan: BenchmarkPlan, factory, temperature,
               thermal_policy) -> dict:
    model_id = entry.manifest.model_id
    out_dir = campaign_dir / _entry_dir_name(index, model_id)
    record = {"entry_index": index, "model_id": model_id,
              "scenario": entry.scenario, "status": "ok", "error": None,
              "out_dir": out_dir.name}
    stream_s = entry.run_duration_s * plan.time_scale
    log.info("entry %d: %s for %.1f s (%s)", index, model_id, stream_s,
             entry.scenario)
    try:
        cfg = EngineConfig(active_manifest=entry.manifest,
                           scenario=entry.scenario)
        engine = Engine(cfg, factory(entry),
                        duration_s=stream_s, clock_rate=1.0,
                        temperature=temperature,
                        run_id=f"{campaign_dir.name}-entry{index:02d}",
                        out_dir=out_dir, thermal_policy=thermal_policy)
        engine.run()
    except Exception as exc:
        log.exception("entry %d (%s) failed", index, model_id)
        record["status"] = "failed"
        record["error"] = str(exc)
        record["out_dir"] = out_dir.name if out_dir.is_dir() else None
    return record


def _entry_summary(entry_dir: Path, policy: ThermalPolicy) -> dict:
    """Stats recomputed from the entry's persisted artifacts only."""
    summary_payload = json.loads(
        (entry_dir / "run_summary.json").read_text(encoding="utf-8"))
    records = read_raw_csv(entry_dir / "raw.csv")
    lats = sorted(r.inference_time_ms for r in records
                  if r.inference_time_ms is not None)
    temps = [r.cpu_temp_c for r in records if r.cpu_temp_c is not None]
    buckets = read_agg_csv(entry_dir / "agg.csv")
    events = thermal_events(buckets, policy)
    out = {
        "predictions": summary_payload["predictions"],
        "windows_dropped": summary_payload["windows_dropped"],
        "backend_failures": summary_payload["backend_failures"],
        "stream_gaps": summary_payload["stream_gaps"],
        "thermal_events": len(events),
        "lat_mean_ms": sum(lats) / len(lats) if lats else None,
        "lat_p95_ms": nearest_rank_p95(lats) if lats else None,
        "lat_min_ms": lats[0] if lats else None,
        "lat_max_ms": lats[-1] if lats else None,
        "temp_mean": sum(temps) / len(temps) if temps else None,
        "temp_max": max(temps) if temps else None,
    }
    return out


def compare(summaries: list) -> list:
    """Rank model summaries: mean latency first, then max temperature.

    Every summary must carry the same scenario; rankings across scenarios
    are not comparable.
    """
    if len(summaries) < 2:
        raise ConfigError("ranking needs at least two summaries")
    scenarios = {s["scenario"] for s in summaries}
    if len(scenarios) != 1:
        raise ConfigError(f"cannot rank across scenarios {sorted(scenarios)}")
    ordered = sorted(
        summaries,
        key=lambda s: (s["lat_mean_ms"],
                       s["temp_max"] if s["temp_max"] is not None
                       else float("-inf"),
                       s["model_id"]))
    return [{"rank": i + 1, "model_id": s["model_id"],
             "lat_mean_ms": s["lat_mean_ms"], "temp_max": s["temp_max"]}
            for i, s in enumerate(ordered)]


def build_report(campaign_dir: Path,
                 policy: Optional[ThermalPolicy] = None) -> RunReport:
    """Assemble the campaign report from journal and per-entry artifacts."""
    campaign_dir = Path(campaign_dir)
    policy = policy or ThermalPolicy()
    meta = json.loads((campaign_dir / "campaign.json")
                      .read_text(encoding="utf-8"))
    done = _read_journal(campaign_dir)
    entries = []
    rankable: dict[str, list] = {}
    for index in sorted(done):
        record = done[index]
        row = {"entry_index": index, "model_id": record["model_id"],
               "scenario": record["scenario"], "status": record["status"],
               "error": record["error"], "raw_csv": None, "agg_csv": None,
               "summary": None}
        if record["status"] == "ok":
            entry_dir = campaign_dir / record["out_dir"]
            row["raw_csv"] = f"{record['out_dir']}/raw.csv"
            row["agg_csv"] = f"{record['out_dir']}/agg.csv"
            row["summary"] = _entry_summary(entry_dir, policy)
            if row["summary"]["lat_mean_ms"] is not None:
                rankable.setdefault(record["scenario"], []).append({
                    "model_id": record["model_id"],
                    "scenario": record["scenario"],
                    "lat_mean_ms": row["summary"]["lat_mean_ms"],
                    "temp_max": row["summary"]["temp_max"]})
        entries.append(row)
    rankings = {scenario: compare(group)
                for scenario, group in sorted(rankable.items())
                if len(group) >= 2}
    payload = {
        "campaign_id": meta["campaign_id"],
        "idle_between_s": meta["idle_between_s"],
        "time_scale": meta["time_scale"],
        "entries": entries,
        "rankings": rankings,
    }
    return RunReport(campaign_id=meta["campaign_id"],
                     campaign_dir=campaign_dir, payload=payload)
