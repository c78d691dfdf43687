"""Command line front end: run, bench, report, validate."""

import argparse
import dataclasses
import json
import logging
import os
import signal
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .api import (DEFAULT_LISTEN, ApiServer, ModelRegistry, create_app,
                  parse_listen)
from .audio import AnalysisWindow, FileSource, SyntheticSource, WindowSpec
from .audio.wavio import read_wav_mono
from .bench import build_report, execute_plan, load_plan, write_report
from .dsp import log_mel, read_golden_mel
from .engine import Engine, EngineConfig
from .errors import ConfigError, EdgeTaggerError
from .inference import infer, load_manifest, load_model

log = logging.getLogger("edgetagger.cli")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

GOLDEN_TOLERANCE = 1e-4

# Effective run settings: defaults, then config-file values, then explicit
# command line flags. The same key set round-trips through --dump-config.
_RUN_DEFAULTS = {
    "source": "synthetic",
    "model": None,
    "scenario": "headless",
    "listen": DEFAULT_LISTEN,
    "serve": True,
    "save_audio": False,
    "top_k": 3,
    "duration_s": None,
    "clock_rate": 1.0,
    "out_dir": None,
    "recordings_root": "recordings",
    "ui_assets": None,
}
_RUN_SCHEMA = {
    "source": (str,),
    "model": (str, type(None)),
    "scenario": (str,),
    "listen": (str,),
    "serve": (bool,),
    "save_audio": (bool,),
    "top_k": (int,),
    "duration_s": (int, float, type(None)),
    "clock_rate": (int, float),
    "out_dir": (str, type(None)),
    "recordings_root": (str,),
    "ui_assets": (str, type(None)),
}

_BENCH_DEFAULTS = {"plan": None, "time_scale": None, "reports_root": "reports"}
_BENCH_SCHEMA = {
    "plan": (str, type(None)),
    "time_scale": (int, float, type(None)),
    "reports_root": (str,),
}


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")


def _check_type(key: str, value, kinds: tuple) -> None:
    # bool is an int subclass; only accept it where bool is listed.
    if isinstance(value, bool) and bool not in kinds:
        raise ConfigError(f"config key '{key}' must not be a boolean")
    if not isinstance(value, kinds):
        names = "/".join(k.__name__ for k in kinds)
        raise ConfigError(f"config key '{key}' must be {names}, "
                          f"got {type(value).__name__}")


def _load_config_file(path: Path, schema: dict) -> dict:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    except ValueError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: "
                          + ", ".join(unknown))
    for key, value in raw.items():
        _check_type(key, value, schema[key])
    return raw


def _config_path(args) -> Optional[Path]:
    """Explicit --config wins; EDGE_TAGGER_CONFIG is the fallback."""
    if getattr(args, "config", None):
        return Path(args.config)
    env = os.environ.get("EDGE_TAGGER_CONFIG")
    return Path(env) if env else None


def _effective_config(args, defaults: dict, schema: dict) -> dict:
    merged = dict(defaults)
    path = _config_path(args)
    if path is not None:
        merged.update(_load_config_file(path, schema))
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _make_source(kind: str):
    """`synthetic` yields a 1 kHz test tone; anything else is a WAV path."""
    if kind == "synthetic":
        return SyntheticSource(rate=32000, signal="sine", freq_hz=1000.0,
                               amplitude=1.0)
    path = Path(kind)
    if not path.is_file():
        raise ConfigError(f"source file not found: {path}")
    return FileSource(str(path))


def _install_signal_handlers(engine: Engine) -> None:
    def handler(signum, frame):
        log.info("received signal %d, shutting down", signum)
        engine.request_stop()
        # A second signal falls through to the default (hard) behaviour.
        signal.signal(signal.SIGINT, signal.SIG_DFL)
        signal.signal(signal.SIGTERM, signal.SIG_DFL)

    signal.signal(signal.SIGINT, handler)
    signal.signal(signal.SIGTERM, handler)


def _cmd_run(args) -> int:
    cfg = _effective_config(args, _RUN_DEFAULTS, _RUN_SCHEMA)
    if args.dump_config:
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return EXIT_OK
    if not cfg["model"]:
        raise ConfigError(
            "run needs --model (or a 'model' key in the config file)")
    if cfg["scenario"] not in ("headless", "gui"):
        raise ConfigError(f"unknown scenario '{cfg['scenario']}'")
    clock_rate = float(cfg["clock_rate"])
    if clock_rate <= 0:
        raise ConfigError("clock_rate must be positive")
    duration = cfg["duration_s"]
    if duration is not None:
        duration = float(duration)

    manifest_path = Path(cfg["model"])
    manifest = load_manifest(manifest_path)
    engine_cfg = EngineConfig(
        active_manifest=manifest,
        scenario=cfg["scenario"],
        save_audio=cfg["save_audio"],
        top_k=cfg["top_k"],
        recordings_root=Path(cfg["recordings_root"]))
    out_dir = Path(cfg["out_dir"]) if cfg["out_dir"] else None
    engine = Engine(engine_cfg, _make_source(cfg["source"]),
                    duration_s=duration, clock_rate=clock_rate,
                    out_dir=out_dir)

    server = None
    if cfg["serve"]:
        host, port = parse_listen(cfg["listen"])
        static = Path(cfg["ui_assets"]) if cfg["ui_assets"] else None
        if static is not None and not static.is_dir():
            raise ConfigError(f"ui assets directory not found: {static}")
        registry = ModelRegistry.from_dir(manifest_path.resolve().parent)
        server = ApiServer(create_app(engine, registry, static_dir=static),
                           host=host, port=port)

    _install_signal_handlers(engine)
    try:
        if server is not None:
            server.start()
            log.info("control api listening on %s", server.base_url)
        summary = engine.run()
    except Exception:
        log.exception("run failed")
        return EXIT_RUNTIME
    finally:
        if server is not None:
            server.stop()
    print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = _effective_config(args, _BENCH_DEFAULTS, _BENCH_SCHEMA)
    if not cfg["plan"]:
        raise ConfigError(
            "bench needs --plan (or a 'plan' key in the config file)")
    plan = load_plan(Path(cfg["plan"]))
    if cfg["time_scale"] is not None:
        plan = dataclasses.replace(plan, time_scale=float(cfg["time_scale"]))
    try:
        report = execute_plan(plan, reports_root=Path(cfg["reports_root"]))
    except Exception:
        log.exception("bench campaign failed")
        return EXIT_RUNTIME
    print(str(report.path))
    return EXIT_OK


def _cmd_report(args) -> int:
    campaign_dir = Path(args.campaign_dir)
    if not (campaign_dir / "campaign.json").is_file():
        raise ConfigError(f"{campaign_dir} is not a campaign directory "
                          "(campaign.json missing)")
    try:
        report = build_report(campaign_dir)
        write_report(report)
    except Exception:
        log.exception("report generation failed")
        return EXIT_RUNTIME
    print(str(report.path))
    return EXIT_OK


def _validate_model(path: Path) -> None:
    manifest = load_manifest(path)
    handle = load_model(manifest)
    spec = WindowSpec()
    window = AnalysisWindow(
        samples=np.zeros(spec.window_samples, dtype=np.float32),
        sample_rate_hz=spec.target_rate_hz,
        start_time_ns=0, index=0)
    scores, _ = infer(handle, window)
    if len(scores) != len(handle.labels):
        raise ConfigError(
            f"{path}: model emits {len(scores)} scores for "
            f"{len(handle.labels)} labels")
    lo, hi = float(np.min(scores.scores)), float(np.max(scores.scores))
    if not (0.0 <= lo and hi <= 1.0):
        raise ConfigError(
            f"{path}: scores outside [0, 1] (min={lo:.4f}, max={hi:.4f})")
    print(f"model ok: {handle.model_id} "
          f"({manifest.pipeline_kind}, {len(handle.labels)} labels)")


def _validate_golden(directory: Path) -> None:
    sidecars = sorted(directory.glob("*.json"))
    if not sidecars:
        raise ConfigError(f"no golden-vector sidecars found in {directory}")
    failures = []
    worst = 0.0
    for sidecar in sidecars:
        reference = read_golden_mel(sidecar)
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        wav_name = meta.get("input_file", sidecar.stem + ".wav")
        rate, samples = read_wav_mono(str(directory / wav_name))
        window = AnalysisWindow(samples=samples.astype(np.float32),
                                sample_rate_hz=rate, start_time_ns=0, index=0)
        produced = log_mel(window, reference.config)
        if produced.values.shape != reference.values.shape:
            failures.append(f"{sidecar.stem}: shape "
                            f"{produced.values.shape} != "
                            f"{reference.values.shape}")
            continue
        err = float(np.max(np.abs(produced.values - reference.values)))
        worst = max(worst, err)
        if err > GOLDEN_TOLERANCE:
            failures.append(f"{sidecar.stem}: max-abs-error {err:.3e} "
                            f"exceeds {GOLDEN_TOLERANCE:.0e}")
    if failures:
        raise ConfigError("golden vectors diverge from the DSP frontend: "
                          + "; ".join(failures))
    print(f"golden ok: {len(sidecars)} vectors, "
          f"worst max-abs-error {worst:.3e}")


def _cmd_validate(args) -> int:
    if not args.model and not args.golden_dir:
        raise ConfigError("validate needs --model and/or --golden-dir")
    if args.model:
        _validate_model(Path(args.model))
    if args.golden_dir:
        _validate_golden(Path(args.golden_dir))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edge-tagger",
        description="Real-time audio tagging runtime and soak benchmark.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="enable debug logging")
    sub = parser.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="start the live tagging engine")
    run.add_argument("--config", help="JSON config file "
                     "(EDGE_TAGGER_CONFIG is the fallback)")
    run.add_argument("--source", help="'synthetic' or a WAV file path")
    run.add_argument("--model", help="model manifest path")
    scen = run.add_mutually_exclusive_group()
    scen.add_argument("--headless", dest="scenario", action="store_const",
                      const="headless", help="run without the web console")
    scen.add_argument("--gui", dest="scenario", action="store_const",
                      const="gui", help="run with the web console attached")
    run.add_argument("--listen", help=f"control API host:port "
                     f"(default {DEFAULT_LISTEN})")
    run.add_argument("--serve", dest="serve",
                     action=argparse.BooleanOptionalAction, default=None,
                     help="start the control API (--no-serve disables)")
    run.add_argument("--save-audio", dest="save_audio",
                     action=argparse.BooleanOptionalAction, default=None,
                     help="write each analysis window to a WAV file")
    run.add_argument("--top-k", dest="top_k", type=int, choices=(1, 3),
                     help="labels per prediction")
    run.add_argument("--duration", dest="duration_s", type=float,
                     help="stop after this many stream seconds")
    run.add_argument("--clock-rate", dest="clock_rate", type=float,
                     help="stream pacing; 1.0 is real time, higher is faster")
    run.add_argument("--out-dir", dest="out_dir",
                     help="write raw.csv, agg.csv and run_summary.json here")
    run.add_argument("--recordings-root", dest="recordings_root",
                     help="base directory for saved audio windows")
    run.add_argument("--ui-assets", dest="ui_assets",
                     help="static directory served at / (the web console)")
    run.add_argument("--dump-config", action="store_true",
                     help="print the effective configuration and exit")
    run.set_defaults(handler=_cmd_run)

    bench = sub.add_parser("bench", help="execute a benchmark plan")
    bench.add_argument("--config", help="JSON config file "
                       "(EDGE_TAGGER_CONFIG is the fallback)")
    bench.add_argument("--plan", help="benchmark plan path")
    bench.add_argument("--time-scale", dest="time_scale", type=float,
                       help="override the plan's duration compression factor")
    bench.add_argument("--reports-root", dest="reports_root",
                       help="campaign output directory (default reports/)")
    bench.set_defaults(handler=_cmd_bench)

    report = sub.add_parser(
        "report", help="regenerate a campaign report from its artifacts")
    report.add_argument("campaign_dir", help="campaign directory")
    report.set_defaults(handler=_cmd_report)

    validate = sub.add_parser(
        "validate", help="check a model manifest or golden vectors")
    validate.add_argument("--model", help="model manifest path")
    validate.add_argument("--golden-dir", dest="golden_dir",
                          help="golden-vector directory")
    validate.set_defaults(handler=_cmd_validate)
    return parser


def parse_and_dispatch(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.handler(args)
    except EdgeTaggerError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


def main() -> int:
    return parse_and_dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
