"""Command line entry point: regenerate fixture models and golden vectors."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import golden, models

log = logging.getLogger("fixture_tools")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fixture-tools",
        description="Generate the tiny ONNX fixture models and golden "
                    "log-mel vectors used by the test suite.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_models = sub.add_parser("models", help="generate fixture model bundles")
    p_models.add_argument("--out", type=Path, default=Path("fixtures/models"),
                          help="output directory (default: fixtures/models)")

    p_golden = sub.add_parser("golden", help="generate golden log-mel vectors")
    p_golden.add_argument("--out", type=Path, default=Path("fixtures/golden"),
                          help="output directory (default: fixtures/golden)")
    p_golden.add_argument("--preset", default="mel64",
                          choices=sorted(golden.PRESETS),
                          help="mel preset to dump (default: mel64)")

    p_all = sub.add_parser("all", help="generate everything")
    p_all.add_argument("--out", type=Path, default=Path("fixtures"),
                       help="output root (default: fixtures)")
    return parser


def _generate_models(out: Path) -> None:
    band = golden.band_containing(1000.0, golden.MEL64)
    results = models.generate_all_models(out, band_for_1khz=band)
    log.info("wrote %d fixture bundles to %s", len(results), out)


def _generate_golden(out: Path, preset: str) -> None:
    sidecars = golden.generate_golden_vectors(preset, out)
    log.info("wrote %d golden vectors to %s", len(sidecars), out)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "models":
            _generate_models(args.out)
        elif args.command == "golden":
            _generate_golden(args.out, args.preset)
        else:
            _generate_models(args.out / "models")
            _generate_golden(args.out / "golden", "mel64")
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
