"""Fixture model construction.

Every graph is tiny and has a behavior designed so tests know the right
answer by construction:

- band-energy models project 10 ms frames onto quadrature sinusoids at a few
  probe frequencies, square, average over frames, and route band energies to
  classes; class 0 is wired to the 1 kHz band, so a 1 kHz sine must win.
- the uniform model ignores its input (mean * 0) and emits one constant
  logit per class.
- the latency pair computes dense matmul chains sized so the large variant
  costs roughly 20x the small one and its file is >= 10x larger.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .protowrite import GraphBuilder

RATE_HZ = 32000
INPUT_SAMPLES = 320_000
FRAME = 320                      # 10 ms at 32 kHz
FRAMES = INPUT_SAMPLES // FRAME
N_CLASSES = 527

# Probe bands; every frequency is a multiple of 100 Hz so each 10 ms frame
# holds an integer number of cycles and the projection is phase-invariant.
BAND_FREQS_HZ = (1000.0, 200.0, 500.0, 2000.0, 4000.0, 8000.0)
BAND_GAIN = 10.0 / (FRAME / 2) ** 2   # unit-amplitude sine -> logit 10
BASE_BIAS = -2.0

KINDS = ("embedded-frontend", "two-stage", "external-spectrogram")
BEHAVIORS = ("uniform-logits", "band-energy-argmax", "identity-frontend",
             "delay-free")
SCALES = ("small", "large")

RECOGNIZABLE_LABELS = ("Speech", "Music", "Dog", "Cat", "Water", "Siren",
                       "Engine", "Bird")


@dataclass(frozen=True)
class FixtureSpec:
    model_id: str
    kind: str
    behavior: str
    n_classes: int = N_CLASSES
    parameter_scale: str = "small"

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.behavior not in BEHAVIORS:
            raise ValueError(f"behavior must be one of {BEHAVIORS}")
        if self.parameter_scale not in SCALES:
            raise ValueError(f"parameter_scale must be one of {SCALES}")
        if self.n_classes < len(BAND_FREQS_HZ):
            raise ValueError("n_classes smaller than the probe band count")


def label_names(n_classes: int = N_CLASSES) -> list[str]:
    names = list(RECOGNIZABLE_LABELS[:n_classes])
    names += [f"Class{i:03d}" for i in range(len(names), n_classes)]
    return names


def band_basis() -> np.ndarray:
    """(FRAME, 2 * n_bands) quadrature projection matrix."""
    n = np.arange(FRAME, dtype=np.float64)
    columns = []
    for freq in BAND_FREQS_HZ:
        phase = 2.0 * np.pi * freq * n / RATE_HZ
        columns.append(np.cos(phase))
        columns.append(np.sin(phase))
    return np.stack(columns, axis=1).astype(np.float32)


def pair_sum_matrix() -> np.ndarray:
    k = len(BAND_FREQS_HZ)
    q = np.zeros((2 * k, k), dtype=np.float32)
    for band in range(k):
        q[2 * band, band] = 1.0
        q[2 * band + 1, band] = 1.0
    return q


def route_matrix(n_classes: int) -> np.ndarray:
    route = np.zeros((len(BAND_FREQS_HZ), n_classes), dtype=np.float32)
    for band in range(len(BAND_FREQS_HZ)):
        route[band, band] = BAND_GAIN
    return route


def _band_energy_stack(builder: GraphBuilder, source: str,
                       n_classes: int) -> str:
    builder.initializer("frame_shape",
                        np.array([FRAMES, FRAME], dtype=np.int64))
    builder.initializer("basis", band_basis())
    builder.initializer("pair_sum", pair_sum_matrix())
    builder.initializer("route", route_matrix(n_classes))
    builder.initializer("bias",
                        np.full(n_classes, BASE_BIAS, dtype=np.float32))
    frames = builder.node("Reshape", [source, "frame_shape"], ["frames"])
    proj = builder.node("MatMul", [frames, "basis"], ["proj"])
    squared = builder.node("Mul", [proj, proj], ["squared"])
    mean_sq = builder.node("ReduceMean", [squared], ["mean_sq"],
                           axes=[0], keepdims=0)
    energy = builder.node("MatMul", [mean_sq, "pair_sum"], ["band_energy"])
    routed = builder.node("MatMul", [energy, "route"], ["routed"])
    return builder.node("Add", [routed, "bias"], ["logits"])


def band_energy_embedded(n_classes: int = N_CLASSES) -> bytes:
    builder = GraphBuilder("band_energy_embedded")
    builder.input("audio", (1, INPUT_SAMPLES))
    logits = _band_energy_stack(builder, "audio", n_classes)
    builder.node("Sigmoid", [logits], ["scores"])
    builder.output("scores", (n_classes,))
    return builder.to_model_bytes()


def uniform_logits_embedded(n_classes: int = N_CLASSES,
                            logit: float = 0.3) -> bytes:
    builder = GraphBuilder("uniform_logits_embedded")
    builder.input("audio", (1, INPUT_SAMPLES))
    builder.initializer("zero", np.zeros((1, 1), dtype=np.float32))
    builder.initializer("bias",
                        np.full((1, n_classes), logit, dtype=np.float32))
    mean = builder.node("ReduceMean", ["audio"], ["mean"],
                        axes=[0, 1], keepdims=1)
    silenced = builder.node("Mul", [mean, "zero"], ["silenced"])
    builder.node("Add", [silenced, "bias"], ["logits"])
    builder.output("logits", (1, n_classes))
    return builder.to_model_bytes()


def identity_frontend() -> bytes:
    builder = GraphBuilder("identity_frontend")
    builder.input("audio", (1, INPUT_SAMPLES))
    builder.node("Identity", ["audio"], ["embedding"])
    builder.output("embedding", (1, INPUT_SAMPLES))
    return builder.to_model_bytes()


def band_energy_classifier(n_classes: int = N_CLASSES) -> bytes:
    builder = GraphBuilder("band_energy_classifier")
    builder.input("embedding", (1, INPUT_SAMPLES))
    _band_energy_stack(builder, "embedding", n_classes)
    builder.output("logits", (n_classes,))
    return builder.to_model_bytes()


def spectrogram_classifier(band_for_1khz: int, n_mels: int = 64,
                           n_frames: int = 1001,
                           n_classes: int = N_CLASSES) -> bytes:
    """Classifier over a log-mel matrix: class c reads mel band c mod n_mels.

    Class 0 reads the band containing 1 kHz with a slightly larger weight
    than any alias, so a 1 kHz sine yields a strict argmax at class 0.
    """
    weights = np.zeros((n_mels, n_classes), dtype=np.float32)
    for cls in range(1, n_classes):
        weights[cls % n_mels, cls] = 1.0
    weights[band_for_1khz, 0] = 1.001
    builder = GraphBuilder("spectrogram_classifier")
    builder.input("spec", (1, n_mels, n_frames))
    builder.initializer("weights", weights)
    pooled = builder.node("ReduceMean", ["spec"], ["pooled"],
                          axes=[2], keepdims=0)
    builder.node("MatMul", [pooled, "weights"], ["logits"])
    builder.output("logits", (1, n_classes))
    return builder.to_model_bytes()


def latency_model(scale: str, n_classes: int = N_CLASSES) -> bytes:
    """Dense chain sized for a clear small < large latency ordering."""
    hidden, extra_layers, seed = ((32, 0, 101) if scale == "small"
                                  else (320, 1, 102))
    rng = np.random.default_rng(seed)

    def dense(fan_in, fan_out):
        return rng.normal(scale=1.0 / np.sqrt(fan_in),
                          size=(fan_in, fan_out)).astype(np.float32)

    builder = GraphBuilder(f"latency_{scale}")
    builder.input("audio", (1, INPUT_SAMPLES))
    builder.initializer("frame_shape",
                        np.array([FRAMES, FRAME], dtype=np.int64))
    builder.initializer("w_in", dense(FRAME, hidden))
    current = builder.node("Reshape", ["audio", "frame_shape"], ["frames"])
    current = builder.node("MatMul", [current, "w_in"], ["h0"])
    current = builder.node("Relu", [current], ["h0_relu"])
    for layer in range(extra_layers):
        w_name = builder.initializer(f"w_{layer}", dense(hidden, hidden))
        current = builder.node("MatMul", [current, w_name], [f"h{layer + 1}"])
        current = builder.node("Relu", [current], [f"h{layer + 1}_relu"])
    pooled = builder.node("ReduceMean", [current], ["pooled"],
                          axes=[0], keepdims=0)
    builder.initializer("w_out", dense(hidden, n_classes))
    builder.node("MatMul", [pooled, "w_out"], ["logits"])
    builder.output("logits", (n_classes,))
    return builder.to_model_bytes()


FIXTURE_SPECS = (
    FixtureSpec("tiny-embedded", "embedded-frontend", "band-energy-argmax"),
    FixtureSpec("tiny-uniform", "embedded-frontend", "uniform-logits"),
    FixtureSpec("tiny-two-stage", "two-stage", "identity-frontend"),
    FixtureSpec("tiny-spectro", "external-spectrogram", "band-energy-argmax"),
    FixtureSpec("lat-small", "embedded-frontend", "delay-free",
                parameter_scale="small"),
    FixtureSpec("lat-large", "embedded-frontend", "delay-free",
                parameter_scale="large"),
)

LABELS_FILE = "labels527.txt"


def _manifest_payload(spec: FixtureSpec, files: dict) -> dict:
    payload = {
        "model_id": spec.model_id,
        "pipeline_kind": spec.kind,
        "primary_model_path": files["primary"],
        "labels_path": LABELS_FILE,
        "input_rate_hz": RATE_HZ,
        "input_samples": INPUT_SAMPLES,
    }
    if "frontend" in files:
        payload["frontend_model_path"] = files["frontend"]
    if spec.kind == "external-spectrogram":
        payload["mel_preset"] = "mel64"
    return payload


def generate_fixture(spec: FixtureSpec, out_dir: Path,
                     band_for_1khz: int | None = None) -> dict:
    """Write model file(s), manifest, and shared labels; return file map."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    if spec.kind == "two-stage":
        front = f"{spec.model_id}-frontend.onnx"
        (out_dir / front).write_bytes(identity_frontend())
        files["frontend"] = front
        primary = f"{spec.model_id}-classifier.onnx"
        (out_dir / primary).write_bytes(
            band_energy_classifier(spec.n_classes))
    elif spec.kind == "external-spectrogram":
        if band_for_1khz is None:
            raise ValueError("spectrogram fixtures need the 1 kHz band index")
        primary = f"{spec.model_id}.onnx"
        (out_dir / primary).write_bytes(
            spectrogram_classifier(band_for_1khz, n_classes=spec.n_classes))
    elif spec.behavior == "uniform-logits":
        primary = f"{spec.model_id}.onnx"
        (out_dir / primary).write_bytes(
            uniform_logits_embedded(spec.n_classes))
    elif spec.behavior == "delay-free":
        primary = f"{spec.model_id}.onnx"
        (out_dir / primary).write_bytes(
            latency_model(spec.parameter_scale, spec.n_classes))
    else:
        primary = f"{spec.model_id}.onnx"
        (out_dir / primary).write_bytes(band_energy_embedded(spec.n_classes))
    files["primary"] = primary

    labels_path = out_dir / LABELS_FILE
    labels_path.write_text("".join(f"{n}\n" for n in label_names(spec.n_classes)),
                           encoding="utf-8")
    manifest_path = out_dir / f"{spec.model_id}.json"
    manifest_path.write_text(
        json.dumps(_manifest_payload(spec, files), indent=2) + "\n",
        encoding="utf-8")
    files["manifest"] = manifest_path.name
    return files


README_TEXT = """\
# Fixture models

Tiny ONNX graphs with constructed, test-oracle-friendly behavior.  All take
10 s of 32 kHz mono audio (320,000 samples) unless noted, emit 527 class
scores, and share `labels527.txt`.

- `tiny-embedded`: projects 10 ms frames onto quadrature sinusoids at
  1000/200/500/2000/4000/8000 Hz, squares, averages, routes band k to class
  k (1 kHz -> class 0), bias -2, sigmoid inside the graph.  A 1 kHz sine
  must produce argmax class 0.
- `tiny-uniform`: output is one constant logit (0.3) per class for any
  input; all scores equal after the runtime's sigmoid.
- `tiny-two-stage`: identity frontend plus a classifier identical to
  `tiny-embedded` but emitting raw logits; scores must match
  `tiny-embedded` exactly on the same window.
- `tiny-spectro`: consumes a 64 x 1001 log-mel matrix (preset `mel64`);
  class c reads mel band c mod 64 averaged over time, class 0 reads the
  band containing 1 kHz with weight 1.001 so a 1 kHz sine wins strictly.
- `lat-small` / `lat-large`: dense matmul chains with no special semantics;
  the large file is >= 10x the small one and costs roughly 20x the
  floating-point work, for latency-ordering tests.

Regenerate with `fixture-tools models --out <dir>`; output is byte-stable.
"""


def generate_all_models(out_dir: Path, band_for_1khz: int) -> list[dict]:
    out_dir = Path(out_dir)
    results = []
    for spec in FIXTURE_SPECS:
        results.append(generate_fixture(spec, out_dir,
                                        band_for_1khz=band_for_1khz))
    (out_dir / "README.md").write_text(README_TEXT, encoding="utf-8")
    return results
