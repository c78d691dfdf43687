"""Model loading and single-window inference.

Implements the three pipeline shapes: a single graph consuming raw audio
(embedded-frontend), a frontend graph feeding a classifier graph
(two-stage), and a log-mel transform feeding a classifier graph
(external-spectrogram).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..dsp import MEL_PRESETS, MelConfig, log_mel
from ..errors import BackendExecutionError, ManifestError, ModelGraphError
from .manifest import LabelMap, ModelManifest
from .onnx_exec import GraphExecutor, _sigmoid
from .onnx_proto import load_onnx

__all__ = ["InferenceTiming", "ModelHandle", "ScoreVector", "load_model",
           "infer", "top_k"]


@dataclass(frozen=True)
class ScoreVector:
    """Per-class scores in [0, 1], aligned with the model's label map."""

    scores: np.ndarray
    model_id: str

    def __len__(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class InferenceTiming:
    frontend_ms: float
    classifier_ms: float
    inference_ms: float


@dataclass
class ModelHandle:
    """A loaded model; use from one execution context at a time."""

    manifest: ModelManifest
    labels: LabelMap
    classifier: GraphExecutor
    frontend: GraphExecutor | None
    mel_config: MelConfig | None
    activation: str

    @property
    def model_id(self) -> str:
        return self.manifest.model_id

    @property
    def input_shape(self) -> tuple:
        """Raw-audio shape every pipeline kind consumes."""
        return (1, self.manifest.input_samples)


def _static_dim(shape: tuple, index: int) -> int | None:
    try:
        dim = shape[index]
    except IndexError:
        return None
    return dim if isinstance(dim, int) else None


def _check_audio_input(executor: GraphExecutor, manifest: ModelManifest,
                       role: str) -> None:
    if len(executor.input_defs) != 1:
        raise ModelGraphError(
            f"{role} graph of {manifest.model_id!r} must take exactly one "
            f"input, found {executor.input_names}")
    shape = executor.input_defs[0].shape
    width = _static_dim(shape, -1)
    if width is not None and width != manifest.input_samples:
        raise ModelGraphError(
            f"{role} graph of {manifest.model_id!r} expects {width} samples "
            f"but the manifest declares {manifest.input_samples}")


def _output_width(executor: GraphExecutor) -> int | None:
    return _static_dim(executor.graph.outputs[0].shape, -1)


def _resolve_activation(manifest: ModelManifest, classifier: GraphExecutor) -> str:
    if manifest.output_activation != "auto":
        return manifest.output_activation
    return "none" if classifier.final_op_type() in ("Sigmoid", "Softmax") \
        else "sigmoid"


def load_model(manifest: ModelManifest, intra_op_threads: int = 1) -> ModelHandle:
    """Load artifacts, cross-check them against the manifest, return a handle."""
    for path in (manifest.primary_model_path, manifest.frontend_model_path,
                 manifest.labels_path):
        if path is not None and not path.is_file():
            raise ManifestError(
                f"manifest {manifest.model_id!r} references missing file {path}")
    labels = LabelMap.from_file(manifest.labels_path)
    classifier = GraphExecutor(load_onnx(manifest.primary_model_path),
                               intra_op_threads=intra_op_threads)
    frontend = None
    mel_config = None

    kind = manifest.pipeline_kind
    if kind == "embedded-frontend":
        _check_audio_input(classifier, manifest, "classifier")
    elif kind == "two-stage":
        frontend = GraphExecutor(load_onnx(manifest.frontend_model_path),
                                 intra_op_threads=intra_op_threads)
        _check_audio_input(frontend, manifest, "frontend")
    else:  # external-spectrogram
        if manifest.mel_preset not in MEL_PRESETS:
            raise ManifestError(
                f"unknown mel_preset {manifest.mel_preset!r}; "
                f"available: {sorted(MEL_PRESETS)}")
        mel_config = MEL_PRESETS[manifest.mel_preset]
        shape = classifier.input_defs[0].shape
        mels = _static_dim(shape, -2)
        frames = _static_dim(shape, -1)
        want_frames = 1 + manifest.input_samples // mel_config.hop_length
        if mels is not None and mels != mel_config.n_mels:
            raise ModelGraphError(
                f"classifier of {manifest.model_id!r} expects {mels} mel bands, "
                f"preset {manifest.mel_preset!r} produces {mel_config.n_mels}")
        if frames is not None and frames != want_frames:
            raise ModelGraphError(
                f"classifier of {manifest.model_id!r} expects {frames} frames, "
                f"the input contract produces {want_frames}")

    width = _output_width(classifier)
    if width is not None and width != len(labels):
        raise ManifestError(
            f"labels file for {manifest.model_id!r} has {len(labels)} rows but "
            f"the graph emits {width} classes")
    return ModelHandle(manifest=manifest, labels=labels, classifier=classifier,
                       frontend=frontend, mel_config=mel_config,
                       activation=_resolve_activation(manifest, classifier))


def _softmax_last(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _rank_to(executor: GraphExecutor, array: np.ndarray) -> np.ndarray:
    declared = len(executor.input_defs[0].shape)
    while declared and array.ndim < declared:
        array = array[None, ...]
    return array


def infer(handle: ModelHandle, window) -> tuple[ScoreVector, InferenceTiming]:
    """Score one analysis window; timing is wall-clock per pipeline stage."""
    manifest = handle.manifest
    samples = np.asarray(window.samples, dtype=np.float32)
    if samples.shape != (manifest.input_samples,):
        raise BackendExecutionError(
            f"window has {samples.shape} samples, model {manifest.model_id!r} "
            f"takes {manifest.input_samples}")
    if window.sample_rate_hz != manifest.input_rate_hz:
        raise BackendExecutionError(
            f"window rate {window.sample_rate_hz} does not match the "
            f"manifest's {manifest.input_rate_hz}")

    frontend_ms = 0.0
    if handle.frontend is not None:
        start = time.perf_counter()
        feed = _rank_to(handle.frontend, samples)
        hidden = handle.frontend.run({handle.frontend.input_names[0]: feed})[0]
        frontend_ms = (time.perf_counter() - start) * 1e3
        classifier_in = _rank_to(handle.classifier, np.asarray(hidden))
    elif handle.mel_config is not None:
        start = time.perf_counter()
        frame = log_mel(window, handle.mel_config)
        frontend_ms = (time.perf_counter() - start) * 1e3
        classifier_in = _rank_to(handle.classifier, frame.values)
    else:
        classifier_in = _rank_to(handle.classifier, samples)

    start = time.perf_counter()
    raw = handle.classifier.run(
        {handle.classifier.input_names[0]: classifier_in})[0]
    classifier_ms = (time.perf_counter() - start) * 1e3

    scores = np.asarray(raw, dtype=np.float64).reshape(-1)
    if len(scores) != len(handle.labels):
        raise BackendExecutionError(
            f"model {manifest.model_id!r} emitted {len(scores)} scores for "
            f"{len(handle.labels)} labels")
    if handle.activation == "sigmoid":
        scores = _sigmoid(scores)
    elif handle.activation == "softmax":
        scores = _softmax_last(scores)
    scores = np.clip(scores, 0.0, 1.0).astype(np.float32)
    if not np.isfinite(scores).all():
        raise BackendExecutionError(
            f"model {manifest.model_id!r} produced non-finite scores")
    timing = InferenceTiming(frontend_ms=frontend_ms,
                             classifier_ms=classifier_ms,
                             inference_ms=frontend_ms + classifier_ms)
    return ScoreVector(scores=scores, model_id=manifest.model_id), timing


def top_k(scores: ScoreVector, labels: LabelMap, k: int) -> list:
    """Top k (label, score) pairs, score-descending, ties by class index."""
    n = len(scores.scores)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    if n != len(labels):
        raise ValueError(f"{n} scores vs {len(labels)} labels")
    order = np.lexsort((np.arange(n), -scores.scores))[:k]
    return [(labels[int(i)], float(scores.scores[int(i)])) for i in order]
