"""Model manifests and label maps.

A manifest is one JSON file per deployable model describing the pipeline
kind, artifact paths, and input contract.  Relative paths resolve against
the manifest's own directory so model bundles stay relocatable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..errors import ManifestError

__all__ = ["PIPELINE_KINDS", "ACTIVATIONS", "LabelMap", "ModelManifest",
           "load_manifest"]

PIPELINE_KINDS = ("embedded-frontend", "two-stage", "external-spectrogram")
ACTIVATIONS = ("auto", "sigmoid", "softmax", "none")
_PATH_FIELDS = ("primary_model_path", "frontend_model_path", "labels_path")


@dataclass(frozen=True)
class LabelMap:
    """Ordered class display names; index = class id."""

    names: tuple

    def __post_init__(self) -> None:
        if not self.names:
            raise ManifestError("label map is empty")
        if len(set(self.names)) != len(self.names):
            raise ManifestError("label map contains duplicate names")

    def __len__(self) -> int:
        return len(self.names)

    def __getitem__(self, index: int) -> str:
        return self.names[index]

    @classmethod
    def from_file(cls, path: Path) -> "LabelMap":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ManifestError(f"cannot read labels file {path}: {exc}")
        names = tuple(line.strip() for line in text.splitlines() if line.strip())
        return cls(names=names)


@dataclass(frozen=True)
class ModelManifest:
    model_id: str
    pipeline_kind: str
    primary_model_path: Path
    labels_path: Path
    frontend_model_path: Path | None = None
    mel_preset: str | None = None
    input_rate_hz: int = 32000
    input_samples: int = 320_000
    output_activation: str = "auto"

    def __post_init__(self) -> None:
        for name in _PATH_FIELDS:
            value = getattr(self, name)
            if value is not None and not isinstance(value, Path):
                object.__setattr__(self, name, Path(value))
        if not self.model_id:
            raise ManifestError("model_id must be non-empty")
        if self.pipeline_kind not in PIPELINE_KINDS:
            raise ManifestError(
                f"unknown pipeline_kind {self.pipeline_kind!r}; "
                f"expected one of {PIPELINE_KINDS}")
        if self.output_activation not in ACTIVATIONS:
            raise ManifestError(
                f"unknown output_activation {self.output_activation!r}; "
                f"expected one of {ACTIVATIONS}")
        if self.input_rate_hz <= 0 or self.input_samples <= 0:
            raise ManifestError("input_rate_hz and input_samples must be positive")
        kind = self.pipeline_kind
        if kind == "two-stage" and self.frontend_model_path is None:
            raise ManifestError("two-stage manifests require frontend_model_path")
        if kind == "external-spectrogram" and self.mel_preset is None:
            raise ManifestError("external-spectrogram manifests require mel_preset")
        if kind == "embedded-frontend" and (
                self.frontend_model_path is not None or self.mel_preset is not None):
            raise ManifestError(
                "embedded-frontend manifests take neither frontend_model_path "
                "nor mel_preset")
        if kind == "two-stage" and self.mel_preset is not None:
            raise ManifestError("two-stage manifests do not take mel_preset")
        if kind == "external-spectrogram" and self.frontend_model_path is not None:
            raise ManifestError(
                "external-spectrogram manifests do not take frontend_model_path")


def load_manifest(path: Path) -> ModelManifest:
    """Load and validate one manifest file; unknown keys are rejected."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}")
    if not isinstance(payload, dict):
        raise ManifestError(f"manifest {path} must be a JSON object")
    allowed = {f.name for f in fields(ModelManifest)}
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise ManifestError(f"manifest {path} has unknown keys: {unknown}")
    try:
        manifest = ModelManifest(**payload)
    except TypeError as exc:
        raise ManifestError(f"manifest {path} is incomplete: {exc}")
    resolved = {}
    for name in _PATH_FIELDS:
        value = getattr(manifest, name)
        if value is not None:
            resolved[name] = (path.parent / value).resolve()
    return replace(manifest, **resolved)
