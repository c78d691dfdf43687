"""Model loading and execution for the three pipeline shapes."""

from .manifest import (ACTIVATIONS, PIPELINE_KINDS, LabelMap, ModelManifest,
                       load_manifest)
from .onnx_exec import GraphExecutor
from .onnx_proto import OnnxModel, load_onnx
from .runtime import (InferenceTiming, ModelHandle, ScoreVector, infer,
                      load_model, top_k)

__all__ = [
    "ACTIVATIONS",
    "PIPELINE_KINDS",
    "LabelMap",
    "ModelManifest",
    "load_manifest",
    "GraphExecutor",
    "OnnxModel",
    "load_onnx",
    "InferenceTiming",
    "ModelHandle",
    "ScoreVector",
    "infer",
    "load_model",
    "top_k",
]
