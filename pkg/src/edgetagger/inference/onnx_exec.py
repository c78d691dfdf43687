"""Numpy interpreter for the ONNX graphs this runtime deploys.

Covers the operator subset our pipeline graphs are built from, with opset-13
semantics (Squeeze/Unsqueeze/Clip take their parameters as inputs, Reshape
takes the target shape as a second input).  Execution is single-threaded by
default so repeated runs are bit-identical.
"""

from __future__ import annotations

from contextlib import nullcontext

import numpy as np

from ..errors import BackendExecutionError, ModelGraphError
from .onnx_proto import GraphDef, NodeDef, OnnxModel, ValueDef

try:
    from threadpoolctl import ThreadpoolController
    _POOLS = ThreadpoolController()
except ImportError:  # pragma: no cover - dependency is declared
    _POOLS = None

__all__ = ["GraphExecutor"]


def _axes_from(node: NodeDef, values: dict, position: int):
    """Axes via second input (opset 13 style) or legacy attribute."""
    if len(node.inputs) > position and node.inputs[position]:
        axes = values[node.inputs[position]]
        return tuple(int(a) for a in np.asarray(axes).reshape(-1))
    if "axes" in node.attrs:
        return tuple(int(a) for a in node.attrs["axes"])
    return None


def _op_reshape(node: NodeDef, inputs: list, values: dict) -> np.ndarray:
    data = inputs[0]
    shape = [int(d) for d in np.asarray(inputs[1]).reshape(-1)]
    if not node.attrs.get("allowzero", 0):
        shape = [data.shape[i] if d == 0 else d for i, d in enumerate(shape)]
    return data.reshape(shape)


def _op_gemm(node: NodeDef, inputs: list, values: dict) -> np.ndarray:
    a, b = inputs[0], inputs[1]
    if node.attrs.get("transA", 0):
        a = a.T
    if node.attrs.get("transB", 0):
        b = b.T
    y = float(node.attrs.get("alpha", 1.0)) * (a @ b)
    if len(inputs) > 2 and inputs[2] is not None:
        y = y + float(node.attrs.get("beta", 1.0)) * inputs[2]
    return y


def _op_reduce(node: NodeDef, inputs: list, values: dict, fn) -> np.ndarray:
    axes = _axes_from(node, values, 1)
    keepdims = bool(node.attrs.get("keepdims", 1))
    return fn(inputs[0], axis=axes, keepdims=keepdims)


def _op_softmax(node: NodeDef, inputs: list, values: dict) -> np.ndarray:
    axis = int(node.attrs.get("axis", -1))
    x = inputs[0]
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def _op_clip(node: NodeDef, inputs: list, values: dict) -> np.ndarray:
    lo = inputs[1] if len(inputs) > 1 else None
    hi = inputs[2] if len(inputs) > 2 else None
    return np.clip(inputs[0], lo, hi)


def _op_squeeze(node: NodeDef, inputs: list, values: dict) -> np.ndarray:
    axes = _axes_from(node, values, 1)
    if axes is None:
        axes = tuple(i for i, d in enumerate(inputs[0].shape) if d == 1)
    return np.squeeze(inputs[0], axis=axes)


def _op_unsqueeze(node: NodeDef, inputs: list, values: dict) -> np.ndarray:
    axes = _axes_from(node, values, 1)
    if axes is None:
        raise BackendExecutionError(f"Unsqueeze {node.name!r} without axes")
    return np.expand_dims(inputs[0], axis=axes)


def _op_flatten(node: NodeDef, inputs: list, values: dict) -> np.ndarray:
    axis = int(node.attrs.get("axis", 1))
    shape = inputs[0].shape
    lead = int(np.prod(shape[:axis])) if axis else 1
    return inputs[0].reshape(lead, -1)


def _op_transpose(node: NodeDef, inputs: list, values: dict) -> np.ndarray:
    perm = node.attrs.get("perm")
    return np.transpose(inputs[0], axes=perm)


def _op_concat(node: NodeDef, inputs: list, values: dict) -> np.ndarray:
    return np.concatenate(inputs, axis=int(node.attrs["axis"]))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out.astype(x.dtype, copy=False)


_OPS = {
    "Identity": lambda n, i, v: i[0],
    "Reshape": _op_reshape,
    "Flatten": _op_flatten,
    "Transpose": _op_transpose,
    "MatMul": lambda n, i, v: i[0] @ i[1],
    "Gemm": _op_gemm,
    "Add": lambda n, i, v: i[0] + i[1],
    "Sub": lambda n, i, v: i[0] - i[1],
    "Mul": lambda n, i, v: i[0] * i[1],
    "Div": lambda n, i, v: i[0] / i[1],
    "Relu": lambda n, i, v: np.maximum(i[0], 0),
    "Sigmoid": lambda n, i, v: _sigmoid(i[0]),
    "Softmax": _op_softmax,
    "ReduceMean": lambda n, i, v: _op_reduce(n, i, v, np.mean),
    "ReduceSum": lambda n, i, v: _op_reduce(n, i, v, np.sum),
    "Squeeze": _op_squeeze,
    "Unsqueeze": _op_unsqueeze,
    "Concat": _op_concat,
    "Clip": _op_clip,
    "Constant": lambda n, i, v: np.asarray(n.attrs["value"]),
}


class GraphExecutor:
    """Executes one parsed graph; construction validates it fully."""

    def __init__(self, model: OnnxModel, intra_op_threads: int = 1):
        self.graph: GraphDef = model.graph
        self.intra_op_threads = intra_op_threads
        self._validate()

    def _validate(self) -> None:
        graph = self.graph
        known = set(graph.initializers)
        self.input_defs: list[ValueDef] = [
            v for v in graph.inputs if v.name not in known]
        known.update(v.name for v in self.input_defs)
        for node in graph.nodes:
            if node.op_type not in _OPS:
                raise ModelGraphError(
                    f"unsupported operator {node.op_type!r} (node {node.name!r})")
            for name in node.inputs:
                if name and name not in known:
                    raise ModelGraphError(
                        f"node {node.name!r} reads {name!r} before it is produced")
            known.update(node.outputs)
        for out in graph.outputs:
            if out.name not in known:
                raise ModelGraphError(f"graph output {out.name!r} never produced")
        if not graph.outputs:
            raise ModelGraphError("graph declares no outputs")

    @property
    def input_names(self) -> list[str]:
        return [v.name for v in self.input_defs]

    @property
    def output_names(self) -> list[str]:
        return [v.name for v in self.graph.outputs]

    def final_op_type(self) -> str:
        """Operator that produces the first graph output, for activation sniffing."""
        target = self.graph.outputs[0].name
        for node in reversed(self.graph.nodes):
            if target in node.outputs:
                return node.op_type
        return ""

    def run(self, feeds: dict[str, np.ndarray]) -> list[np.ndarray]:
        missing = [n for n in self.input_names if n not in feeds]
        if missing:
            raise BackendExecutionError(f"missing graph inputs: {missing}")
        values: dict[str, np.ndarray] = dict(self.graph.initializers)
        for name, array in feeds.items():
            values[name] = np.asarray(array)
        limit = (_POOLS.limit(limits=self.intra_op_threads)
                 if _POOLS is not None and self.intra_op_threads else nullcontext())
        with limit:
            for node in self.graph.nodes:
                inputs = [values[n] if n else None for n in node.inputs]
                try:
                    result = _OPS[node.op_type](node, inputs, values)
                except (ValueError, TypeError, FloatingPointError, KeyError) as exc:
                    raise BackendExecutionError(
                        f"{node.op_type} node {node.name!r} failed: {exc}")
                values[node.outputs[0]] = result
        return [values[name] for name in self.output_names]
