"""ONNX model serializer.

Emits the protobuf wire format directly from the published ONNX field
numbers.  Only what the fixture graphs need: float32/int64 initializers,
nodes with int/float/ints/tensor attributes, tensor-type value infos, one
default-domain opset entry.
"""

from __future__ import annotations

import struct

import numpy as np

OPSET = 13
IR_VERSION = 8

_DTYPE_CODES = {
    np.dtype("float32"): 1,
    np.dtype("int32"): 6,
    np.dtype("int64"): 7,
}


def _varint(value: int) -> bytes:
    if value < 0:
        value += 1 << 64
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _key(field_number: int, wire_type: int) -> bytes:
    return _varint((field_number << 3) | wire_type)


def _scalar(field_number: int, value: int) -> bytes:
    return _key(field_number, 0) + _varint(value)


def _blob(field_number: int, payload: bytes | str) -> bytes:
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    return _key(field_number, 2) + _varint(len(payload)) + payload


def _packed_ints(field_number: int, values) -> bytes:
    return _blob(field_number, b"".join(_varint(int(v)) for v in values))


def _float32(field_number: int, value: float) -> bytes:
    return _key(field_number, 5) + struct.pack("<f", value)


def tensor_proto(array: np.ndarray, name: str = "") -> bytes:
    array = np.ascontiguousarray(array)
    code = _DTYPE_CODES[array.dtype]
    parts = [_packed_ints(1, array.shape), _scalar(2, code)]
    if name:
        parts.append(_blob(8, name))
    little = array.astype(array.dtype.newbyteorder("<"), copy=False)
    parts.append(_blob(9, little.tobytes()))
    return b"".join(parts)


def _attribute(name: str, value) -> bytes:
    parts = [_blob(1, name)]
    if isinstance(value, bool):
        parts += [_scalar(3, int(value)), _scalar(20, 2)]
    elif isinstance(value, int):
        parts += [_scalar(3, value), _scalar(20, 2)]
    elif isinstance(value, float):
        parts += [_float32(2, value), _scalar(20, 1)]
    elif isinstance(value, str):
        parts += [_blob(4, value), _scalar(20, 3)]
    elif isinstance(value, np.ndarray):
        parts += [_blob(5, tensor_proto(value)), _scalar(20, 4)]
    elif isinstance(value, (tuple, list)):
        parts += [_packed_ints(8, value), _scalar(20, 7)]
    else:
        raise TypeError(f"unsupported attribute value {value!r}")
    return b"".join(parts)


def node_proto(op_type: str, inputs, outputs, name: str = "",
               attrs: dict | None = None) -> bytes:
    parts = [_blob(1, i) for i in inputs]
    parts += [_blob(2, o) for o in outputs]
    if name:
        parts.append(_blob(3, name))
    parts.append(_blob(4, op_type))
    for key, value in (attrs or {}).items():
        parts.append(_blob(5, _attribute(key, value)))
    return b"".join(parts)


def value_info_proto(name: str, shape, elem_type: int = 1) -> bytes:
    dims = []
    for d in shape:
        if isinstance(d, str):
            dims.append(_blob(1, _blob(2, d)))
        else:
            dims.append(_blob(1, _scalar(1, int(d))))
    tensor_type = _scalar(1, elem_type) + _blob(2, b"".join(dims))
    return _blob(1, name) + _blob(2, _blob(1, tensor_type))


class GraphBuilder:
    """Accumulates nodes, initializers and IO, then serializes a ModelProto."""

    def __init__(self, name: str):
        self.name = name
        self._nodes: list[bytes] = []
        self._initializers: list[bytes] = []
        self._inputs: list[bytes] = []
        self._outputs: list[bytes] = []

    def initializer(self, name: str, array: np.ndarray) -> str:
        self._initializers.append(tensor_proto(array, name))
        return name

    def node(self, op_type: str, inputs, outputs, **attrs) -> str:
        self._nodes.append(node_proto(op_type, inputs, outputs,
                                      name=f"{op_type}_{outputs[0]}",
                                      attrs=attrs or None))
        return outputs[0]

    def input(self, name: str, shape) -> str:
        self._inputs.append(value_info_proto(name, shape))
        return name

    def output(self, name: str, shape) -> str:
        self._outputs.append(value_info_proto(name, shape))
        return name

    def to_model_bytes(self, producer: str = "fixture-tools") -> bytes:
        graph = b"".join(
            [_blob(1, n) for n in self._nodes]
            + [_blob(2, self.name.encode("utf-8"))]
            + [_blob(5, t) for t in self._initializers]
            + [_blob(11, v) for v in self._inputs]
            + [_blob(12, v) for v in self._outputs])
        opset_entry = _blob(1, "") + _scalar(2, OPSET)
        return (_scalar(1, IR_VERSION) + _blob(2, producer)
                + _blob(7, graph) + _blob(8, opset_entry))
