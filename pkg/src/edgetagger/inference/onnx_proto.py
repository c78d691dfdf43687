"""Minimal reader for the ONNX interchange format.

Parses just the protobuf wire subset that our model graphs use: model and
graph metadata, nodes with scalar/tensor attributes, float32/int32/int64
initializers, and tensor-type value infos.  Unknown fields are skipped, as
protobuf semantics require; malformed bytes raise ModelGraphError.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ModelGraphError

__all__ = [
    "AttributeDef",
    "NodeDef",
    "ValueDef",
    "GraphDef",
    "OnnxModel",
    "load_onnx",
]

_WIRE_VARINT = 0
_WIRE_64BIT = 1
_WIRE_LEN = 2
_WIRE_32BIT = 5

# TensorProto.DataType values we accept for initializers and constants.
_DTYPE_FLOAT = 1
_DTYPE_INT32 = 6
_DTYPE_INT64 = 7
_NUMPY_DTYPES = {
    _DTYPE_FLOAT: np.dtype("<f4"),
    _DTYPE_INT32: np.dtype("<i4"),
    _DTYPE_INT64: np.dtype("<i8"),
}


class _Reader:
    """Cursor over one length-delimited message body."""

    def __init__(self, data: bytes, start: int = 0, end: int | None = None):
        self.data = data
        self.pos = start
        self.end = len(data) if end is None else end

    def done(self) -> bool:
        return self.pos >= self.end

    def varint(self) -> int:
        result = 0
        shift = 0
        while True:
            if self.pos >= self.end:
                raise ModelGraphError("truncated varint")
            byte = self.data[self.pos]
            self.pos += 1
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return result
            shift += 7
            if shift > 70:
                raise ModelGraphError("varint too long")

    def signed_varint(self) -> int:
        value = self.varint()
        return value - (1 << 64) if value >= (1 << 63) else value

    def tag(self) -> tuple[int, int]:
        key = self.varint()
        return key >> 3, key & 0x7

    def bytes_field(self) -> bytes:
        length = self.varint()
        if self.pos + length > self.end:
            raise ModelGraphError("truncated length-delimited field")
        out = self.data[self.pos:self.pos + length]
        self.pos += length
        return out

    def submessage(self) -> "_Reader":
        length = self.varint()
        if self.pos + length > self.end:
            raise ModelGraphError("truncated submessage")
        sub = _Reader(self.data, self.pos, self.pos + length)
        self.pos += length
        return sub

    def fixed32(self) -> float:
        if self.pos + 4 > self.end:
            raise ModelGraphError("truncated 32-bit field")
        (value,) = struct.unpack_from("<f", self.data, self.pos)
        self.pos += 4
        return value

    def skip(self, wire_type: int) -> None:
        if wire_type == _WIRE_VARINT:
            self.varint()
        elif wire_type == _WIRE_64BIT:
            self.pos += 8
        elif wire_type == _WIRE_LEN:
            self.bytes_field()
        elif wire_type == _WIRE_32BIT:
            self.pos += 4
        else:
            raise ModelGraphError(f"unsupported wire type {wire_type}")
        if self.pos > self.end:
            raise ModelGraphError("field overruns message")


def _repeated_int(reader: _Reader, wire_type: int, out: list[int]) -> None:
    # Repeated int64 arrives packed (one length-delimited blob) or one-per-tag.
    if wire_type == _WIRE_LEN:
        sub = _Reader(reader.bytes_field())
        while not sub.done():
            out.append(sub.signed_varint())
    else:
        out.append(reader.signed_varint())


def _repeated_float(reader: _Reader, wire_type: int, out: list[float]) -> None:
    if wire_type == _WIRE_LEN:
        blob = reader.bytes_field()
        if len(blob) % 4:
            raise ModelGraphError("packed float blob not a multiple of 4 bytes")
        out.extend(struct.unpack(f"<{len(blob) // 4}f", blob))
    else:
        out.append(reader.fixed32())


@dataclass(frozen=True)
class AttributeDef:
    name: str
    value: object


@dataclass(frozen=True)
class NodeDef:
    op_type: str
    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    attrs: dict


@dataclass(frozen=True)
class ValueDef:
    name: str
    elem_type: int
    # each dim is an int, or None when symbolic/unknown
    shape: tuple


@dataclass
class GraphDef:
    name: str = ""
    nodes: list = field(default_factory=list)
    initializers: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)


@dataclass
class OnnxModel:
    ir_version: int
    producer: str
    opset: int
    graph: GraphDef


def _parse_tensor(reader: _Reader) -> tuple[str, np.ndarray]:
    dims: list[int] = []
    data_type = 0
    float_data: list[float] = []
    int64_data: list[int] = []
    name = ""
    raw: bytes | None = None
    while not reader.done():
        fnum, wtype = reader.tag()
        if fnum == 1:
            _repeated_int(reader, wtype, dims)
        elif fnum == 2:
            data_type = reader.varint()
        elif fnum == 4:
            _repeated_float(reader, wtype, float_data)
        elif fnum == 7:
            _repeated_int(reader, wtype, int64_data)
        elif fnum == 8:
            name = reader.bytes_field().decode("utf-8")
        elif fnum == 9:
            raw = reader.bytes_field()
        else:
            reader.skip(wtype)
    if data_type not in _NUMPY_DTYPES:
        raise ModelGraphError(f"tensor {name!r}: unsupported data type {data_type}")
    dtype = _NUMPY_DTYPES[data_type]
    if raw is not None:
        array = np.frombuffer(raw, dtype=dtype)
    elif data_type == _DTYPE_FLOAT:
        array = np.array(float_data, dtype=dtype)
    else:
        array = np.array(int64_data, dtype=dtype)
    count = int(np.prod(dims)) if dims else array.size
    if array.size != count:
        raise ModelGraphError(
            f"tensor {name!r}: payload has {array.size} elements, dims say {count}")
    if dims:
        array = array.reshape(dims)
    return name, array.astype(dtype.newbyteorder("="), copy=False)


def _parse_attribute(reader: _Reader) -> AttributeDef:
    name = ""
    value: object = None
    while not reader.done():
        fnum, wtype = reader.tag()
        if fnum == 1:
            name = reader.bytes_field().decode("utf-8")
        elif fnum == 2:
            value = reader.fixed32()
        elif fnum == 3:
            value = reader.signed_varint()
        elif fnum == 4:
            value = reader.bytes_field().decode("utf-8")
        elif fnum == 5:
            value = _parse_tensor(reader.submessage())[1]
        elif fnum == 7:
            floats: list[float] = [] if not isinstance(value, list) else value
            _repeated_float(reader, wtype, floats)
            value = floats
        elif fnum == 8:
            ints: list[int] = [] if not isinstance(value, list) else value
            _repeated_int(reader, wtype, ints)
            value = ints
        elif fnum == 20:
            reader.varint()  # declared AttributeType; the set field tells us
        else:
            reader.skip(wtype)
    if isinstance(value, list):
        value = tuple(value)
    return AttributeDef(name=name, value=value)


def _parse_node(reader: _Reader) -> NodeDef:
    inputs: list[str] = []
    outputs: list[str] = []
    name = ""
    op_type = ""
    attrs: dict = {}
    while not reader.done():
        fnum, wtype = reader.tag()
        if fnum == 1:
            inputs.append(reader.bytes_field().decode("utf-8"))
        elif fnum == 2:
            outputs.append(reader.bytes_field().decode("utf-8"))
        elif fnum == 3:
            name = reader.bytes_field().decode("utf-8")
        elif fnum == 4:
            op_type = reader.bytes_field().decode("utf-8")
        elif fnum == 5:
            attr = _parse_attribute(reader.submessage())
            attrs[attr.name] = attr.value
        else:
            reader.skip(wtype)
    if not op_type:
        raise ModelGraphError(f"node {name!r} has no op_type")
    return NodeDef(op_type=op_type, name=name, inputs=tuple(inputs),
                   outputs=tuple(outputs), attrs=attrs)


def _parse_value_info(reader: _Reader) -> ValueDef:
    name = ""
    elem_type = 0
    shape: list = []
    while not reader.done():
        fnum, wtype = reader.tag()
        if fnum == 1:
            name = reader.bytes_field().decode("utf-8")
        elif fnum == 2:  # TypeProto
            type_reader = reader.submessage()
            while not type_reader.done():
                tnum, twtype = type_reader.tag()
                if tnum == 1:  # tensor_type
                    tensor_reader = type_reader.submessage()
                    while not tensor_reader.done():
                        ttnum, ttw = tensor_reader.tag()
                        if ttnum == 1:
                            elem_type = tensor_reader.varint()
                        elif ttnum == 2:  # TensorShapeProto
                            shape_reader = tensor_reader.submessage()
                            while not shape_reader.done():
                                snum, sw = shape_reader.tag()
                                if snum == 1:
                                    dim_reader = shape_reader.submessage()
                                    dim: object = None
                                    while not dim_reader.done():
                                        dnum, dw = dim_reader.tag()
                                        if dnum == 1:
                                            dim = dim_reader.signed_varint()
                                        else:
                                            dim_reader.skip(dw)
                                    shape.append(dim)
                                else:
                                    shape_reader.skip(sw)
                        else:
                            tensor_reader.skip(ttw)
                else:
                    type_reader.skip(twtype)
        else:
            reader.skip(wtype)
    return ValueDef(name=name, elem_type=elem_type, shape=tuple(shape))


def _parse_graph(reader: _Reader) -> GraphDef:
    graph = GraphDef()
    while not reader.done():
        fnum, wtype = reader.tag()
        if fnum == 1:
            graph.nodes.append(_parse_node(reader.submessage()))
        elif fnum == 2:
            graph.name = reader.bytes_field().decode("utf-8")
        elif fnum == 5:
            name, array = _parse_tensor(reader.submessage())
            if not name:
                raise ModelGraphError("initializer without a name")
            graph.initializers[name] = array
        elif fnum == 11:
            graph.inputs.append(_parse_value_info(reader.submessage()))
        elif fnum == 12:
            graph.outputs.append(_parse_value_info(reader.submessage()))
        elif fnum == 13:
            reader.skip(wtype)  # value_info entries are advisory
        else:
            reader.skip(wtype)
    return graph


def load_onnx(source: Path | bytes) -> OnnxModel:
    """Parse an ONNX model from a file path or raw bytes."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_file():
            raise ModelGraphError(f"model file not found: {path}")
        data = path.read_bytes()
    else:
        data = bytes(source)

    ir_version = 0
    producer = ""
    opset = 0
    graph: GraphDef | None = None
    reader = _Reader(data)
    try:
        while not reader.done():
            fnum, wtype = reader.tag()
            if fnum == 1:
                ir_version = reader.varint()
            elif fnum == 2:
                producer = reader.bytes_field().decode("utf-8")
            elif fnum == 7:
                graph = _parse_graph(reader.submessage())
            elif fnum == 8:
                opset_reader = reader.submessage()
                version = 0
                domain = ""
                while not opset_reader.done():
                    onum, ow = opset_reader.tag()
                    if onum == 1:
                        domain = opset_reader.bytes_field().decode("utf-8")
                    elif onum == 2:
                        version = opset_reader.varint()
                    else:
                        opset_reader.skip(ow)
                if domain == "":
                    opset = version
            else:
                reader.skip(wtype)
    except (struct.error, IndexError, UnicodeDecodeError) as exc:
        raise ModelGraphError(f"malformed model bytes: {exc}")
    if graph is None:
        raise ModelGraphError("model has no graph")
    if opset and opset < 13:
        raise ModelGraphError(f"opset {opset} is below the supported minimum 13")
    return OnnxModel(ir_version=ir_version, producer=producer, opset=opset,
                     graph=graph)
