#!/usr/bin/env python3
"""Generate fixtures/tiny_depth.onnx: a minimal monocular-depth-shaped model.

A single 3x3 Conv from RGB to one channel with dynamic spatial dims,
hand-encoded as protobuf wire format so no onnx tooling is needed. The
weights are a fixed deterministic stencil; the model has no predictive
value, it exists so the shim's test suite can exercise real ONNX inference
offline.
"""

import struct
import sys
from pathlib import Path


def varint(n: int) -> bytes:
    out = b""
    while True:
        b7 = n & 0x7F
        n >>= 7
        if n:
            out += bytes([b7 | 0x80])
        else:
            return out + bytes([b7])


def tag(field: int, wire: int) -> bytes:
    return varint((field << 3) | wire)


def ld(field: int, payload: bytes) -> bytes:
    return tag(field, 2) + varint(len(payload)) + payload


def vi(field: int, value: int) -> bytes:
    return tag(field, 0) + varint(value)


def s(field: int, text: str) -> bytes:
    return ld(field, text.encode())


def tensor_f32(name: str, dims, values) -> bytes:
    body = b"".join(vi(1, d) for d in dims)
    body += vi(2, 1)  # data_type = FLOAT
    body += s(8, name)
    body += ld(9, struct.pack(f"<{len(values)}f", *values))  # raw_data
    return body


def attr_ints(name: str, ints) -> bytes:
    return s(1, name) + vi(20, 7) + b"".join(vi(8, i) for i in ints)  # type INTS


def dim_value(v: int) -> bytes:
    return vi(1, v)


def dim_param(p: str) -> bytes:
    return s(2, p)


def value_info(name: str, dims) -> bytes:
    shape = b"".join(ld(1, d) for d in dims)
    tensor_type = vi(1, 1) + ld(2, shape)  # elem_type FLOAT, shape
    return s(1, name) + ld(2, ld(1, tensor_type))


def build_model() -> bytes:
    node = s(1, "image") + s(1, "weight") + s(1, "bias") + s(2, "depth")
    node += s(3, "conv0") + s(4, "Conv")
    node += ld(5, attr_ints("kernel_shape", [3, 3]))
    node += ld(5, attr_ints("pads", [1, 1, 1, 1]))
    node += ld(5, attr_ints("strides", [1, 1]))

    weights = [((i * 7 + 3) % 11 - 5) / 10.0 for i in range(27)]
    graph = ld(1, node)
    graph += s(2, "tiny_depth")
    graph += ld(5, tensor_f32("weight", [1, 3, 3, 3], weights))
    graph += ld(5, tensor_f32("bias", [1], [0.25]))
    graph += ld(11, value_info("image", [dim_value(1), dim_value(3), dim_param("h"), dim_param("w")]))
    graph += ld(12, value_info("depth", [dim_value(1), dim_value(1), dim_param("h"), dim_param("w")]))

    model = vi(1, 8)  # ir_version
    model += ld(8, vi(2, 17))  # opset_import { version: 17 }
    model += ld(7, graph)
    return model


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent.parent / "fixtures" / "tiny_depth.onnx"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(build_model())
    print(f"wrote {out} ({out.stat().st_size} bytes)")
