"""
APM wire format (big-endian).

Header (52 bytes):
    magic "AP" | version u8 | flags u8 | center_x f64 | center_y f64 |
    heading f64 | k f64 | m u16 | n u16 | source_id u32 | timestamp f64
Cells: m*n u32 perception indices, row-major (i over m, j over n).
Layer (flags bit 0): m*n records of height u16 [cm], vx i16 [cm/s], vy i16 [cm/s].
"""

import math
import struct

import numpy as np

from ..exceptions import ApmDecodeError, DomainError
from ..geometry import Point2
from .layer import LayerPayload, MobilityHeightLayer
from .matrix import Apm

MAGIC = b"AP"
VERSION = 1
FLAG_LAYER = 0x01

HEADER = struct.Struct(">2sBBddddHHId")
HEADER_SIZE = HEADER.size
CELL_DTYPE = np.dtype(">u4")
LAYER_DTYPE = np.dtype([("height", ">u2"), ("vx", ">i2"), ("vy", ">i2")])

# byte offsets of header fields, reported on decode errors
_OFFSET_VERSION = 2
_OFFSET_FLAGS = 3
_OFFSET_HEADING = 20
_OFFSET_K = 28
_OFFSET_M = 36


def cell_payload_size(m: int, n: int) -> int:
    return m * n * CELL_DTYPE.itemsize


def _quantize(values: np.ndarray, scale: float, low: int, high: int) -> np.ndarray:
    return np.clip(np.rint(values * scale), low, high)


def serialize_apm(apm: Apm, layer: MobilityHeightLayer | LayerPayload | None = None) -> bytes:
    """
    Encode an APM and, optionally, its mobility-height layer.

    Raises:
        DomainError: If m or n exceeds 65535 or source_id is not an unsigned 32-bit value
    """
    if apm.m > 0xFFFF or apm.n > 0xFFFF:
        raise DomainError(f"Grid {apm.m}x{apm.n} exceeds the 16-bit dimension fields", m=apm.m, n=apm.n)
    if not 0 <= apm.source_id <= 0xFFFFFFFF:
        raise DomainError(f"source_id {apm.source_id} does not fit in 32 bits", source_id=apm.source_id)
    flags = FLAG_LAYER if layer is not None else 0
    header = HEADER.pack(
        MAGIC, VERSION, flags,
        apm.center.x, apm.center.y, apm.heading, apm.k,
        apm.m, apm.n, apm.source_id, apm.timestamp,
    )
    parts = [header, apm.cells.astype(CELL_DTYPE).tobytes()]

    if layer is not None:
        payload = layer.payload() if isinstance(layer, MobilityHeightLayer) else layer
        if payload.max_height.shape != (apm.m, apm.n) or payload.mean_velocity.shape != (apm.m, apm.n, 2):
            raise ValueError("Layer shape does not match the APM grid")
        records = np.zeros(apm.m * apm.n, dtype=LAYER_DTYPE)
        records["height"] = _quantize(payload.max_height.ravel(), 100.0, 0, 0xFFFF)
        records["vx"] = _quantize(payload.mean_velocity[..., 0].ravel(), 100.0, -0x8000, 0x7FFF)
        records["vy"] = _quantize(payload.mean_velocity[..., 1].ravel(), 100.0, -0x8000, 0x7FFF)
        parts.append(records.tobytes())

    return b"".join(parts)


def _decode(buffer: bytes) -> tuple[Apm, LayerPayload | None]:
    if len(buffer) < HEADER_SIZE:
        raise ApmDecodeError(f"Truncated header: {len(buffer)} of {HEADER_SIZE} bytes", offset=len(buffer))

    magic, version, flags, cx, cy, heading, k, m, n, source_id, timestamp = HEADER.unpack_from(buffer, 0)
    if magic != MAGIC:
        raise ApmDecodeError(f"Bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise ApmDecodeError(f"Unsupported version {version}", offset=_OFFSET_VERSION)
    if flags & ~FLAG_LAYER:
        raise ApmDecodeError(f"Unknown flags 0x{flags:02x}", offset=_OFFSET_FLAGS)
    if not all(math.isfinite(v) for v in (cx, cy, heading)):
        raise ApmDecodeError("Non-finite center or heading", offset=_OFFSET_HEADING)
    if not (math.isfinite(k) and k > 0):
        raise ApmDecodeError(f"Invalid resolution k={k}", offset=_OFFSET_K)
    if m == 0 or n == 0:
        raise ApmDecodeError(f"Empty grid {m}x{n}", offset=_OFFSET_M)

    offset = HEADER_SIZE
    cell_bytes = cell_payload_size(m, n)
    if len(buffer) < offset + cell_bytes:
        raise ApmDecodeError(f"Truncated cell payload: expected {cell_bytes} bytes", offset=len(buffer))
    cells = np.frombuffer(buffer, dtype=CELL_DTYPE, count=m * n, offset=offset).astype(np.uint32).reshape(m, n)
    offset += cell_bytes

    payload = None
    if flags & FLAG_LAYER:
        layer_bytes = m * n * LAYER_DTYPE.itemsize
        if len(buffer) < offset + layer_bytes:
            raise ApmDecodeError(f"Truncated layer payload: expected {layer_bytes} bytes", offset=len(buffer))
        records = np.frombuffer(buffer, dtype=LAYER_DTYPE, count=m * n, offset=offset)
        offset += layer_bytes
        velocity = np.stack((records["vx"], records["vy"]), axis=-1).astype(np.float64) / 100.0
        payload = LayerPayload(
            max_height=records["height"].astype(np.float64).reshape(m, n) / 100.0,
            mean_velocity=velocity.reshape(m, n, 2),
        )

    if len(buffer) != offset:
        raise ApmDecodeError(f"{len(buffer) - offset} trailing byte(s)", offset=offset)

    apm = Apm(Point2(cx, cy), heading, k, cells, source_id=source_id, timestamp=timestamp)
    return apm, payload


def deserialize_apm(buffer: bytes) -> Apm:
    """Decode an APM buffer (any attached layer is validated and dropped)."""
    apm, _ = _decode(buffer)
    return apm


def deserialize_mobility_layer(buffer: bytes) -> LayerPayload | None:
    """Decode the mobility-height layer of an APM buffer, or None if absent."""
    _, payload = _decode(buffer)
    return payload
