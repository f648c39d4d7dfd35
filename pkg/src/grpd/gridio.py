"""On-disk formats: GRPD binary grids, cone-set JSON, slope-table CSV.

Binary grid layout (little-endian): magic ``GRPD``, u32 rank, u32 dims
(one per axis), zero padding to a 16-byte boundary, then float64
re/im pairs in row-major order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .cones import ConeSet
from .errors import SerializationError

MAGIC = b"GRPD"


def _header(shape: tuple[int, ...]) -> bytes:
    head = MAGIC + struct.pack("<I", len(shape))
    head += struct.pack(f"<{len(shape)}I", *shape)
    pad = (-len(head)) % 16
    return head + b"\x00" * pad


def grid_to_bytes(values: np.ndarray) -> bytes:
    values = np.ascontiguousarray(values, dtype=complex)
    payload = np.empty(values.shape + (2,), dtype="<f8")
    payload[..., 0] = values.real
    payload[..., 1] = values.imag
    return _header(values.shape) + payload.tobytes()


def grid_from_bytes(blob: bytes) -> np.ndarray:
    if blob[:4] != MAGIC:
        raise SerializationError("bad magic (expected GRPD)")
    (rank,) = struct.unpack_from("<I", blob, 4)
    dims = struct.unpack_from(f"<{rank}I", blob, 8)
    head_len = 8 + 4 * rank
    head_len += (-head_len) % 16
    count = int(np.prod(dims)) * 2
    if len(blob) < head_len + 8 * count:
        raise SerializationError("truncated grid payload")
    flat = np.frombuffer(blob, dtype="<f8", count=count, offset=head_len)
    pairs = flat.reshape(dims + (2,))
    return (pairs[..., 0] + 1j * pairs[..., 1]).astype(complex)


def save_grid(path, values: np.ndarray) -> None:
    Path(path).write_bytes(grid_to_bytes(values))


def load_grid(path) -> np.ndarray:
    return grid_from_bytes(Path(path).read_bytes())


# -- deterministic JSON/CSV helpers -----------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def dump_json(path, data) -> None:
    text = json.dumps(_jsonable(data), sort_keys=True, indent=1)
    Path(path).write_text(text + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def save_cone_set(path, cones: ConeSet) -> None:
    dump_json(path, cones.to_json())


def load_cone_set(path) -> ConeSet:
    return ConeSet.from_json(load_json(path))


def save_slope_csv(path, records) -> None:
    """Slope table sidecar: one row per (center, direction)."""
    lines = ["center;direction;slope;peak"]
    for r in records:
        c = ",".join(format(v, ".17g") for v in r.center)
        d = ",".join(format(v, ".17g") for v in r.direction)
        lines.append(f"{c};{d};{format(r.slope, '.17g')};{format(r.peak, '.17g')}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_slope_csv(path) -> list[dict]:
    rows = Path(path).read_text().strip().split("\n")
    out = []
    for line in rows[1:]:
        c, d, s, p = line.split(";")
        out.append({"center": tuple(float(v) for v in c.split(",")),
                    "direction": tuple(float(v) for v in d.split(",")),
                    "slope": float(s), "peak": float(p)})
    return out
