"""CVS1 binary store writer.

Layout (little-endian): magic "CVS1", u32 version=1, u32 dim,
u32 layer_count, u8 mode (0=UNMASKED, 1=MASKED), u64 record_count; then
per record a u64 mention_id followed by layer_count*dim float32 values.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CVS1"
VERSION = 1
HEADER = struct.Struct("<4sIIIBQ")
RECORD_ID = struct.Struct("<Q")

MODE_UNMASKED = 0
MODE_MASKED = 1


def write_store(records: dict[int, np.ndarray], mode: int, path: str | Path) -> int:
    """Write mention_id -> (layer_count, dim) arrays; returns record count."""
    if not records:
        raise ValueError("refusing to write an empty store")
    shapes = {rec.shape for rec in records.values()}
    if len(shapes) != 1:
        raise ValueError(f"records disagree on shape: {sorted(shapes)}")
    layer_count, dim = next(iter(shapes))
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, dim, layer_count, mode, len(records)))
        for mention_id in sorted(records):
            fh.write(RECORD_ID.pack(mention_id))
            fh.write(np.ascontiguousarray(records[mention_id], dtype="<f4").tobytes())
    return len(records)
