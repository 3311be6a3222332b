"""Reader for the IDX image container (big-endian, magic 0x00000803)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = ["IdxFormatError", "load_idx_images", "IMAGE_MAGIC"]

IMAGE_MAGIC = 0x00000803  # unsigned byte, 3 dimensions
_HEADER_BYTES = 16  # magic + count + rows + cols, 4 bytes each


class IdxFormatError(ValueError):
    """Malformed IDX file; message names the offending byte offset."""


def load_idx_images(path: str | Path) -> list[np.ndarray]:
    """Load an IDX image file as flattened float vectors (one per image).

    Pixel bytes are returned as raw floats in [0, 255]; value scaling is a
    separate, explicit preprocessing step.
    """
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise IdxFormatError(f"{path}: file shorter than magic (4 bytes) at byte 0")
    magic = int.from_bytes(data[0:4], "big")
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(
            f"{path}: bad magic 0x{magic:08x} at byte 0 (expected 0x{IMAGE_MAGIC:08x})"
        )
    if len(data) < _HEADER_BYTES:
        raise IdxFormatError(f"{path}: truncated header at byte {len(data)}")
    count = int.from_bytes(data[4:8], "big")
    rows = int.from_bytes(data[8:12], "big")
    cols = int.from_bytes(data[12:16], "big")
    if rows == 0 or cols == 0:
        raise IdxFormatError(f"{path}: zero image shape {rows}x{cols} at byte 8")
    expected = _HEADER_BYTES + count * rows * cols
    if len(data) < expected:
        raise IdxFormatError(
            f"{path}: truncated pixel data at byte {len(data)} (expected {expected})"
        )
    pixels = np.frombuffer(data, dtype=np.uint8, count=count * rows * cols, offset=_HEADER_BYTES)
    matrix = pixels.reshape(count, rows * cols).astype(np.float64)
    return [matrix[i] for i in range(count)]
