import numpy as np
import pytest

from sedgen.sparse_data import IdxFormatError, load_idx_images


def _idx_bytes(magic: int, count: int, rows: int, cols: int, pixels: bytes) -> bytes:
    header = (
        magic.to_bytes(4, "big")
        + count.to_bytes(4, "big")
        + rows.to_bytes(4, "big")
        + cols.to_bytes(4, "big")
    )
    return header + pixels


def test_two_images_2x2(tmp_path):
    raw = _idx_bytes(0x00000803, 2, 2, 2, bytes([0, 255, 0, 0, 255, 255, 0, 0]))
    path = tmp_path / "imgs.idx"
    path.write_bytes(raw)
    images = load_idx_images(path)
    assert len(images) == 2
    assert images[0].tolist() == [0.0, 255.0, 0.0, 0.0]
    assert images[1].tolist() == [255.0, 255.0, 0.0, 0.0]
    assert all(img.dtype == np.float64 for img in images)


def test_label_magic_rejected(tmp_path):
    raw = _idx_bytes(0x00000801, 2, 1, 1, bytes([1, 2]))
    path = tmp_path / "labels.idx"
    path.write_bytes(raw)
    with pytest.raises(IdxFormatError, match="magic"):
        load_idx_images(path)


def test_truncated_pixels(tmp_path):
    raw = _idx_bytes(0x00000803, 2, 2, 2, bytes([0, 255, 0]))
    path = tmp_path / "short.idx"
    path.write_bytes(raw)
    with pytest.raises(IdxFormatError, match="truncated"):
        load_idx_images(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "tiny.idx"
    path.write_bytes((0x00000803).to_bytes(4, "big") + b"\x00\x00")
    with pytest.raises(IdxFormatError, match="truncated"):
        load_idx_images(path)


def test_too_short_for_magic(tmp_path):
    path = tmp_path / "stub.idx"
    path.write_bytes(b"\x00\x00")
    with pytest.raises(IdxFormatError):
        load_idx_images(path)


def test_zero_shape_rejected(tmp_path):
    raw = _idx_bytes(0x00000803, 1, 0, 4, b"")
    path = tmp_path / "zero.idx"
    path.write_bytes(raw)
    with pytest.raises(IdxFormatError, match="shape"):
        load_idx_images(path)


def test_error_message_names_byte_offset(tmp_path):
    raw = _idx_bytes(0x00000801, 1, 1, 1, bytes([9]))
    path = tmp_path / "off.idx"
    path.write_bytes(raw)
    with pytest.raises(IdxFormatError, match="byte 0"):
        load_idx_images(path)
