import json

import numpy as np
import pytest
import torch
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from torch import nn

from sedgen.checkpoints import (
    MODEL_KINDS,
    Checkpoint,
    CheckpointError,
    ema_arrays,
    ema_from_arrays,
    file_sha256,
    load_checkpoint,
    module_arrays,
    restore_module,
    save_checkpoint,
)
from sedgen.diffusion import EmaState

_MAGIC = b"SEDCKPT1"


def _ckpt():
    return Checkpoint(
        kind="savae",
        config={"ambient_dim": 8, "latent_dim": 2},
        step=17,
        arrays={
            "model.weight": np.arange(6, dtype=np.float32).reshape(2, 3),
            "model.bias": np.array([1.5, -2.5], dtype=np.float64),
            "model.step": np.array(3, dtype=np.int64),  # 0-d array
        },
        extra={"note": "fixture"},
    )


class TestRoundTrip:
    def test_save_load_save_byte_identical(self, tmp_path):
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        save_checkpoint(_ckpt(), p1)
        loaded = load_checkpoint(p1)
        save_checkpoint(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_fields_preserved(self, tmp_path):
        path = tmp_path / "a.ckpt"
        save_checkpoint(_ckpt(), path)
        loaded = load_checkpoint(path)
        assert loaded.kind == "savae"
        assert loaded.config == {"ambient_dim": 8, "latent_dim": 2}
        assert loaded.step == 17
        assert loaded.extra == {"note": "fixture"}
        orig = _ckpt()
        assert set(loaded.arrays) == set(orig.arrays)
        for name, arr in orig.arrays.items():
            got = loaded.arrays[name]
            assert got.dtype == arr.dtype
            assert got.shape == arr.shape
            assert np.array_equal(got, arr)

    def test_zero_dim_array_roundtrip(self, tmp_path):
        path = tmp_path / "a.ckpt"
        save_checkpoint(_ckpt(), path)
        step = load_checkpoint(path).arrays["model.step"]
        assert step.shape == ()
        assert step.item() == 3

    def test_loaded_arrays_are_writable_copies(self, tmp_path):
        path = tmp_path / "a.ckpt"
        save_checkpoint(_ckpt(), path)
        arr = load_checkpoint(path).arrays["model.weight"]
        arr[0, 0] = 99.0  # must not raise: frombuffer views are copied

    def test_big_endian_input_normalized(self, tmp_path):
        big = np.array([1.0, 2.0], dtype=">f8")
        ckpt = Checkpoint(kind="savae", config={}, step=0, arrays={"x": big})
        path = tmp_path / "a.ckpt"
        save_checkpoint(ckpt, path)
        got = load_checkpoint(path).arrays["x"]
        assert got.dtype.byteorder in ("<", "=")
        assert np.array_equal(got, np.array([1.0, 2.0]))

    def test_file_hash_stable_across_saves(self, tmp_path):
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        save_checkpoint(_ckpt(), p1)
        save_checkpoint(_ckpt(), p2)
        assert file_sha256(p1) == file_sha256(p2)

    @settings(
        max_examples=20,
        deadline=None,
        suppress_health_check=[HealthCheck.function_scoped_fixture],
    )
    @given(
        data=st.lists(
            st.floats(allow_nan=False, allow_infinity=False, width=32),
            min_size=1,
            max_size=8,
        ),
        step=st.integers(min_value=0, max_value=10**9),
    )
    def test_roundtrip_property(self, tmp_path, data, step):
        arr = np.asarray(data, dtype=np.float32)
        ckpt = Checkpoint(kind="sed-diffusion", config={"n": len(data)}, step=step,
                          arrays={"w": arr})
        path = tmp_path / f"h-{step}-{len(data)}.ckpt"
        save_checkpoint(ckpt, path)
        loaded = load_checkpoint(path)
        assert loaded.step == step
        assert loaded.arrays["w"].tobytes() == arr.tobytes()


class TestCorruption:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "a.ckpt"
        save_checkpoint(_ckpt(), path)
        raw = bytearray(path.read_bytes())
        raw[:8] = b"NOTACKPT"
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_too_short_file(self, tmp_path):
        path = tmp_path / "a.ckpt"
        path.write_bytes(b"SED")
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_corrupt_header_json(self, tmp_path):
        path = tmp_path / "a.ckpt"
        save_checkpoint(_ckpt(), path)
        raw = bytearray(path.read_bytes())
        raw[16] = ord("X")  # first header byte: breaks the JSON object
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="header"):
            load_checkpoint(path)

    def test_blob_bitflip_detected(self, tmp_path):
        path = tmp_path / "a.ckpt"
        save_checkpoint(_ckpt(), path)
        raw = bytearray(path.read_bytes())
        raw[-1] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointError, match="hash mismatch"):
            load_checkpoint(path)

    def test_truncated_blob(self, tmp_path):
        path = tmp_path / "a.ckpt"
        save_checkpoint(_ckpt(), path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-4])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "a.ckpt"
        save_checkpoint(_ckpt(), path)
        raw = path.read_bytes()
        header_len = int.from_bytes(raw[8:16], "big")
        header = json.loads(raw[16 : 16 + header_len])
        header["version"] = 99
        new_header = json.dumps(header, sort_keys=True).encode()
        path.write_bytes(
            raw[:8]
            + len(new_header).to_bytes(8, "big")
            + new_header
            + raw[16 + header_len :]
        )
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="cannot read"):
            load_checkpoint(tmp_path / "missing.ckpt")

    def test_unknown_kind_rejected_at_construction(self):
        with pytest.raises(CheckpointError, match="unknown checkpoint kind"):
            Checkpoint(kind="gan", config={}, step=0, arrays={})

    def test_model_kinds(self):
        assert MODEL_KINDS == (
            "savae",
            "sed-diffusion",
            "ddpm-dense",
            "ldm-vae",
            "ldm-diffusion",
        )


class TestTorchGlue:
    def test_module_roundtrip(self, tmp_path):
        torch.manual_seed(0)
        model = nn.Sequential(nn.Linear(4, 3), nn.SiLU(), nn.Linear(3, 2))
        arrays = module_arrays(model)
        assert all(name.startswith("model.") for name in arrays)
        ckpt = Checkpoint(kind="ddpm-dense", config={}, step=0, arrays=arrays)
        path = tmp_path / "m.ckpt"
        save_checkpoint(ckpt, path)

        torch.manual_seed(1)
        other = nn.Sequential(nn.Linear(4, 3), nn.SiLU(), nn.Linear(3, 2))
        restore_module(other, load_checkpoint(path).arrays)
        for a, b in zip(model.state_dict().values(), other.state_dict().values()):
            assert torch.equal(a, b)

    def test_restore_missing_array(self):
        model = nn.Linear(2, 2)
        with pytest.raises(CheckpointError, match="missing array"):
            restore_module(model, {})

    def test_restore_shape_mismatch(self):
        model = nn.Linear(2, 2)
        arrays = module_arrays(model)
        arrays["model.weight"] = np.zeros((3, 3), dtype=np.float32)
        with pytest.raises(CheckpointError, match="shape mismatch"):
            restore_module(model, arrays)

    def test_ema_roundtrip(self):
        torch.manual_seed(0)
        model = nn.Linear(3, 2)
        ema = EmaState.from_module(model, decay=0.95)
        ema.update(model)
        arrays = ema_arrays(ema)
        assert all(name.startswith("ema.") for name in arrays)
        restored = ema_from_arrays(model, arrays, decay=0.95)
        assert restored.decay == 0.95
        for name, t in ema.shadow.items():
            assert torch.equal(restored.shadow[name], t)

    def test_ema_missing_array(self):
        model = nn.Linear(2, 2)
        with pytest.raises(CheckpointError, match="missing EMA array"):
            ema_from_arrays(model, {}, decay=0.9)
