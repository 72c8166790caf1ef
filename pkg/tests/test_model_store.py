"""Unit tests for the binary model file format."""

import struct

import numpy as np
import pytest

from services.model_store import decode_model, encode_model, load_model, model_digest, save_model
from services.network import init_network
from utils.errors import CorruptChecksum, FormatVersionMismatch, ModelFormatError


class TestModelStore:
    """Tests for save_model(), load_model() and the byte layout."""

    def test_round_trip(self, tmp_path, tiny_arch):
        net = init_network(8, 2, arch=tiny_arch, seed=3, dtype=np.float32, scheme="dependence")
        path = tmp_path / "models" / "net.bin"
        save_model(net, str(path))
        loaded = load_model(str(path))
        assert loaded.describe() == net.describe()
        assert loaded.dtype == np.float32
        for a, b in zip(net.parameters(), loaded.parameters()):
            assert np.array_equal(a, b)

    def test_encoding_is_byte_stable(self, tiny_net):
        assert encode_model(tiny_net, "abc") == encode_model(tiny_net, "abc")

    def test_starts_with_magic(self, tiny_net):
        assert encode_model(tiny_net)[:4] == b"NEPD"

    def test_bad_magic(self, tiny_net):
        data = encode_model(tiny_net)
        with pytest.raises(ModelFormatError):
            decode_model(b"XXXX" + data[4:])

    def test_version_mismatch(self, tiny_net):
        data = bytearray(encode_model(tiny_net))
        data[4:6] = struct.pack("<H", 99)
        with pytest.raises(FormatVersionMismatch):
            decode_model(bytes(data))

    def test_flipped_byte(self, tiny_net):
        data = bytearray(encode_model(tiny_net))
        data[len(data) // 2] ^= 0xFF
        with pytest.raises(CorruptChecksum):
            decode_model(bytes(data))

    @pytest.mark.parametrize("keep", [5, -10, -1])
    def test_truncated(self, tiny_net, keep):
        data = encode_model(tiny_net)
        with pytest.raises(CorruptChecksum):
            decode_model(data[:keep])

    def test_model_digest(self, tmp_path, tiny_net):
        path = str(tmp_path / "net.bin")
        save_model(tiny_net, path, config_digest="deadbeef")
        assert model_digest(path) == "deadbeef"

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_model(str(tmp_path / "absent.bin"))

    def test_loaded_model_predicts_identically(self, rng, tmp_path, tiny_net):
        path = str(tmp_path / "net.bin")
        save_model(tiny_net, path)
        batch = rng.uniform(size=(3, 8, 8))
        assert np.array_equal(load_model(path).forward(batch), tiny_net.forward(batch))
