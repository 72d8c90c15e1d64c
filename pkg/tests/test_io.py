import json
import struct

import numpy as np
import pytest

from clipsieve import featureio
from clipsieve.featureio import (
    PackFormatError,
    fnv1a_64,
    pack_file_size,
    pack_from_bytes,
    pack_to_bytes,
    read_pack,
    read_queries,
    write_pack,
    write_queries,
)
from clipsieve.model import FeaturePack, QueryRecord

from conftest import make_pack


class TestFnv1a:
    # Published FNV-1a 64-bit vectors.
    def test_empty(self):
        assert fnv1a_64(b"") == 0xCBF29CE484222325

    def test_single_byte(self):
        assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C

    def test_foobar(self):
        assert fnv1a_64(b"foobar") == 0x85944171F73967E8

    def test_incremental_matches_whole(self):
        data = b"hello world, this is a checksum"
        assert fnv1a_64(data[16:], fnv1a_64(data[:16])) == fnv1a_64(data)


class TestLayout:
    def test_2x3_pack_is_68_bytes(self):
        pack = FeaturePack("v", np.array([0.0, 1.0]), np.ones((2, 3), np.float32))
        assert pack_file_size(2, 3) == 68
        assert len(pack_to_bytes(pack)) == 68

    def test_byte_layout_is_fixed_little_endian(self):
        pack = FeaturePack("v", np.array([0.0, 1.5]), np.array([[1.0, -2.0]], np.float32).repeat(2, 0))
        data = pack_to_bytes(pack)
        expected = b"OCFP" + struct.pack("<IIII", 1, 2, 2, 0)
        expected += struct.pack("<2d", 0.0, 1.5)
        expected += struct.pack("<4f", 1.0, -2.0, 1.0, -2.0)
        assert data[:-8] == expected
        assert struct.unpack("<Q", data[-8:])[0] == fnv1a_64(expected)

    def test_empty_pack_rejected_before_writing(self, tmp_path):
        pack = FeaturePack("v", np.zeros(0), np.zeros((0, 3), np.float32))
        with pytest.raises(ValueError, match="count must be positive"):
            write_pack(pack, tmp_path / "bad.ocfp")
        assert not (tmp_path / "bad.ocfp").exists()


class TestRoundTrip:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        pack = make_pack(rng, 1000, 512)
        path = tmp_path / "big.ocfp"
        n = write_pack(pack, path)
        assert n == pack_file_size(1000, 512)
        loaded = read_pack(path)
        assert loaded.normalized == pack.normalized
        assert np.array_equal(loaded.timestamps, pack.timestamps)
        assert np.array_equal(loaded.features, pack.features)
        assert pack_to_bytes(loaded) == path.read_bytes()

    def test_many_small_round_trips(self, rng):
        for _ in range(25):
            t = int(rng.integers(1, 40))
            d = int(rng.integers(1, 24))
            pack = make_pack(rng, t, d, normalized=bool(rng.integers(2)))
            data = pack_to_bytes(pack)
            again = pack_to_bytes(pack_from_bytes(data))
            assert data == again

    def test_video_id_defaults_to_stem(self, tmp_path, rng):
        path = tmp_path / "clip42.ocfp"
        write_pack(make_pack(rng, 3, 4), path)
        assert read_pack(path).video_id == "clip42"


class TestReadErrors:
    def make_bytes(self, rng):
        return pack_to_bytes(make_pack(rng, 4, 3))

    def test_bad_magic(self, rng):
        data = b"XXXX" + self.make_bytes(rng)[4:]
        with pytest.raises(PackFormatError, match="not a feature pack"):
            pack_from_bytes(data)

    def test_flipped_final_byte_is_corrupt(self, rng):
        data = bytearray(self.make_bytes(rng))
        data[-1] ^= 0xFF
        with pytest.raises(PackFormatError, match="corrupt pack"):
            pack_from_bytes(bytes(data))

    def test_flipped_payload_byte_is_corrupt(self, rng):
        data = bytearray(self.make_bytes(rng))
        data[24] ^= 0x01
        with pytest.raises(PackFormatError, match="corrupt pack"):
            pack_from_bytes(bytes(data))

    def test_truncated_file(self, rng):
        data = self.make_bytes(rng)
        with pytest.raises(PackFormatError, match="unexpected end"):
            pack_from_bytes(data[:30])

    def test_truncated_header(self):
        with pytest.raises(PackFormatError, match="unexpected end"):
            pack_from_bytes(b"OCFP\x01")

    def test_trailing_data(self, rng):
        with pytest.raises(PackFormatError, match="trailing"):
            pack_from_bytes(self.make_bytes(rng) + b"\x00")

    def test_unsupported_version(self, rng):
        data = bytearray(self.make_bytes(rng))
        struct.pack_into("<I", data, 4, 9)
        with pytest.raises(PackFormatError, match="version"):
            pack_from_bytes(bytes(data))

    def test_semantic_violation_named(self):
        # Bit-valid file whose timestamps are not increasing.
        body = b"OCFP" + struct.pack("<IIII", 1, 1, 2, 0)
        body += struct.pack("<2d", 1.0, 0.0) + struct.pack("<2f", 1.0, 1.0)
        data = body + struct.pack("<Q", fnv1a_64(body))
        with pytest.raises(PackFormatError, match="strictly increasing"):
            pack_from_bytes(data)


class TestQueryFile:
    def test_round_trip(self, tmp_path):
        records = [
            QueryRecord("q1", "what happens first", np.array([0.1, 0.2])),
            QueryRecord("q2", "no embedding yet"),
        ]
        path = tmp_path / "queries.jsonl"
        write_queries(records, path)
        loaded = read_queries(path)
        assert [r.query_id for r in loaded] == ["q1", "q2"]
        assert np.allclose(loaded[0].embedding, [0.1, 0.2])
        assert loaded[1].embedding is None

    def test_mixed_embedding_lengths_rejected(self, tmp_path):
        path = tmp_path / "queries.jsonl"
        path.write_text(
            '{"query_id": "a", "text": "x", "embedding": [1, 2]}\n'
            '{"query_id": "b", "text": "y", "embedding": [1, 2, 3]}\n'
        )
        with pytest.raises(ValueError, match="length"):
            read_queries(path)

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "queries.jsonl"
        path.write_text('{"query_id": "a", "text": "x"}\nnot json\n')
        with pytest.raises(ValueError, match=":2:"):
            read_queries(path)


class TestJsonDocuments:
    def test_pretty_sorted_output(self, tmp_path):
        path = tmp_path / "doc.json"
        featureio.dump_json({"b": 1, "a": [2, 3]}, path)
        text = path.read_text()
        assert text == '{\n  "a": [\n    2,\n    3\n  ],\n  "b": 1\n}\n'
        assert json.loads(text) == {"a": [2, 3], "b": 1}
