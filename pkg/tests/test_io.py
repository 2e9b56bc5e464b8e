"""File I/O and configuration tests: PFM/PNG round trips, atomic write
semantics, and strict JSON config parsing."""

import dataclasses
import hashlib
import json
import struct

import numpy as np
import pytest

from branchrange import RunConfig, default_rig, load_config
from branchrange.config import dump_config, rig_from_dict
from branchrange.errors import ParseError
from branchrange.fileio import (
    atomic_write,
    read_gray,
    read_pfm,
    sha256_of_file,
    write_bytes_atomic,
    write_gray,
    write_pfm,
)

import oracles


class TestPfm:
    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(90)
        arr = rng.normal(0, 10, (7, 5)).astype(np.float32)
        arr[0, 0] = 0.0
        arr[1, 1] = -1.0
        arr[2, 2] = np.float32(1e-30)
        path = tmp_path / "map.pfm"
        write_pfm(path, arr)
        back = read_pfm(path)
        assert back.dtype == np.float32
        assert back.tobytes() == arr.tobytes()

    def test_reader_matches_reference(self, tmp_path):
        rng = np.random.default_rng(91)
        arr = rng.normal(0, 5, (6, 9)).astype(np.float32)
        path = tmp_path / "map.pfm"
        write_pfm(path, arr)
        assert np.array_equal(read_pfm(path), oracles.read_pfm_ref(path))

    def test_written_header_layout(self, tmp_path):
        arr = np.zeros((2, 3), dtype=np.float32)
        path = tmp_path / "map.pfm"
        write_pfm(path, arr)
        raw = path.read_bytes()
        assert raw.startswith(b"Pf\n3 2\n-1.0\n")
        assert len(raw) == len(b"Pf\n3 2\n-1.0\n") + 2 * 3 * 4

    def test_rows_stored_bottom_up(self, tmp_path):
        arr = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
        path = tmp_path / "map.pfm"
        write_pfm(path, arr)
        raw = path.read_bytes()
        payload = raw[len(b"Pf\n2 2\n-1.0\n") :]
        first_stored_row = struct.unpack("<2f", payload[:8])
        assert first_stored_row == (3.0, 4.0)

    def test_reads_big_endian_positive_scale(self, tmp_path):
        arr = np.array([[1.5, -2.5], [0.25, 8.0]], dtype=np.float32)
        path = tmp_path / "big.pfm"
        body = np.flipud(arr).astype(">f4").tobytes()
        path.write_bytes(b"Pf\n2 2\n1.0\n" + body)
        assert np.array_equal(read_pfm(path), arr)

    def test_reads_color_as_channel_mean(self, tmp_path):
        rgb = np.zeros((2, 2, 3), dtype=np.float32)
        rgb[..., 0] = 1.0
        rgb[..., 1] = 2.0
        rgb[..., 2] = 6.0
        path = tmp_path / "color.pfm"
        path.write_bytes(b"PF\n2 2\n-1.0\n" + np.flipud(rgb).astype("<f4").tobytes())
        assert np.array_equal(read_pfm(path), np.full((2, 2), 3.0, dtype=np.float32))

    @pytest.mark.parametrize(
        "body",
        [
            b"P5\n2 2\n-1.0\n" + b"\0" * 16,          # wrong magic
            b"Pf\n2\n-1.0\n" + b"\0" * 16,            # malformed dims
            b"Pf\ntwo two\n-1.0\n" + b"\0" * 16,      # non-integer dims
            b"Pf\n2 2\nfast\n" + b"\0" * 16,          # bad scale
            b"Pf\n0 2\n-1.0\n",                       # non-positive dims
            b"Pf\n4 4\n-1.0\n" + b"\0" * 8,           # truncated payload
        ],
    )
    def test_malformed_pfm_raises(self, tmp_path, body):
        path = tmp_path / "bad.pfm"
        path.write_bytes(body)
        with pytest.raises(ParseError):
            read_pfm(path)

    def test_write_rejects_non_2d(self, tmp_path):
        with pytest.raises(ValueError):
            write_pfm(tmp_path / "x.pfm", np.zeros((2, 2, 2), dtype=np.float32))


class TestGrayPng:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(92)
        img = rng.integers(0, 256, (9, 14), dtype=np.uint8)
        path = tmp_path / "img.png"
        write_gray(path, img)
        assert np.array_equal(read_gray(path), img)

    def test_write_rejects_non_2d(self, tmp_path):
        with pytest.raises(ValueError):
            write_gray(tmp_path / "x.png", np.zeros((2, 2, 3), dtype=np.uint8))


class TestAtomicWrite:
    def test_failure_preserves_existing_content(self, tmp_path):
        path = tmp_path / "out.bin"
        path.write_bytes(b"original")

        def boom(f):
            f.write(b"partial")
            raise RuntimeError("disk on fire")

        with pytest.raises(RuntimeError):
            atomic_write(path, boom)
        assert path.read_bytes() == b"original"
        leftovers = [p for p in tmp_path.iterdir() if p != path]
        assert leftovers == []

    def test_failure_creates_nothing_new(self, tmp_path):
        path = tmp_path / "fresh.bin"
        with pytest.raises(RuntimeError):
            atomic_write(path, lambda f: (_ for _ in ()).throw(RuntimeError()))
        assert not path.exists()
        assert list(tmp_path.iterdir()) == []

    def test_success_replaces_content(self, tmp_path):
        path = tmp_path / "out.bin"
        path.write_bytes(b"old")
        write_bytes_atomic(path, b"new content")
        assert path.read_bytes() == b"new content"

    def test_sha256_matches_hashlib(self, tmp_path):
        payload = b"some bytes to digest" * 100
        path = tmp_path / "blob.bin"
        write_bytes_atomic(path, payload)
        assert sha256_of_file(path) == hashlib.sha256(payload).hexdigest()


class TestRunConfig:
    def test_default_rig_values(self):
        rig = default_rig()
        assert rig.focal_px * rig.baseline_m == 48.0
        assert (rig.width_px, rig.height_px) == (640, 360)

    def test_empty_dict_gives_defaults(self):
        assert RunConfig.from_dict({}) == RunConfig()

    def test_round_trip_exact(self):
        cfg = RunConfig()
        assert RunConfig.from_dict(cfg.to_dict()) == cfg

    def test_round_trip_through_json(self):
        cfg = RunConfig()
        blob = json.dumps(cfg.to_dict())
        assert RunConfig.from_dict(json.loads(blob)) == cfg

    def test_partial_rig_completed_from_defaults(self):
        cfg = RunConfig.from_dict({"rig": {"focal_px": 500.0}})
        assert cfg.rig.focal_px == 500.0
        assert cfg.rig.baseline_m == default_rig().baseline_m
        assert cfg.rig.width_px == default_rig().width_px

    def test_section_overrides_apply(self):
        cfg = RunConfig.from_dict(
            {
                "match": {"d_max": 32, "metric": "sad"},
                "synth": {"noise_sigma": 0.0},
                "subpixel": False,
            }
        )
        assert cfg.match.d_max == 32
        assert cfg.match.metric == "sad"
        assert cfg.synth.noise_sigma == 0.0
        assert cfg.subpixel is False
        assert cfg.wls == RunConfig().wls

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ParseError):
            RunConfig.from_dict({"matchh": {}})

    def test_unknown_section_key_rejected(self):
        with pytest.raises(ParseError):
            RunConfig.from_dict({"match": {"dmax": 32}})

    def test_non_object_section_rejected(self):
        with pytest.raises(ParseError):
            RunConfig.from_dict({"rig": 5})

    def test_non_object_root_rejected(self):
        with pytest.raises(ParseError):
            RunConfig.from_dict([1, 2, 3])

    def test_non_bool_subpixel_rejected(self):
        with pytest.raises(ParseError):
            RunConfig.from_dict({"subpixel": 1})

    def test_invalid_values_become_parse_errors(self):
        with pytest.raises(ParseError):
            RunConfig.from_dict({"match": {"d_max": 0}})
        with pytest.raises(ParseError):
            RunConfig.from_dict({"eval": {"bin_width_m": -1.0}})
        with pytest.raises(ParseError):
            RunConfig.from_dict({"rig": {"focal_px": -10.0}})

    def test_rig_from_dict_strict(self):
        rig = rig_from_dict({"focal_px": 400.0, "baseline_m": 0.2})
        assert rig.focal_px == 400.0 and rig.baseline_m == 0.2
        with pytest.raises(ParseError):
            rig_from_dict({"focal": 400.0})

    def test_rig_from_dict_full_round_trip(self):
        rig = default_rig()
        assert rig_from_dict(dataclasses.asdict(rig)) == rig


class TestConfigFiles:
    def test_load_valid_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text('{"match": {"d_max": 48}}')
        cfg = load_config(path)
        assert cfg.match.d_max == 48

    def test_load_missing_file_raises(self, tmp_path):
        with pytest.raises(ParseError):
            load_config(tmp_path / "absent.json")

    def test_load_invalid_json_raises(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(ParseError):
            load_config(path)

    def test_dump_load_round_trip(self, tmp_path):
        cfg = RunConfig.from_dict({"match": {"d_max": 32}, "subpixel": False})
        path = tmp_path / "cfg.json"
        dump_config(cfg, path)
        assert load_config(path) == cfg
        assert path.read_text().endswith("\n")

    def test_dump_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        dump_config(RunConfig(), a)
        dump_config(RunConfig(), b)
        assert a.read_bytes() == b.read_bytes()
