"""Raster I/O: RGBE codec, PFM/PNG round trips, luminance."""

import numpy as np
import pytest

from tmqa import hdr_io
from tmqa.hdr_io import (
    PfmParseError,
    RgbeParseError,
    decode_rgbe,
    encode_rgbe,
    linearize_ldr,
    load_pfm,
    load_png,
    luminance,
    save_pfm,
    save_png,
    unit_to_u8,
)


def random_hdr(rng, h=13, w=17, lo=1e-6, hi=1e4):
    return rng.uniform(lo, hi, (h, w, 3))


class TestRgbeDecode:
    def test_zero_quadruple_decodes_to_black(self):
        quad = np.zeros((1, 1, 4), dtype=np.uint8)
        assert np.array_equal(hdr_io._rgbe_to_float(quad)[0, 0], [0.0, 0.0, 0.0])

    def test_half_offset_convention(self):
        # (128,128,128,129): (128.5/256) * 2^1 = 1.00390625 per channel
        quad = np.array([[[128, 128, 128, 129]]], dtype=np.uint8)
        np.testing.assert_array_equal(hdr_io._rgbe_to_float(quad)[0, 0], [1.00390625] * 3)

    def test_decode_accepts_rgbe_magic(self):
        img = np.full((2, 3, 3), 0.5)
        data = encode_rgbe(img).replace(b"#?RADIANCE", b"#?RGBE")
        assert decode_rgbe(data).shape == (2, 3, 3)

    def test_rle_scanline_roundtrip(self):
        # Hand-built new-style RLE: 8-wide scanline, constant runs per plane.
        width, height = 8, 1
        header = f"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {height} +X {width}\n".encode()
        rle = bytes([2, 2, 0, width])
        for value in (10, 20, 30, 130):  # r, g, b, e planes
            rle += bytes([128 + width, value])
        img = decode_rgbe(header + rle)
        expected = hdr_io._rgbe_to_float(
            np.tile(np.array([10, 20, 30, 130], dtype=np.uint8), (1, width, 1))
        )
        np.testing.assert_array_equal(img, expected)

    def test_rle_literal_span(self):
        width, height = 8, 1
        header = f"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {height} +X {width}\n".encode()
        rle = b""
        for value in (1, 2, 3, 131):
            rle += bytes([width]) + bytes([value] * width)  # literal span of 8
        img = decode_rgbe(header + bytes([2, 2, 0, width]) + rle)
        assert img.shape == (1, 8, 3)
        assert np.all(img > 0)

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda d: b"#?NOPE" + d[10:],
            lambda d: d.replace(b"32-bit_rle_rgbe", b"32-bit_xyz_rgbe"),
            lambda d: d.replace(b"-Y", b"+Y"),
            lambda d: d[:-5],
        ],
    )
    def test_malformed_streams_raise_with_offset(self, mutate):
        data = encode_rgbe(np.full((4, 4, 3), 0.25))
        with pytest.raises(RgbeParseError) as info:
            decode_rgbe(mutate(data))
        assert info.value.offset >= 0

    def test_truncated_rle_raises(self):
        width = 8
        header = f"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 1 +X {width}\n".encode()
        with pytest.raises(RgbeParseError):
            decode_rgbe(header + bytes([2, 2, 0, width, 128 + width]))


class TestRgbeEncode:
    def test_black_pixel_encodes_to_zero_quadruple(self):
        data = encode_rgbe(np.zeros((1, 1, 3)))
        assert data[-4:] == b"\x00\x00\x00\x00"

    def test_unit_white_quadruple(self):
        # 1.0 = 0.5 * 2^1 -> mantissa 128, exponent byte 129
        data = encode_rgbe(np.ones((1, 1, 3)))
        assert list(data[-4:]) == [128, 128, 128, 129]

    def test_non_finite_raises(self):
        img = np.ones((1, 1, 3))
        img[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            encode_rgbe(img)

    def test_roundtrip_relative_error_bound(self):
        rng = np.random.default_rng(42)
        img = random_hdr(rng, 32, 32)
        decoded = decode_rgbe(encode_rgbe(img))
        rel = np.abs(decoded.max(axis=2) - img.max(axis=2)) / img.max(axis=2)
        assert rel.max() <= 1.0 / 256.0

    def test_decode_encode_decode_fixed_point(self):
        rng = np.random.default_rng(7)
        first = decode_rgbe(encode_rgbe(random_hdr(rng)))
        second_bytes = encode_rgbe(first)
        second = decode_rgbe(second_bytes)
        assert np.array_equal(first, second)
        assert encode_rgbe(second) == second_bytes


class TestLuminance:
    def test_white_is_unit(self):
        assert luminance(np.ones((1, 1, 3)))[0, 0] == pytest.approx(1.0)

    def test_red_weight(self):
        assert luminance(np.array([[[1.0, 0.0, 0.0]]]))[0, 0] == pytest.approx(0.2126)

    def test_constant_gray_gives_constant_map(self):
        img = np.full((5, 7, 3), 0.3)
        assert np.ptp(luminance(img)) == 0.0

    def test_linearity_in_scale(self):
        rng = np.random.default_rng(0)
        img = random_hdr(rng, 6, 6)
        np.testing.assert_allclose(luminance(3.5 * img), 3.5 * luminance(img), rtol=1e-12)

    def test_ldr_linearization_gamma(self):
        ldr = np.full((1, 1, 3), 128, dtype=np.uint8)
        expected = (128 / 255.0) ** 2.2
        np.testing.assert_allclose(linearize_ldr(ldr), expected)


class TestPfm:
    def test_roundtrip_bit_exact_gray(self, tmp_path):
        rng = np.random.default_rng(3)
        arr = rng.standard_normal((9, 5)).astype(np.float32)
        save_pfm(tmp_path / "m.pfm", arr)
        assert np.array_equal(load_pfm(tmp_path / "m.pfm"), arr)

    def test_roundtrip_bit_exact_color(self, tmp_path):
        rng = np.random.default_rng(4)
        arr = (rng.standard_normal((4, 6, 3)) * 1e6).astype(np.float32)
        save_pfm(tmp_path / "c.pfm", arr)
        assert np.array_equal(load_pfm(tmp_path / "c.pfm"), arr)

    def test_big_endian_scale_accepted(self, tmp_path):
        arr = np.arange(6, dtype=">f4").reshape(2, 3)
        payload = b"Pf\n3 2\n1.0\n" + np.ascontiguousarray(arr[::-1]).tobytes()
        (tmp_path / "be.pfm").write_bytes(payload)
        assert np.array_equal(load_pfm(tmp_path / "be.pfm"), arr.astype(np.float32))

    def test_malformed_header_raises(self, tmp_path):
        (tmp_path / "bad.pfm").write_bytes(b"Px\n3 2\n-1.0\n" + b"\0" * 24)
        with pytest.raises(PfmParseError):
            load_pfm(tmp_path / "bad.pfm")

    def test_truncated_data_raises(self, tmp_path):
        (tmp_path / "short.pfm").write_bytes(b"Pf\n4 4\n-1.0\n" + b"\0" * 10)
        with pytest.raises(PfmParseError):
            load_pfm(tmp_path / "short.pfm")


class TestPng:
    def test_rgb_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        img = rng.integers(0, 256, (8, 11, 3), dtype=np.uint8)
        save_png(tmp_path / "x.png", img)
        assert np.array_equal(load_png(tmp_path / "x.png"), img)

    def test_gray_roundtrip(self, tmp_path):
        img = np.arange(64, dtype=np.uint8).reshape(8, 8)
        save_png(tmp_path / "g.png", img)
        assert np.array_equal(load_png(tmp_path / "g.png"), img)

    def test_quantization_round_half_up(self):
        assert unit_to_u8(np.array(0.5)) == 128  # round(127.5) rounds up
        assert unit_to_u8(np.array(0.0)) == 0
        assert unit_to_u8(np.array(1.0)) == 255
