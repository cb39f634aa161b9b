"""Tone-mapping operators and the brute-force bilateral filter."""

import numpy as np
import pytest

from tmqa.tonemap import (
    DegenerateImageError,
    TmoParams,
    bilateral_filter,
    durand_bilateral,
    reinhard_global,
    tonemap,
    ward_scale,
)


def gray_image(lum):
    """(H, W) luminance -> equal-channel HDR image with that exact luminance."""
    return np.repeat(np.asarray(lum, dtype=np.float64)[:, :, None], 3, axis=2)


class TestTmoParams:
    def test_defaults_valid(self):
        p = TmoParams()
        assert p.key_a == 0.18 and p.gamma == 2.2

    @pytest.mark.parametrize("kwargs", [
        {"operator": "bogus"},
        {"key_a": 0.0},
        {"base_contrast": 1.0},
        {"sigma_r": -1.0},
        {"l_white": 0.0},
    ])
    def test_invalid_params_raise(self, kwargs):
        with pytest.raises(ValueError):
            TmoParams(**kwargs)


class TestReinhard:
    def test_zero_luminance_pixel_maps_to_zero(self):
        img = gray_image([[0.0, 1.0], [2.0, 3.0]])
        out = reinhard_global(img)
        assert np.all(out[0, 0] == 0)

    def test_white_point_maps_to_one(self):
        # With l_white = max(scaled L), the brightest pixel hits exactly 255.
        rng = np.random.default_rng(0)
        img = gray_image(rng.uniform(0.1, 50.0, (8, 8)))
        out = reinhard_global(img)
        assert out.max() == 255

    def test_half_display_at_unit_scaled_luminance(self):
        # L_white -> inf and scaled L = 1 gives L_d = 1/2 exactly:
        # pick a two-level image whose log average makes a*Y/L_avg = 1 at Y0.
        key_a = 0.18
        y0 = 1.0
        img = gray_image(np.full((16, 16), y0))
        # constant image: L_avg = y0 (up to the 1e-6 floor), L = key_a
        out = reinhard_global(img, TmoParams(key_a=key_a, l_white=1e12))
        expected = round(255 * (key_a / (1 + key_a)) ** (1 / 2.2))
        assert abs(int(out[0, 0, 0]) - expected) <= 1

    def test_all_black_raises(self):
        with pytest.raises(DegenerateImageError):
            reinhard_global(np.zeros((4, 4, 3)))

    def test_rank_order_preserved(self):
        rng = np.random.default_rng(1)
        lum = rng.uniform(0.01, 100.0, (12, 12))
        out = reinhard_global(gray_image(lum))
        got = out[:, :, 0].astype(float).ravel()
        want = lum.ravel()
        order = np.argsort(want)
        diffs = np.diff(got[order])
        assert np.all(diffs >= 0)  # monotone up to quantization ties


class TestWard:
    def test_scale_factor_at_half_display_adaptation(self):
        # Luminances {25, 100} have log-average exactly 50 = L_dmax/2, which
        # makes the bracket 1 and m = 1/L_dmax; Y = 100 then maps to display
        # value 1.0 -> byte 255.
        img = gray_image([[25.0, 100.0], [25.0, 100.0]])
        out = ward_scale(img)
        assert out[0, 1, 0] == 255 and out[1, 1, 0] == 255

    def test_zero_pixel_stays_zero(self):
        img = gray_image([[0.0, 10.0], [20.0, 30.0]])
        assert np.all(ward_scale(img)[0, 0] == 0)

    def test_global_scaling_preserves_order(self):
        rng = np.random.default_rng(2)
        lum = rng.uniform(0.1, 80.0, (10, 10))
        a = ward_scale(gray_image(lum))[:, :, 0].astype(int)
        b = ward_scale(gray_image(2.0 * lum))[:, :, 0].astype(int)
        ra = np.argsort(lum.ravel())
        assert np.all(np.diff(a.ravel()[ra]) >= 0)
        assert np.all(np.diff(b.ravel()[ra]) >= 0)


class TestDurand:
    def test_constant_image_raises_degenerate_base(self):
        with pytest.raises(DegenerateImageError):
            durand_bilateral(gray_image(np.full((16, 16), 5.0)))

    def test_brightest_base_anchored_to_white(self):
        # A smooth two-decade ramp: zero-ish detail, max base maps near 255.
        ramp = np.logspace(0, 2, 32)
        img = gray_image(np.tile(ramp, (32, 1)))
        out = durand_bilateral(img, TmoParams(operator="durand", sigma_s=2.0))
        assert out.max() >= 250

    def test_output_dimensions_and_determinism(self):
        rng = np.random.default_rng(3)
        img = rng.uniform(0.01, 1000.0, (20, 24, 3))
        a = durand_bilateral(img)
        b = durand_bilateral(img)
        assert a.shape == img.shape and np.array_equal(a, b)


class TestBilateralFilter:
    def test_constant_map_unchanged(self):
        const = np.full((10, 10), 3.7)
        np.testing.assert_allclose(bilateral_filter(const, 2.0, 0.5), const, atol=1e-12)

    def test_large_sigma_r_equals_gaussian_blur(self):
        rng = np.random.default_rng(4)
        values = rng.standard_normal((12, 12))
        got = bilateral_filter(values, 1.5, 1e9)
        # Brute-force Gaussian blur with the same window and replicate padding.
        radius = int(np.ceil(3 * 1.5))
        padded = np.pad(values, radius, mode="edge")
        expected = np.zeros_like(values)
        norm = 0.0
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                w = np.exp(-(dy * dy + dx * dx) / (2 * 1.5**2))
                expected += w * padded[radius + dy : radius + dy + 12, radius + dx : radius + dx + 12]
                norm += w
        np.testing.assert_allclose(got, expected / norm, rtol=1e-9)

    def test_step_edge_preserved(self):
        # Two-plateau step with step size >> sigma_r: each side keeps its value
        # within 1% away from the edge.
        step = np.zeros((16, 16))
        step[:, 8:] = 10.0
        out = bilateral_filter(step, 2.0, 0.1)
        np.testing.assert_allclose(out[:, :4], 0.0, atol=0.1)
        np.testing.assert_allclose(out[:, 12:], 10.0, rtol=0.01)

    def test_invalid_sigmas_raise(self):
        with pytest.raises(ValueError):
            bilateral_filter(np.zeros((4, 4)), 0.0, 1.0)


class TestDispatch:
    def test_tonemap_routes_by_operator(self):
        rng = np.random.default_rng(5)
        img = rng.uniform(0.1, 10.0, (16, 16, 3))
        for op, fn in (("reinhard", reinhard_global), ("ward", ward_scale), ("durand", durand_bilateral)):
            params = TmoParams(operator=op)
            assert np.array_equal(tonemap(img, params), fn(img, params))

    def test_outputs_are_uint8_and_dimension_matched(self):
        rng = np.random.default_rng(6)
        img = rng.uniform(0.01, 500.0, (18, 14, 3))
        for op in ("reinhard", "ward", "durand"):
            out = tonemap(img, TmoParams(operator=op))
            assert out.dtype == np.uint8 and out.shape == img.shape

    def test_translation_invariance_global_ops(self):
        rng = np.random.default_rng(7)
        img = rng.uniform(0.1, 60.0, (8, 8, 3))
        rolled = np.roll(img, 3, axis=1)
        for op in ("reinhard", "ward"):
            out = tonemap(img, TmoParams(operator=op))
            out_rolled = tonemap(rolled, TmoParams(operator=op))
            assert np.array_equal(np.roll(out, 3, axis=1), out_rolled)
