"""Contrast-distortion oracle: band decomposition, visibility, six maps."""

import numpy as np
import pytest

from tmqa.distortion import (
    MAP_KEYS,
    OracleParams,
    band_decompose,
    distortion_maps,
    distortion_maps_from_luminance,
    visibility,
)
from tmqa.hdr_io import unit_to_u8


class TestOracleParams:
    @pytest.mark.parametrize("kwargs", [
        {"sigma1": 4.0, "sigma2": 1.0},
        {"sigma1": 2.0, "sigma2": 2.0},
        {"threshold": 0.0},
        {"slope": -1.0},
    ])
    def test_invalid_params_raise(self, kwargs):
        with pytest.raises(ValueError):
            OracleParams(**kwargs)


class TestBandDecompose:
    def test_constant_image_has_zero_bands(self):
        high, low = band_decompose(np.full((16, 16), 5.0))
        np.testing.assert_allclose(high, 0.0, atol=1e-12)
        np.testing.assert_allclose(low, 0.0, atol=1e-12)

    def test_multiplicative_rescale_leaves_bands_unchanged(self):
        rng = np.random.default_rng(0)
        lum = rng.uniform(0.01, 100.0, (20, 20))
        h1, l1 = band_decompose(lum)
        h2, l2 = band_decompose(lum * 8.0)  # power of two: exact in float
        np.testing.assert_allclose(h1, h2, atol=1e-12)
        np.testing.assert_allclose(l1, l2, atol=1e-12)

    def test_impulse_peaks_positive_at_center(self):
        # Brute-force oracle: windowed Gaussian convolution on a 9x9 impulse.
        lum = np.full((9, 9), 1.0)
        lum[4, 4] = 16.0
        high, _ = band_decompose(lum, OracleParams())
        log_lum = np.log2(np.maximum(lum, 1e-6))
        sigma = 1.0
        radius = int(np.ceil(3 * sigma))
        padded = np.pad(log_lum, radius, mode="edge")
        blur = np.zeros_like(log_lum)
        coords = np.arange(-radius, radius + 1)
        k1 = np.exp(-(coords**2) / (2 * sigma**2))
        k2 = np.outer(k1, k1) / np.outer(k1, k1).sum()
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                blur += k2[dy + radius, dx + radius] * padded[
                    radius + dy : radius + dy + 9, radius + dx : radius + dx + 9
                ]
        expected_high = log_lum - blur
        assert np.unravel_index(high.argmax(), high.shape) == (4, 4)
        assert high[4, 4] > 0
        np.testing.assert_allclose(high, expected_high, atol=1e-10)


class TestVisibility:
    def test_zero_contrast_invisible(self):
        assert visibility(0.0) == 0.0

    def test_threshold_value(self):
        p = OracleParams()
        assert visibility(p.threshold, p) == pytest.approx(1 - np.exp(-1), abs=1e-12)

    def test_strong_contrast_saturates(self):
        p = OracleParams()
        assert visibility(4 * p.threshold, p) == pytest.approx(1.0, abs=1e-10)

    def test_monotone_in_magnitude_and_sign_symmetric(self):
        c = np.linspace(-0.5, 0.5, 101)
        p = visibility(c)
        assert np.array_equal(p, visibility(-c))
        half = p[50:]
        assert np.all(np.diff(half) >= 0)


class TestDistortionMaps:
    def setup_method(self):
        self.rng = np.random.default_rng(42)
        self.params = OracleParams()

    def test_all_maps_in_unit_interval(self):
        for _ in range(3):
            ref = self.rng.uniform(1e-4, 1e3, (24, 24))
            test = self.rng.uniform(1e-4, 1e3, (24, 24))
            maps = distortion_maps_from_luminance(ref, test, self.params)
            for key, m in maps.as_dict().items():
                assert m.min() >= 0.0 and m.max() <= 1.0, key

    def test_identical_inputs_make_loss_equal_amplification(self):
        lum = self.rng.uniform(0.01, 100.0, (16, 16))
        maps = distortion_maps_from_luminance(lum, lum.copy(), self.params)
        d = maps.as_dict()
        assert np.array_equal(d["loss-high"], d["amp-high"])
        assert np.array_equal(d["loss-low"], d["amp-low"])
        assert np.all(d["rev-high"] == 0.0) and np.all(d["rev-low"] == 0.0)

    def test_affine_log_luminance_symmetry(self):
        # test = 2^j * ref shifts log2 luminance by an exact constant: bands
        # match to rounding, so reversal vanishes and loss == amplification.
        ref = self.rng.uniform(0.01, 100.0, (32, 32))
        maps = distortion_maps_from_luminance(ref, ref * 4.0, self.params)
        d = maps.as_dict()
        assert np.abs(d["loss-high"] - d["amp-high"]).max() < 1e-12
        assert np.abs(d["loss-low"] - d["amp-low"]).max() < 1e-12
        assert d["rev-high"].max() < 1e-12 and d["rev-low"].max() < 1e-12

    def test_role_swap_swaps_loss_and_amplification_exactly(self):
        a = self.rng.uniform(0.001, 1000.0, (16, 16))
        b = self.rng.uniform(0.001, 1000.0, (16, 16))
        ab = distortion_maps_from_luminance(a, b, self.params).as_dict()
        ba = distortion_maps_from_luminance(b, a, self.params).as_dict()
        for band in ("high", "low"):
            assert np.array_equal(ab[f"loss-{band}"], ba[f"amp-{band}"])
            assert np.array_equal(ab[f"amp-{band}"], ba[f"loss-{band}"])
            assert np.array_equal(ab[f"rev-{band}"], ba[f"rev-{band}"])

    def test_strong_reference_contrast_lost_in_flat_test(self):
        # Checkerboard reference vs constant test: interior loss saturates,
        # amplification and reversal vanish.
        yy, xx = np.mgrid[0:16, 0:16]
        ref = np.where((yy + xx) % 2 == 0, 10.0, 0.1)
        test = np.full((16, 16), 1.0)
        maps = distortion_maps_from_luminance(ref, test, self.params).as_dict()
        interior = maps["loss-high"][4:-4, 4:-4]
        assert interior.min() > 0.99
        assert maps["amp-high"].max() < 1e-6
        assert maps["rev-high"].max() == 0.0

    def test_opposite_contrast_reverses(self):
        # Reference bright-center impulse vs test dark-center impulse.
        ref = np.full((17, 17), 1.0)
        test = np.full((17, 17), 1.0)
        ref[8, 8] = 8.0
        test[8, 8] = 1.0 / 8.0
        maps = distortion_maps_from_luminance(ref, test, self.params).as_dict()
        assert maps["rev-high"][8, 8] > 0.99

    def test_hdr_ldr_wrapper_validates_dimensions(self):
        hdr = self.rng.uniform(0.1, 10.0, (8, 8, 3))
        ldr = unit_to_u8(self.rng.random((9, 8, 3)))
        with pytest.raises(ValueError, match="dimension mismatch"):
            distortion_maps(hdr, ldr)

    def test_map_keys_order(self):
        assert MAP_KEYS == ("amp-high", "amp-low", "loss-high", "loss-low", "rev-high", "rev-low")
