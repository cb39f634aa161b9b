"""Full-reference contrast-distortion oracle.

Compares the band-limited log-luminance contrast of an HDR reference with a
tone-mapped rendition and emits six per-pixel maps in [0, 1]:

    {loss, amplification, reversal} x {high band, low band}

* loss          -- contrast visible in the reference but not in the test image
* amplification -- contrast invisible in the reference but visible in the test
* reversal      -- contrast visible in both but with opposite polarity

Bands come from a two-level Gaussian decomposition of log2 luminance; a
Weibull-shaped psychometric function maps band contrast to detection
probability. These maps are the training labels for the map-predicting CNN
and the reference when validating its predictions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .hdr_io import ldr_luminance, luminance, validate_hdr, validate_ldr

LUMINANCE_FLOOR = 1e-6  # luminance is clamped up to this before log2

#: Canonical map ordering used for feature assembly, persistence, and the CLI.
MAP_KEYS = ("amp-high", "amp-low", "loss-high", "loss-low", "rev-high", "rev-low")


@dataclass(frozen=True)
class OracleParams:
    """Band and visibility parameters of the simplified contrast oracle."""

    sigma1: float = 1.0  # high-band blur, pixels
    sigma2: float = 4.0  # low-band blur, pixels
    threshold: float = 0.04  # visibility threshold, log2 contrast units
    slope: float = 3.5  # psychometric steepness

    def __post_init__(self):
        if not (0 < self.sigma1 < self.sigma2):
            raise ValueError("require 0 < sigma1 < sigma2")
        if self.threshold <= 0 or self.slope <= 0:
            raise ValueError("threshold and slope must be positive")


@dataclass(frozen=True)
class DistortionMaps:
    """Six dimension-matched maps, each (H, W) float64 in [0, 1]."""

    amp_high: np.ndarray
    amp_low: np.ndarray
    loss_high: np.ndarray
    loss_low: np.ndarray
    rev_high: np.ndarray
    rev_low: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        """Maps keyed by the canonical names, in canonical order."""
        return {
            "amp-high": self.amp_high,
            "amp-low": self.amp_low,
            "loss-high": self.loss_high,
            "loss-low": self.loss_low,
            "rev-high": self.rev_high,
            "rev-low": self.rev_low,
        }

    def __getitem__(self, key: str) -> np.ndarray:
        return self.as_dict()[key]


def gaussian_blur(values: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, window radius ceil(3*sigma), replicate borders."""
    radius = int(np.ceil(3.0 * sigma))
    return ndimage.gaussian_filter(
        np.asarray(values, dtype=np.float64), sigma, mode="nearest", radius=radius
    )


def band_decompose(lum: np.ndarray, params: OracleParams = OracleParams()) -> tuple[np.ndarray, np.ndarray]:
    """Split log2 luminance into (high, low) signed contrast bands.

    high = L0 - G(L0, sigma1), low = G(L0, sigma1) - G(L0, sigma2) where
    L0 = log2(max(lum, floor)). Multiplicative luminance rescaling shifts L0
    by a constant, which cancels in both differences.
    """
    lum = np.asarray(lum, dtype=np.float64)
    log_lum = np.log2(np.maximum(lum, LUMINANCE_FLOOR))
    g1 = gaussian_blur(log_lum, params.sigma1)
    g2 = gaussian_blur(log_lum, params.sigma2)
    return log_lum - g1, g1 - g2


def visibility(contrast: np.ndarray, params: OracleParams = OracleParams()) -> np.ndarray:
    """Detection probability of a signed band contrast.

    P(c) = 1 - exp(-(|c|/t)^s): zero at c=0, 1 - 1/e at |c| = t, saturating
    to 1 for strong contrast.
    """
    c = np.abs(np.asarray(contrast, dtype=np.float64))
    return -np.expm1(-((c / params.threshold) ** params.slope))


def distortion_maps_from_luminance(
    ref_lum: np.ndarray, test_lum: np.ndarray, params: OracleParams = OracleParams()
) -> DistortionMaps:
    """Core oracle on a pair of linear-light luminance maps.

    Per band with reference contrast c_r and test contrast c_t:
        loss          = P(c_r) * (1 - P(c_t))
        amplification = (1 - P(c_r)) * P(c_t)
        reversal      = P(c_r) * P(c_t) * [c_r and c_t have opposite signs]
    """
    ref_lum = np.asarray(ref_lum, dtype=np.float64)
    test_lum = np.asarray(test_lum, dtype=np.float64)
    if ref_lum.shape != test_lum.shape:
        raise ValueError(f"dimension mismatch: {ref_lum.shape} vs {test_lum.shape}")

    ref_bands = band_decompose(ref_lum, params)
    test_bands = band_decompose(test_lum, params)

    per_band = {}
    for name, c_ref, c_test in zip(("high", "low"), ref_bands, test_bands):
        p_ref = visibility(c_ref, params)
        p_test = visibility(c_test, params)
        opposite = (c_ref * c_test < 0).astype(np.float64)
        per_band[name] = (
            (1.0 - p_ref) * p_test,  # amplification
            p_ref * (1.0 - p_test),  # loss
            p_ref * p_test * opposite,  # reversal
        )

    return DistortionMaps(
        amp_high=per_band["high"][0],
        amp_low=per_band["low"][0],
        loss_high=per_band["high"][1],
        loss_low=per_band["low"][1],
        rev_high=per_band["high"][2],
        rev_low=per_band["low"][2],
    )


def distortion_maps(
    hdr: np.ndarray, ldr: np.ndarray, params: OracleParams = OracleParams()
) -> DistortionMaps:
    """Oracle on an (HDR reference, 8-bit LDR rendition) pair.

    The LDR image is linearized (inverse gamma 2.2) before luminance
    extraction; dimensions must match.
    """
    hdr = validate_hdr(hdr)
    ldr = validate_ldr(ldr)
    if hdr.shape != ldr.shape:
        raise ValueError(f"dimension mismatch: hdr {hdr.shape} vs ldr {ldr.shape}")
    return distortion_maps_from_luminance(luminance(hdr), ldr_luminance(ldr), params)
