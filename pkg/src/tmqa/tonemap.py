"""Tone-mapping operators: HDR radiance -> 8-bit display-referred LDR.

Three deterministic global/local operators are provided, used to render the
diverse LDR corpus the distortion pipeline trains on:

* ``reinhard_global`` -- photographic sigmoid with white-point burn-out.
* ``ward_scale``      -- single visibility-matching multiplicative scale.
* ``durand_bilateral``-- bilateral base/detail decomposition with base-layer
  contrast compression.

All operators share the output stage: per-channel scale in linear light,
clamp to [0, 1], gamma 2.2 encoding, round-half-up quantization to uint8.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hdr_io import luminance, unit_to_u8, validate_hdr

LUMINANCE_EPS = 1e-6  # floor added before logarithms

OPERATOR_IDS = ("reinhard", "ward", "durand")


class DegenerateImageError(ValueError):
    """Raised when an operator cannot proceed (all-black image, flat base)."""


@dataclass(frozen=True)
class TmoParams:
    """Tone-mapping parameters; defaults follow the operators' original papers.

    ``l_white=None`` means "auto" (use the maximum scaled luminance).
    ``sigma_s=None`` means 2% of the smaller image dimension.
    """

    operator: str = "reinhard"
    key_a: float = 0.18
    l_white: float | None = None
    base_contrast: float = 50.0
    sigma_s: float | None = None
    sigma_r: float = 0.4
    gamma: float = 2.2

    def __post_init__(self):
        if self.operator not in OPERATOR_IDS:
            raise ValueError(f"unknown operator {self.operator!r}; expected one of {OPERATOR_IDS}")
        if self.key_a <= 0 or self.base_contrast <= 1 or self.sigma_r <= 0 or self.gamma <= 0:
            raise ValueError("tone-mapping parameters must be strictly positive (base contrast > 1)")
        if self.l_white is not None and self.l_white <= 0:
            raise ValueError("l_white must be positive or None (auto)")
        if self.sigma_s is not None and self.sigma_s <= 0:
            raise ValueError("sigma_s must be positive or None (auto)")


def tonemap(img: np.ndarray, params: TmoParams) -> np.ndarray:
    """Dispatch to the operator named in ``params``."""
    op = {"reinhard": reinhard_global, "ward": ward_scale, "durand": durand_bilateral}
    return op[params.operator](img, params)


def _prepare(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    img = validate_hdr(img)
    lum = luminance(img)
    if not np.any(lum > 0):
        raise DegenerateImageError("degenerate luminance: image has no pixel with Y > 0")
    return img, lum


def _log_average(lum: np.ndarray) -> float:
    return float(np.exp(np.mean(np.log(lum + LUMINANCE_EPS))))


def _finish(img: np.ndarray, scale: np.ndarray, gamma: float) -> np.ndarray:
    """Scale linear RGB, clamp, gamma-encode, quantize."""
    display = np.clip(img * scale[:, :, None], 0.0, 1.0)
    return unit_to_u8(display ** (1.0 / gamma))


def reinhard_global(img: np.ndarray, params: TmoParams = TmoParams()) -> np.ndarray:
    """Photographic global operator.

    L = a*Y/L_avg, then L_d = L(1 + L/L_white^2)/(1 + L); the white point
    defaults to max(L) so the brightest pixel maps to exactly 1.
    """
    img, lum = _prepare(img)
    scaled = params.key_a * lum / _log_average(lum)
    l_white = float(np.max(scaled)) if params.l_white is None else params.l_white
    display_lum = scaled * (1.0 + scaled / l_white**2) / (1.0 + scaled)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(lum > 0, display_lum / lum, 0.0)
    return _finish(img, scale, params.gamma)


# Ward's display model: peak display luminance in cd/m^2.
WARD_DISPLAY_MAX = 100.0


def ward_scale(img: np.ndarray, params: TmoParams = TmoParams(operator="ward")) -> np.ndarray:
    """Visibility-matching single multiplicative scale.

    m = [(1.219 + (Ldmax/2)^0.4) / (1.219 + Lwa^0.4)]^2.5 / Ldmax, applied to
    all channels, so world luminances near the adaptation level map to
    mid-display luminance.
    """
    img, lum = _prepare(img)
    l_wa = _log_average(lum)
    m = ((1.219 + (WARD_DISPLAY_MAX / 2.0) ** 0.4) / (1.219 + l_wa**0.4)) ** 2.5
    m /= WARD_DISPLAY_MAX
    scale = np.full(lum.shape, m)
    return _finish(img, scale, params.gamma)


def durand_bilateral(img: np.ndarray, params: TmoParams = TmoParams(operator="durand")) -> np.ndarray:
    """Bilateral base/detail operator.

    The log10 luminance splits into a bilateral-filtered base B and detail D;
    the base is compressed to span log10(base_contrast) and anchored so its
    maximum maps to display white.
    """
    img, lum = _prepare(img)
    lum_f = lum + LUMINANCE_EPS
    log_lum = np.log10(lum_f)

    sigma_s = params.sigma_s
    if sigma_s is None:
        sigma_s = 0.02 * min(lum.shape)
    base = bilateral_filter(log_lum, sigma_s, params.sigma_r)
    detail = log_lum - base

    base_span = float(base.max() - base.min())
    if base_span <= 0:
        raise DegenerateImageError("degenerate base layer: bilateral base is constant")
    compression = np.log10(params.base_contrast) / base_span

    out_log = compression * base + detail - compression * base.max()
    scale = 10.0**out_log / lum_f
    return _finish(img, scale, params.gamma)


def bilateral_filter(values: np.ndarray, sigma_s: float, sigma_r: float) -> np.ndarray:
    """Brute-force windowed bilateral filter with replicate padding.

    Gaussian spatial weights over a square window of radius ceil(3*sigma_s),
    Gaussian range weights with width sigma_r, normalized per pixel.
    """
    if sigma_s <= 0 or sigma_r <= 0:
        raise ValueError("sigma_s and sigma_r must be positive")
    values = np.asarray(values, dtype=np.float64)
    radius = int(np.ceil(3.0 * sigma_s))
    padded = np.pad(values, radius, mode="edge")

    height, width = values.shape
    accum = np.zeros_like(values)
    norm = np.zeros_like(values)
    inv_2ss = 1.0 / (2.0 * sigma_s**2)
    inv_2sr = 1.0 / (2.0 * sigma_r**2)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            w_spatial = np.exp(-(dy * dy + dx * dx) * inv_2ss)
            shifted = padded[radius + dy : radius + dy + height, radius + dx : radius + dx + width]
            weight = w_spatial * np.exp(-((shifted - values) ** 2) * inv_2sr)
            accum += weight * shifted
            norm += weight
    return accum / norm
