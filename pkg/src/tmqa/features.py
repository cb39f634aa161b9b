"""Stage-II features: MSCN transform, AGGD moment-matching fit, feature vectors.

Each of the seven rasters (LDR luminance scaled to [0, 255] plus the six
distortion maps on their native [0, 1] range) is divisively normalized
(MSCN), fitted with a zero-mean asymmetric generalized Gaussian, and
summarized by five numbers: the AGGD triple (shape alpha, left scale beta_l,
right scale beta_r) plus the raw raster's mean and standard deviation. The
concatenation in canonical raster order is the 35-dimensional feature vector
consumed by the score regressor.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.special import gamma as _scipy_gamma

from .distortion import MAP_KEYS, DistortionMaps
from .hdr_io import ldr_luminance

FEATURE_LENGTH = 35
FEATURE_RASTERS = ("image",) + MAP_KEYS  # fixed assembly order

ALPHA_LO, ALPHA_HI = 0.1, 10.0  # bisection bracket for the AGGD shape


@dataclass(frozen=True)
class MscnConfig:
    """Local normalization window (7x7 Gaussian, sigma 7/6) and stabilizer C.

    C = 1.0 suits rasters scaled to [0, 255]; use map_stabilizer() (C = 1/255)
    for maps on their native [0, 1] range so the stabilizer stays
    proportionally matched.
    """

    window: int = 7
    sigma: float = 7.0 / 6.0
    stabilizer: float = 1.0

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("window must be odd and positive")
        if self.sigma <= 0 or self.stabilizer <= 0:
            raise ValueError("sigma and stabilizer must be positive")

    def kernel(self) -> np.ndarray:
        half = self.window // 2
        coords = np.arange(-half, half + 1, dtype=np.float64)
        g = np.exp(-(coords**2) / (2.0 * self.sigma**2))
        k2d = np.outer(g, g)
        return k2d / k2d.sum()


def map_stabilizer(cfg: MscnConfig = MscnConfig()) -> MscnConfig:
    """The same window with C = 1/255, for rasters on the [0, 1] map range."""
    return MscnConfig(window=cfg.window, sigma=cfg.sigma, stabilizer=1.0 / 255.0)


@dataclass(frozen=True)
class AggdParams:
    """Zero-mean AGGD parameters: shape alpha, side scales beta_l / beta_r.

    ``one_sided`` flags fits where one tail had no samples and its scale was
    clamped to 1e-6.
    """

    alpha: float
    beta_l: float
    beta_r: float
    one_sided: bool = False


def mscn(raster: np.ndarray, cfg: MscnConfig = MscnConfig()) -> np.ndarray:
    """Mean-subtracted, contrast-normalized coefficients.

    I_hat = (I - mu) / (sigma + C) with mu and sigma the Gaussian-weighted
    local mean and standard deviation (replicate borders).
    """
    raster = np.asarray(raster, dtype=np.float64)
    if not np.all(np.isfinite(raster)):
        raise ValueError("raster contains non-finite values")
    kernel = cfg.kernel()
    mu = ndimage.correlate(raster, kernel, mode="nearest")
    ex2 = ndimage.correlate(raster * raster, kernel, mode="nearest")
    sigma = np.sqrt(np.maximum(ex2 - mu * mu, 0.0))
    return (raster - mu) / (sigma + cfg.stabilizer)


def gamma_fn(a) -> float | np.ndarray:
    """Euler gamma function on a > 0 (relative error far below 1e-10 on [0.05, 50])."""
    a = np.asarray(a, dtype=np.float64)
    if np.any(a <= 0):
        raise ValueError("gamma_fn requires a > 0")
    out = _scipy_gamma(a)
    return float(out) if out.ndim == 0 else out


def aggd_ratio(alpha) -> float | np.ndarray:
    """rho(alpha) = Gamma(2/alpha)^2 / (Gamma(1/alpha) Gamma(3/alpha)).

    Strictly increasing on [0.1, 10]; inverted by bisection in aggd_fit.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    out = gamma_fn(2.0 / alpha) ** 2 / (gamma_fn(1.0 / alpha) * gamma_fn(3.0 / alpha))
    return float(out) if np.ndim(out) == 0 else out


def _invert_ratio(target: float, tol: float = 1e-8, max_iter: int = 60) -> float:
    """Solve rho(alpha) = target by bisection; clamps outside the bracket."""
    lo, hi = ALPHA_LO, ALPHA_HI
    if target <= aggd_ratio(lo):
        return lo
    if target >= aggd_ratio(hi):
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        value = aggd_ratio(mid)
        if abs(value - target) < tol:
            return mid
        if value < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def aggd_fit(samples: np.ndarray) -> AggdParams:
    """Fit a zero-mean AGGD by moment matching.

    sigma_l / sigma_r are the RMS of the strictly negative / non-negative
    samples; the shape solves rho(alpha) = R_hat where R_hat combines the
    absolute-moment ratio with the side-scale ratio. Requires >= 100 samples,
    not all zero. One-sided data clamps the empty side's sigma to 1e-6 and
    sets the one_sided flag.
    """
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if x.size < 100:
        raise ValueError(f"aggd_fit needs at least 100 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    if not np.any(x != 0):
        raise ValueError("degenerate input: all samples are zero")

    neg = x[x < 0]
    pos = x[x >= 0]
    sigma_l = float(np.sqrt(np.mean(neg**2))) if neg.size else 0.0
    sigma_r = float(np.sqrt(np.mean(pos**2))) if pos.size else 0.0
    one_sided = sigma_l == 0.0 or sigma_r == 0.0
    sigma_l = max(sigma_l, 1e-6)
    sigma_r = max(sigma_r, 1e-6)

    gamma_hat = sigma_l / sigma_r
    r_hat = np.mean(np.abs(x)) ** 2 / np.mean(x**2)
    big_r = r_hat * (gamma_hat**3 + 1.0) * (gamma_hat + 1.0) / (gamma_hat**2 + 1.0) ** 2

    alpha = _invert_ratio(float(big_r))
    scale = np.sqrt(gamma_fn(1.0 / alpha) / gamma_fn(3.0 / alpha))
    return AggdParams(
        alpha=float(alpha),
        beta_l=float(sigma_l * scale),
        beta_r=float(sigma_r * scale),
        one_sided=bool(one_sided),
    )


def aggd_pdf(x, alpha: float, beta_l: float, beta_r: float) -> np.ndarray:
    """Zero-mean AGGD density: two one-sided generalized Gaussian halves
    sharing the normalizer alpha / ((beta_l + beta_r) Gamma(1/alpha))."""
    x = np.asarray(x, dtype=np.float64)
    if alpha <= 0 or beta_l <= 0 or beta_r <= 0:
        raise ValueError("AGGD parameters must be positive")
    norm = alpha / ((beta_l + beta_r) * gamma_fn(1.0 / alpha))
    out = np.where(
        x < 0,
        np.exp(-((np.abs(x) / beta_l) ** alpha)),
        np.exp(-((np.abs(x) / beta_r) ** alpha)),
    )
    return norm * out


# ---------------------------------------------------------------------------
# feature vector assembly
# ---------------------------------------------------------------------------


def raster_features(raster: np.ndarray, cfg: MscnConfig) -> np.ndarray:
    """Five features of one raster: AGGD (alpha, beta_l, beta_r) of the MSCN
    coefficients plus the raw raster's mean and population std."""
    coeffs = mscn(raster, cfg)
    fit = aggd_fit(coeffs)
    return np.array([fit.alpha, fit.beta_l, fit.beta_r, float(np.mean(raster)), float(np.std(raster))])


def extract_features(
    ldr: np.ndarray, maps: DistortionMaps, cfg: MscnConfig = MscnConfig()
) -> np.ndarray:
    """Assemble the 35-dim feature vector of an LDR image and its six maps.

    Raster order: image, amp-high, amp-low, loss-high, loss-low, rev-high,
    rev-low; five features each. The image enters as luminance scaled to
    [0, 255] with stabilizer C; maps stay on [0, 1] with C/255.
    """
    lum255 = ldr_luminance(ldr) * 255.0
    map_dict = maps.as_dict()
    for key, m in map_dict.items():
        if m.shape != lum255.shape:
            raise ValueError(f"map {key!r} shape {m.shape} does not match image {lum255.shape}")

    blocks = [raster_features(lum255, cfg)]
    map_cfg = map_stabilizer(cfg)
    for key in MAP_KEYS:
        try:
            blocks.append(raster_features(map_dict[key], map_cfg))
        except ValueError as exc:
            raise ValueError(f"feature extraction failed on raster {key!r}: {exc}") from exc
    vec = np.concatenate(blocks)
    assert vec.shape == (FEATURE_LENGTH,)
    return vec


# ---------------------------------------------------------------------------
# feature CSV persistence
# ---------------------------------------------------------------------------

_CSV_HEADER = "id," + ",".join(f"f{i:02d}" for i in range(1, FEATURE_LENGTH + 1))


def write_feature_csv(path: str | Path, ids: list[str], features: np.ndarray) -> None:
    """Write features as CSV: header `id,f01..f35`, 9 significant digits."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != FEATURE_LENGTH:
        raise ValueError(f"expected (n, {FEATURE_LENGTH}) feature matrix, got {features.shape}")
    if len(ids) != features.shape[0]:
        raise ValueError("id count does not match feature rows")
    lines = [_CSV_HEADER]
    for row_id, row in zip(ids, features):
        lines.append(str(row_id) + "," + ",".join(f"{v:.9g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_feature_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a feature CSV written by write_feature_csv."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != _CSV_HEADER:
        raise ValueError("bad feature CSV header")
    ids: list[str] = []
    rows: list[list[float]] = []
    for line in lines[1:]:
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != FEATURE_LENGTH + 1:
            raise ValueError(f"bad feature CSV row: {line!r}")
        ids.append(cells[0])
        rows.append([float(c) for c in cells[1:]])
    return ids, np.array(rows, dtype=np.float64)
