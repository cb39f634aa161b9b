"""Raster I/O: Radiance RGBE (.hdr), PFM, 8-bit PNG, and luminance extraction.

Image conventions used throughout the package:

* HDR images are ``(H, W, 3)`` float64 arrays of linear-light, non-negative
  RGB radiance.
* LDR images are ``(H, W, 3)`` uint8 arrays, display-referred (gamma 2.2).
* Luminance maps and distortion maps are ``(H, W)`` float64 arrays.

RGBE decoding uses the half-offset convention ``(m + 0.5)/256 * 2^(E-128)``,
which centers the reconstruction inside the quantization bin. The encoder
writes flat (uncompressed) scanlines; the decoder additionally accepts
new-style RLE scanlines.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

# Rec. 709 relative-luminance weights, applied to linear-light RGB.
LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])

# Pixels whose max channel falls below this encode to the zero quadruple.
RGBE_ZERO_THRESHOLD = 1e-32

LDR_GAMMA = 2.2


class RgbeParseError(ValueError):
    """Malformed RGBE stream. ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class PfmParseError(ValueError):
    """Malformed PFM stream."""


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------

def validate_hdr(img: np.ndarray) -> np.ndarray:
    """Check HDR invariants (shape, finiteness, non-negativity); return float64 view."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"HDR image must be (H, W, 3) with H, W >= 1, got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("HDR image contains non-finite values")
    if np.any(img < 0):
        raise ValueError("HDR image contains negative values")
    return img


def validate_ldr(img: np.ndarray) -> np.ndarray:
    """Check LDR invariants (uint8, shape)."""
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError(f"LDR image must be uint8, got {img.dtype}")
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"LDR image must be (H, W, 3) with H, W >= 1, got {img.shape}")
    return img


# ---------------------------------------------------------------------------
# Radiance RGBE
# ---------------------------------------------------------------------------

_RESOLUTION_RE = re.compile(rb"^-Y[ \t]+(\d+)[ \t]+\+X[ \t]+(\d+)[ \t]*$")

# New-style RLE is only legal for scanline widths in this range.
_RLE_MIN_WIDTH = 8
_RLE_MAX_WIDTH = 0x7FFF


def decode_rgbe(data: bytes) -> np.ndarray:
    """Decode a Radiance RGBE byte stream to an (H, W, 3) float64 HDR image.

    Accepts flat and new-style RLE scanlines. Scanlines are stored top to
    bottom (``-Y H +X W`` orientation; other orientations are rejected).
    """
    pos = 0

    def read_line() -> bytes:
        nonlocal pos
        end = data.find(b"\n", pos)
        if end < 0:
            raise RgbeParseError("unterminated header line", pos)
        line = data[pos:end]
        pos = end + 1
        return line

    magic = read_line()
    if not (magic.startswith(b"#?RADIANCE") or magic.startswith(b"#?RGBE")):
        raise RgbeParseError("missing #?RADIANCE / #?RGBE magic", 0)

    format_ok = False
    while True:
        line_start = pos
        line = read_line()
        if line == b"":
            break  # blank line ends the header
        if line.startswith(b"#"):
            continue
        if line.startswith(b"FORMAT="):
            if line != b"FORMAT=32-bit_rle_rgbe":
                raise RgbeParseError(f"unsupported FORMAT {line!r}", line_start)
            format_ok = True
    if not format_ok:
        raise RgbeParseError("header lacks FORMAT=32-bit_rle_rgbe", pos)

    res_start = pos
    m = _RESOLUTION_RE.match(read_line())
    if not m:
        raise RgbeParseError("expected resolution line '-Y H +X W'", res_start)
    height, width = int(m.group(1)), int(m.group(2))
    if height < 1 or width < 1:
        raise RgbeParseError("degenerate resolution", res_start)

    rgbe = np.empty((height, width, 4), dtype=np.uint8)
    for y in range(height):
        pos = _decode_scanline(data, pos, rgbe[y])

    return _rgbe_to_float(rgbe)


def _decode_scanline(data: bytes, pos: int, out: np.ndarray) -> int:
    """Decode one scanline into ``out`` (W, 4); return the new stream offset."""
    width = out.shape[0]
    if (
        _RLE_MIN_WIDTH <= width <= _RLE_MAX_WIDTH
        and len(data) - pos >= 4
        and data[pos] == 2
        and data[pos + 1] == 2
        and data[pos + 2] & 0x80 == 0
        and (data[pos + 2] << 8 | data[pos + 3]) == width
    ):
        return _decode_rle_scanline(data, pos + 4, out)

    end = pos + width * 4
    if end > len(data):
        raise RgbeParseError("truncated flat scanline", pos)
    out[:] = np.frombuffer(data, dtype=np.uint8, count=width * 4, offset=pos).reshape(width, 4)
    return end


def _decode_rle_scanline(data: bytes, pos: int, out: np.ndarray) -> int:
    width = out.shape[0]
    for c in range(4):
        filled = 0
        while filled < width:
            if pos >= len(data):
                raise RgbeParseError("truncated RLE scanline", pos)
            code = data[pos]
            pos += 1
            if code > 128:  # run of a repeated byte
                run = code & 0x7F
                if pos >= len(data):
                    raise RgbeParseError("truncated RLE run", pos)
                if filled + run > width:
                    raise RgbeParseError("RLE run overflows scanline", pos - 1)
                out[filled : filled + run, c] = data[pos]
                pos += 1
                filled += run
            else:  # literal span
                if code == 0:
                    raise RgbeParseError("zero-length RLE literal", pos - 1)
                if filled + code > width:
                    raise RgbeParseError("RLE literal overflows scanline", pos - 1)
                if pos + code > len(data):
                    raise RgbeParseError("truncated RLE literal", pos)
                out[filled : filled + code, c] = np.frombuffer(
                    data, dtype=np.uint8, count=code, offset=pos
                )
                pos += code
                filled += code
    return pos


def _rgbe_to_float(rgbe: np.ndarray) -> np.ndarray:
    exponent = rgbe[:, :, 3].astype(np.int32) - 128
    scale = np.ldexp(1.0, exponent) / 256.0
    img = (rgbe[:, :, :3].astype(np.float64) + 0.5) * scale[:, :, None]
    img[rgbe[:, :, 3] == 0] = 0.0
    return img


def encode_rgbe(img: np.ndarray) -> bytes:
    """Encode an HDR image as a flat-scanline Radiance RGBE byte stream.

    Per pixel the shared exponent e satisfies ``max(r,g,b)/2^e in [0.5, 1)``
    and mantissas are ``floor(v/2^e * 256)``; pixels with max channel below
    1e-32 become the zero quadruple.
    """
    img = validate_hdr(img)
    height, width, _ = img.shape

    v_max = img.max(axis=2)
    _, exponent = np.frexp(v_max)  # v_max = f * 2^e with f in [0.5, 1)
    if np.any(exponent > 127):
        raise ValueError("channel value too large for RGBE exponent range")

    mantissa = np.floor(img * np.ldexp(1.0, -exponent)[:, :, None] * 256.0)
    rgbe = np.empty((height, width, 4), dtype=np.uint8)
    rgbe[:, :, :3] = np.clip(mantissa, 0, 255).astype(np.uint8)
    rgbe[:, :, 3] = (exponent + 128).astype(np.uint8)

    zero = v_max < RGBE_ZERO_THRESHOLD
    rgbe[zero] = 0

    header = f"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {height} +X {width}\n"
    return header.encode("ascii") + rgbe.tobytes()


def load_hdr(path: str | Path) -> np.ndarray:
    return decode_rgbe(Path(path).read_bytes())


def save_hdr(path: str | Path, img: np.ndarray) -> None:
    Path(path).write_bytes(encode_rgbe(img))


# ---------------------------------------------------------------------------
# luminance
# ---------------------------------------------------------------------------

def luminance(img: np.ndarray) -> np.ndarray:
    """Rec. 709 relative luminance of a linear-light (H, W, 3) image."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    return img @ LUMA_WEIGHTS


def linearize_ldr(ldr: np.ndarray) -> np.ndarray:
    """Invert the display gamma: uint8 LDR -> linear-light floats in [0, 1]."""
    ldr = validate_ldr(ldr)
    return (ldr.astype(np.float64) / 255.0) ** LDR_GAMMA


def ldr_luminance(ldr: np.ndarray) -> np.ndarray:
    """Linear-light luminance of an 8-bit LDR image (inverse gamma 2.2 first)."""
    return luminance(linearize_ldr(ldr))


# ---------------------------------------------------------------------------
# PFM
# ---------------------------------------------------------------------------

def save_pfm(path: str | Path, arr: np.ndarray) -> None:
    """Write a float32 PFM ('Pf' grayscale for 2-D input, 'PF' for (H, W, 3)).

    Always little-endian (negative scale), rows bottom-to-top per convention.
    """
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim == 2:
        magic = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"PFM supports (H, W) or (H, W, 3) arrays, got {arr.shape}")
    height, width = arr.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n")
        fh.write(f"{width} {height}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.ascontiguousarray(arr[::-1]).astype("<f4").tobytes())


def load_pfm(path: str | Path) -> np.ndarray:
    """Read a PFM file; returns float32 (H, W) or (H, W, 3)."""
    data = Path(path).read_bytes()
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise PfmParseError("truncated PFM header")
        return data[start:pos]

    magic = token()
    if magic == b"Pf":
        channels = 1
    elif magic == b"PF":
        channels = 3
    else:
        raise PfmParseError(f"bad PFM magic {magic!r}")
    try:
        width = int(token())
        height = int(token())
        scale = float(token())
    except ValueError as exc:
        raise PfmParseError(f"bad PFM header field: {exc}") from exc
    if width < 1 or height < 1 or width * height > 10**9:
        raise PfmParseError(f"unreasonable PFM dimensions {width}x{height}")
    pos += 1  # single whitespace byte after the scale line

    count = width * height * channels
    dtype = "<f4" if scale < 0 else ">f4"
    if len(data) - pos < count * 4:
        raise PfmParseError("truncated PFM pixel data")
    arr = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return arr.reshape(shape)[::-1].astype(np.float32)


# ---------------------------------------------------------------------------
# PNG
# ---------------------------------------------------------------------------

def save_png(path: str | Path, arr: np.ndarray) -> None:
    """Write a uint8 array as 8-bit grayscale or RGB PNG."""
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        raise ValueError(f"PNG writer expects uint8, got {arr.dtype}")
    if arr.ndim == 2:
        mode = "L"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        mode = "RGB"
    else:
        raise ValueError(f"PNG writer supports (H, W) or (H, W, 3), got {arr.shape}")
    Image.fromarray(arr, mode=mode).save(path, format="PNG")


def load_png(path: str | Path) -> np.ndarray:
    """Read an 8-bit grayscale or RGB PNG as a uint8 array."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            raise ValueError(f"unsupported PNG mode {im.mode!r}; expected L or RGB")
        return np.asarray(im)


def unit_to_u8(values: np.ndarray) -> np.ndarray:
    """Quantize [0, 1] floats to uint8 with round-half-up: floor(255 v + 0.5)."""
    return np.floor(np.clip(values, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def save_map_png(path: str | Path, map_values: np.ndarray) -> None:
    """Persist a [0, 1] map as an 8-bit grayscale PNG (visualization only)."""
    save_png(path, unit_to_u8(np.asarray(map_values, dtype=np.float64)))
