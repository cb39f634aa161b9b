"""Convolutional encoder-decoder predicting one distortion map from LDR luminance.

A small fully-convolutional network with two pooling stages, skip connections
from both encoder stages into the decoder, dropout at the bottleneck, and a
sigmoid output. One model is trained per distortion-map type (six in total),
all sharing this architecture:

    enc:  conv3x3(1->32)+relu -> maxpool2 -> conv3x3(32->64)+relu -> maxpool2
          -> conv3x3(64->128)+relu -> dropout(0.5)
    dec:  upsample2 -> concat(enc 64-ch) -> conv3x3(192->64)+relu
          -> upsample2 -> concat(enc 32-ch) -> conv3x3(96->32)+relu
          -> conv1x1(32->1) -> sigmoid

Forward and backward passes are written directly in numpy (float64).
Activations use channel-first (C, N, H, W) layout so convolutions reduce to
per-offset GEMMs without layout shuffles. Training is plain SGD with momentum
on a mean-squared-error loss, fully deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .distortion import MAP_KEYS, DistortionMaps
from .hdr_io import ldr_luminance

# Channel widths of the fixed architecture.
ENC1_CHANNELS = 32
ENC2_CHANNELS = 64
BOTTLENECK_CHANNELS = 128
DEC1_CHANNELS = 64
DEC2_CHANNELS = 32

MODEL_FORMAT = "tmqa-mapnet-v1"


@dataclass
class TrainConfig:
    """Training hyperparameters. Patch size must be divisible by 4."""

    patch_size: int = 128
    stride: int = 64
    batch_size: int = 16
    learning_rate: float = 1e-3
    momentum: float = 0.9
    epochs: int = 10
    dropout_rate: float = 0.5
    seed: int = 0
    stop_at_loss: float | None = None  # early exit when epoch MSE falls below

    def __post_init__(self):
        if self.patch_size % 4 != 0:
            raise ValueError("patch_size must be divisible by 4 (two pooling stages)")
        if self.batch_size < 1 or self.epochs < 1 or self.stride < 1:
            raise ValueError("batch_size, epochs, and stride must be >= 1")
        if self.learning_rate <= 0 or not (0 <= self.dropout_rate < 1):
            raise ValueError("learning_rate > 0 and 0 <= dropout_rate < 1 required")


# ---------------------------------------------------------------------------
# layers
#
# All layers operate on channels-last (N, H, W, C) float64 tensors, the
# layout in which the convolution's offset slices are contiguous. forward()
# caches what backward() needs; backward(grad_out) returns grad wrt the layer
# input and, for convolutions, stores parameter gradients in .grad_w/.grad_b.
# ---------------------------------------------------------------------------


class Conv2d:
    """k x k cross-correlation (k in {1, 3}), zero padding (k-1)//2, with bias.

    The 3x3 path pads each sample to (H+3) x (W+2) and flattens (N, H, W)
    into one long row axis of a (rows, C) matrix, so every kernel offset
    (dy, dx) addresses a contiguous row block of the whole batch and each of
    the nine offset GEMMs runs directly on views, with no im2col
    materialization. Window positions that straddle a row or sample boundary
    read zero padding or are cropped; in the backward pass the widened output
    gradient is zero there, so they contribute nothing to either gradient.
    """

    def __init__(self, c_in: int, c_out: int, ksize: int, rng: np.random.Generator):
        if ksize not in (1, 3):
            raise ValueError("only 1x1 and 3x3 kernels are supported")
        self.c_in, self.c_out, self.ksize = c_in, c_out, ksize
        fan_in = c_in * ksize * ksize
        self.w = rng.normal(0.0, np.sqrt(2.0 / fan_in), (c_out, c_in, ksize, ksize))
        self.b = np.zeros(c_out)
        self.grad_w = np.zeros_like(self.w)
        self.grad_b = np.zeros_like(self.b)
        self._cache: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[3] != self.c_in:
            raise ValueError(f"conv expected {self.c_in} input channels, got {x.shape[3]}")
        n, h, w, _ = x.shape
        if self.ksize == 1:
            self._cache = x
            out = np.dot(x.reshape(-1, self.c_in), self.w[:, :, 0, 0].T)
            return out.reshape(n, h, w, self.c_out) + self.b

        # One top + two bottom pad rows per sample: windows for valid output
        # rows never reach into the next sample, and offset slices keep
        # headroom at the tail of the buffer.
        padded = np.pad(x, ((0, 0), (1, 2), (1, 1), (0, 0)))
        self._cache = padded
        hb, wp = h + 3, w + 2
        flat = padded.reshape(n * hb * wp, self.c_in)
        length = flat.shape[0] - 2 * wp - 2
        out = np.zeros((n * hb * wp, self.c_out))
        target = out[:length]
        buffer = np.empty_like(target)
        for dy in range(3):
            for dx in range(3):
                start = dy * wp + dx
                np.dot(flat[start : start + length], self.w[:, :, dy, dx].T, out=buffer)
                target += buffer
        out = out.reshape(n, hb, wp, self.c_out)[:, :h, :w]
        return np.ascontiguousarray(out) + self.b

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        cached = self._cache
        assert cached is not None, "backward called before forward"
        n, h, w, _ = grad_out.shape
        self.grad_b = grad_out.sum(axis=(0, 1, 2))
        if self.ksize == 1:
            g = grad_out.reshape(-1, self.c_out)
            x = cached.reshape(-1, self.c_in)
            self.grad_w[:, :, 0, 0] = np.dot(g.T, x)
            return np.dot(g, self.w[:, :, 0, 0]).reshape(n, h, w, self.c_in)

        hb, wp = h + 3, w + 2
        # Widen the output gradient onto the padded grid; padding cells stay
        # zero so boundary-straddling window positions are inert.
        g_wide = np.zeros((n, hb, wp, self.c_out))
        g_wide[:, :h, :w] = grad_out
        flat = cached.reshape(n * hb * wp, self.c_in)
        length = flat.shape[0] - 2 * wp - 2
        g_flat = g_wide.reshape(n * hb * wp, self.c_out)[:length]

        grad_flat = np.zeros_like(flat)
        for dy in range(3):
            for dx in range(3):
                start = dy * wp + dx
                self.grad_w[:, :, dy, dx] = np.dot(g_flat.T, flat[start : start + length])
                grad_flat[start : start + length] += np.dot(g_flat, self.w[:, :, dy, dx])
        grad_padded = grad_flat.reshape(n, hb, wp, self.c_in)
        return np.ascontiguousarray(grad_padded[:, 1 : h + 1, 1 : w + 1])


class ReLU:
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return np.where(self._mask, grad_out, 0.0)


class MaxPool2:
    """2x2 non-overlapping max; gradient routes to the first argmax of each window."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, h, w, c = x.shape
        if h % 2 or w % 2:
            raise ValueError(f"maxpool2 requires even spatial dims, got {h}x{w}")
        windows = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4)
        windows = windows.reshape(n, h // 2, w // 2, c, 4)
        self._argmax = windows.argmax(axis=-1)
        self._in_shape = x.shape
        return np.take_along_axis(windows, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        n, h, w, c = self._in_shape
        scattered = np.zeros((n, h // 2, w // 2, c, 4))
        np.put_along_axis(scattered, self._argmax[..., None], grad_out[..., None], axis=-1)
        scattered = scattered.reshape(n, h // 2, w // 2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
        return scattered.reshape(n, h, w, c)


class Upsample2:
    """Nearest-neighbor x2; backward sums each 2x2 block."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.repeat(2, axis=1).repeat(2, axis=2)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        n, h, w, c = grad_out.shape
        return grad_out.reshape(n, h // 2, 2, w // 2, 2, c).sum(axis=(2, 4))


class Dropout:
    """Inverted dropout: train-time scaling by 1/(1-rate), identity in eval."""

    def __init__(self, rate: float):
        self.rate = rate
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None) -> np.ndarray:
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("train-mode dropout needs an explicit RNG for determinism")
        keep = 1.0 - self.rate
        self._mask = (rng.random(x.shape) < keep) / keep
        return x * self._mask

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return grad_out
        return grad_out * self._mask


class Sigmoid:
    def forward(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        self._out = out
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return grad_out * self._out * (1.0 - self._out)


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


class MapNet:
    """Encoder-decoder with skip connections; predicts one distortion-map type.

    Inputs are (N, 1, H, W) LDR luminance patches in [0, 1] with H, W
    divisible by 4; outputs are (N, 1, H, W) maps in (0, 1).
    """

    def __init__(self, map_type: str, seed: int = 0, dropout_rate: float = 0.5):
        if map_type not in MAP_KEYS:
            raise ValueError(f"unknown map type {map_type!r}; expected one of {MAP_KEYS}")
        self.map_type = map_type
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.conv1 = Conv2d(1, ENC1_CHANNELS, 3, rng)
        self.conv2 = Conv2d(ENC1_CHANNELS, ENC2_CHANNELS, 3, rng)
        self.conv3 = Conv2d(ENC2_CHANNELS, BOTTLENECK_CHANNELS, 3, rng)
        self.conv4 = Conv2d(BOTTLENECK_CHANNELS + ENC2_CHANNELS, DEC1_CHANNELS, 3, rng)
        self.conv5 = Conv2d(DEC1_CHANNELS + ENC1_CHANNELS, DEC2_CHANNELS, 3, rng)
        self.conv6 = Conv2d(DEC2_CHANNELS, 1, 1, rng)
        self.relu1, self.relu2, self.relu3 = ReLU(), ReLU(), ReLU()
        self.relu4, self.relu5 = ReLU(), ReLU()
        self.pool1, self.pool2 = MaxPool2(), MaxPool2()
        self.up1, self.up2 = Upsample2(), Upsample2()
        self.dropout = Dropout(dropout_rate)
        self.sigmoid = Sigmoid()
        self.metadata: dict = {"seed": seed, "epochs": 0, "loss_curve": []}

    @property
    def convs(self) -> list[Conv2d]:
        return [self.conv1, self.conv2, self.conv3, self.conv4, self.conv5, self.conv6]

    def parameters(self) -> list[np.ndarray]:
        params: list[np.ndarray] = []
        for conv in self.convs:
            params.append(conv.w)
            params.append(conv.b)
        return params

    def gradients(self) -> list[np.ndarray]:
        grads: list[np.ndarray] = []
        for conv in self.convs:
            grads.append(conv.grad_w)
            grads.append(conv.grad_b)
        return grads

    def forward(
        self, x: np.ndarray, train: bool = False, rng: np.random.Generator | None = None
    ) -> np.ndarray:
        """Run the network on (N, 1, H, W) input; eval mode is deterministic."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[1] != 1:
            raise ValueError(f"expected (N, 1, H, W) input, got {x.shape}")
        if x.shape[2] % 4 or x.shape[3] % 4:
            raise ValueError(f"spatial dims must be divisible by 4, got {x.shape[2:]}")

        nhwc = x.reshape(x.shape[0], x.shape[2], x.shape[3], 1)  # same memory order
        a1 = self.relu1.forward(self.conv1.forward(nhwc))
        a2 = self.relu2.forward(self.conv2.forward(self.pool1.forward(a1)))
        a3 = self.relu3.forward(self.conv3.forward(self.pool2.forward(a2)))
        d3 = self.dropout.forward(a3, train, rng)
        c1 = np.concatenate([self.up1.forward(d3), a2], axis=3)
        b1 = self.relu4.forward(self.conv4.forward(c1))
        c2 = np.concatenate([self.up2.forward(b1), a1], axis=3)
        b2 = self.relu5.forward(self.conv5.forward(c2))
        out = self.sigmoid.forward(self.conv6.forward(b2))
        return out.reshape(x.shape)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        """Backpropagate (N, 1, H, W) output gradient; fills conv .grad_w/.grad_b."""
        g = np.asarray(grad_out, dtype=np.float64)
        g = g.reshape(g.shape[0], g.shape[2], g.shape[3], 1)
        g = self.conv6.backward(self.sigmoid.backward(g))
        g = self.conv5.backward(self.relu5.backward(g))
        g_up2, g_skip1 = g[..., :DEC1_CHANNELS], g[..., DEC1_CHANNELS:]
        g = self.conv4.backward(self.relu4.backward(self.up2.backward(g_up2)))
        g_up1, g_skip2 = g[..., :BOTTLENECK_CHANNELS], g[..., BOTTLENECK_CHANNELS:]
        g = self.dropout.backward(self.up1.backward(g_up1))
        g = self.pool2.backward(self.conv3.backward(self.relu3.backward(g)))
        g = self.conv2.backward(self.relu2.backward(g + g_skip2))
        g = self.pool1.backward(g)
        g = self.conv1.backward(self.relu1.backward(g + g_skip1))
        return g.reshape(grad_out.shape)

    def layer_spec(self) -> list[dict]:
        """Declarative layer list (kinds, shapes, skip wiring) for persistence."""
        return [
            {"kind": "conv3x3", "in": 1, "out": ENC1_CHANNELS},
            {"kind": "relu"},
            {"kind": "maxpool2"},
            {"kind": "conv3x3", "in": ENC1_CHANNELS, "out": ENC2_CHANNELS},
            {"kind": "relu"},
            {"kind": "maxpool2"},
            {"kind": "conv3x3", "in": ENC2_CHANNELS, "out": BOTTLENECK_CHANNELS},
            {"kind": "relu"},
            {"kind": "dropout", "rate": self.dropout.rate},
            {"kind": "upsample2"},
            {"kind": "concat-skip", "source": "enc2"},
            {"kind": "conv3x3", "in": BOTTLENECK_CHANNELS + ENC2_CHANNELS, "out": DEC1_CHANNELS},
            {"kind": "relu"},
            {"kind": "upsample2"},
            {"kind": "concat-skip", "source": "enc1"},
            {"kind": "conv3x3", "in": DEC1_CHANNELS + ENC1_CHANNELS, "out": DEC2_CHANNELS},
            {"kind": "relu"},
            {"kind": "conv1x1", "in": DEC2_CHANNELS, "out": 1},
            {"kind": "sigmoid"},
        ]


def mse_loss(pred: np.ndarray, label: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient wrt the prediction."""
    diff = pred - label
    loss = float(np.mean(diff * diff))
    return loss, 2.0 * diff / diff.size


def train_model(
    patches: np.ndarray, labels: np.ndarray, map_type: str, cfg: TrainConfig
) -> MapNet:
    """Train a fresh MapNet on aligned (N, 1, h, w) patch/label arrays.

    SGD with momentum on MSE; the shuffle and dropout streams derive from
    cfg.seed, so two runs with the same configuration produce bit-identical
    weights. Records the per-epoch loss curve in model.metadata.
    """
    patches = np.asarray(patches, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if patches.shape[0] == 0:
        raise ValueError("empty training corpus")
    if patches.shape != labels.shape:
        raise ValueError(f"patch/label shape mismatch: {patches.shape} vs {labels.shape}")
    if labels.min() < 0 or labels.max() > 1:
        raise ValueError("labels must lie in [0, 1]")

    model = MapNet(map_type, seed=cfg.seed, dropout_rate=cfg.dropout_rate)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    dropout_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    velocity = [np.zeros_like(p) for p in model.parameters()]

    n = patches.shape[0]
    loss_curve: list[float] = []
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        epoch_losses: list[float] = []
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            pred = model.forward(patches[batch], train=True, rng=dropout_rng)
            loss, grad = mse_loss(pred, labels[batch])
            if not np.isfinite(loss):
                raise ArithmeticError(
                    f"non-finite training loss at epoch {epoch}, step {start // cfg.batch_size}"
                )
            model.backward(grad)
            for p, v, g in zip(model.parameters(), velocity, model.gradients()):
                v *= cfg.momentum
                v -= cfg.learning_rate * g
                p += v
            epoch_losses.append(loss)
        epoch_loss = float(np.mean(epoch_losses))
        loss_curve.append(epoch_loss)
        if cfg.stop_at_loss is not None and epoch_loss < cfg.stop_at_loss:
            break

    model.metadata.update(
        {"map_type": map_type, "epochs": len(loss_curve), "loss_curve": loss_curve}
    )
    return model


# ---------------------------------------------------------------------------
# whole-image inference
# ---------------------------------------------------------------------------


def _hat_window(size: int) -> np.ndarray:
    """Separable triangular blending window, strictly positive, peak ~1."""
    i = np.arange(size, dtype=np.float64)
    w = 1.0 - np.abs(2.0 * i - (size - 1)) / size
    return np.outer(w, w)


def predict_luminance_map(
    model: MapNet, lum: np.ndarray, tile: int = 128, stride: int = 64
) -> np.ndarray:
    """Predict a full-size map from a [0, 1] luminance raster.

    The raster is tiled with overlapping tile x tile windows; per-pixel output
    is the hat-window weighted average of the overlapping tile predictions.
    Rasters smaller than the tile are reflect-padded up and cropped back.
    """
    lum = np.asarray(lum, dtype=np.float64)
    h, w = lum.shape
    pad_h, pad_w = max(0, tile - h), max(0, tile - w)
    if pad_h or pad_w:
        padded = np.pad(lum, ((0, pad_h), (0, pad_w)), mode="reflect")
        return predict_luminance_map(model, padded, tile, stride)[:h, :w]

    def starts(extent: int) -> list[int]:
        pos = list(range(0, extent - tile + 1, stride))
        if pos[-1] != extent - tile:
            pos.append(extent - tile)
        return pos

    ys, xs = starts(h), starts(w)
    tiles = np.empty((len(ys) * len(xs), 1, tile, tile))
    for i, ty in enumerate(ys):
        for j, tx in enumerate(xs):
            tiles[i * len(xs) + j, 0] = lum[ty : ty + tile, tx : tx + tile]
    preds = model.forward(tiles, train=False)

    hat = _hat_window(tile)
    accum = np.zeros((h, w))
    norm = np.zeros((h, w))
    for i, ty in enumerate(ys):
        for j, tx in enumerate(xs):
            accum[ty : ty + tile, tx : tx + tile] += hat * preds[i * len(xs) + j, 0]
            norm[ty : ty + tile, tx : tx + tile] += hat
    return accum / norm


def predict_image(
    models: Mapping[str, MapNet], ldr: np.ndarray, tile: int = 128, stride: int = 64
) -> DistortionMaps:
    """Predict all six distortion maps for an 8-bit LDR image."""
    missing = [k for k in MAP_KEYS if k not in models]
    if missing:
        raise ValueError(f"missing models for map types: {missing}")
    lum = ldr_luminance(ldr)
    out = {k.replace("-", "_"): predict_luminance_map(models[k], lum, tile, stride) for k in MAP_KEYS}
    return DistortionMaps(**out)


# ---------------------------------------------------------------------------
# gradient check
# ---------------------------------------------------------------------------


def grad_check(
    model: MapNet,
    size: int = 16,
    seed: int = 0,
    samples_per_tensor: int = 25,
    step: float = 1e-3,
) -> float:
    """Compare analytic parameter gradients against central finite differences.

    Uses a random input/label pair and a frozen dropout mask (the dropout RNG
    is reseeded identically for every evaluation) and samples
    ``samples_per_tensor`` entries from each weight/bias tensor. A fixed-step
    secant is not a valid derivative oracle here: a sweep of +-step around a
    weight crosses relu/maxpool kinks, so per coordinate the step starts at
    ``step`` and shrinks until two consecutive estimates agree, and that
    stabilized value is compared against the analytic gradient. Returns the
    maximum relative error |analytic - numeric| / max(|analytic|, |numeric|);
    entries where both are below 1e-12 count as zero error.
    """
    data_rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    x = data_rng.random((1, 1, size, size))
    label = data_rng.random((1, 1, size, size))

    def run_loss() -> float:
        mask_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        pred = model.forward(x, train=True, rng=mask_rng)
        return mse_loss(pred, label)[0]

    def fd_estimate(flat: np.ndarray, idx: int) -> float:
        h = step
        previous = None
        while True:
            original = flat[idx]
            flat[idx] = original + h
            loss_plus = run_loss()
            flat[idx] = original - h
            loss_minus = run_loss()
            flat[idx] = original
            estimate = (loss_plus - loss_minus) / (2.0 * h)
            if previous is not None:
                close = abs(estimate - previous) <= 1e-5 * max(abs(estimate), abs(previous)) + 1e-14
                if close:
                    return estimate
            if h <= 2.5e-7:
                return estimate
            previous = estimate
            h /= 4.0

    mask_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    pred = model.forward(x, train=True, rng=mask_rng)
    _, grad = mse_loss(pred, label)
    model.backward(grad)
    analytic = [g.copy() for g in model.gradients()]

    idx_rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    max_rel = 0.0
    for tensor, grads in zip(model.parameters(), analytic):
        flat = tensor.reshape(-1)
        count = min(samples_per_tensor, flat.size)
        picks = idx_rng.choice(flat.size, size=count, replace=False)
        for idx in picks:
            numeric = fd_estimate(flat, idx)
            a = grads.reshape(-1)[idx]
            denom = max(abs(a), abs(numeric))
            if denom < 1e-12:
                continue
            max_rel = max(max_rel, abs(a - numeric) / denom)
    return max_rel


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def save_model(path: str | Path, model: MapNet) -> None:
    """Persist a model as a single JSON document (bit-exact float round trip)."""
    doc = {
        "format": MODEL_FORMAT,
        "map_type": model.map_type,
        "layers": model.layer_spec(),
        "weights": [
            {
                "w_shape": list(conv.w.shape),
                "w": conv.w.reshape(-1).tolist(),
                "b": conv.b.tolist(),
            }
            for conv in model.convs
        ],
        "metadata": model.metadata,
    }
    Path(path).write_text(json.dumps(doc), encoding="ascii")


def load_model(path: str | Path) -> MapNet:
    """Reload a model saved by save_model; validates the layer specification."""
    doc = json.loads(Path(path).read_text(encoding="ascii"))
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unrecognized model format {doc.get('format')!r}")
    seed = doc.get("metadata", {}).get("seed", 0)
    rate = next(l["rate"] for l in doc["layers"] if l["kind"] == "dropout")
    model = MapNet(doc["map_type"], seed=seed, dropout_rate=rate)
    if doc["layers"] != model.layer_spec():
        raise ValueError("stored layer specification does not match the architecture")
    stored = doc["weights"]
    if len(stored) != len(model.convs):
        raise ValueError("stored weight count does not match the architecture")
    for conv, entry in zip(model.convs, stored):
        w = np.array(entry["w"], dtype=np.float64).reshape(entry["w_shape"])
        b = np.array(entry["b"], dtype=np.float64)
        if w.shape != conv.w.shape or b.shape != conv.b.shape:
            raise ValueError("stored weight shapes do not match the architecture")
        conv.w = w
        conv.b = b
    model.metadata = doc.get("metadata", {})
    return model


def load_model_set(model_dir: str | Path) -> dict[str, MapNet]:
    """Load the six per-map models from ``<dir>/<map-key>.json``."""
    model_dir = Path(model_dir)
    models = {}
    for key in MAP_KEYS:
        path = model_dir / f"{key}.json"
        if not path.exists():
            raise FileNotFoundError(f"missing model file {path}")
        models[key] = load_model(path)
    return models
