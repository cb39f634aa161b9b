"""Dataset construction: synthetic HDR scenes, tone-mapped renditions, labels.

A corpus pairs each HDR scene with one LDR rendition per tone-mapping
operator and the six ground-truth distortion maps of that pair. Scenes are
split into train/val/test at the scene level (all renditions of a scene share
a split) so near-duplicate renditions never leak across splits.

The synthetic scene generator composes smooth gradients spanning several
decades of luminance, band-limited noise textures at mixed amplitudes, and
hard-edged patches -- enough structure for tone-mapping operators to produce
measurably different distortion behavior.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distortion import MAP_KEYS, OracleParams, distortion_maps, gaussian_blur
from .hdr_io import (
    RgbeParseError,
    ldr_luminance,
    load_hdr,
    load_pfm,
    load_png,
    luminance,
    save_hdr,
    save_pfm,
    save_png,
)
from .tonemap import TmoParams, tonemap

DEFAULT_SPLIT_RATIOS = (0.65, 0.16, 0.19)  # train / val / test
SPLIT_NAMES = ("train", "val", "test")


@dataclass
class CorpusEntry:
    scene: str
    hdr_path: str
    tmo: str
    ldr_path: str
    map_paths: dict[str, str]
    split: str

    @property
    def entry_id(self) -> str:
        return f"{self.scene}/{self.tmo}"


@dataclass
class CorpusManifest:
    seed: int
    root: str
    entries: list[CorpusEntry] = field(default_factory=list)

    def of_split(self, split: str) -> list[CorpusEntry]:
        if split not in SPLIT_NAMES:
            raise ValueError(f"unknown split {split!r}; expected one of {SPLIT_NAMES}")
        return [e for e in self.entries if e.split == split]

    def save(self, path: str | Path) -> None:
        doc = {
            "seed": self.seed,
            "root": self.root,
            "entries": [
                {
                    "scene": e.scene,
                    "hdr_path": e.hdr_path,
                    "tmo": e.tmo,
                    "ldr_path": e.ldr_path,
                    "map_paths": e.map_paths,
                    "split": e.split,
                }
                for e in self.entries
            ],
        }
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="ascii")

    @staticmethod
    def load(path: str | Path) -> "CorpusManifest":
        doc = json.loads(Path(path).read_text(encoding="ascii"))
        return CorpusManifest(
            seed=doc["seed"],
            root=doc["root"],
            entries=[CorpusEntry(**e) for e in doc["entries"]],
        )


# ---------------------------------------------------------------------------
# synthetic scenes
# ---------------------------------------------------------------------------


def _smooth_field(rng: np.random.Generator, size: int, sigma: float) -> np.ndarray:
    """Zero-mean unit-ish smooth noise field."""
    noise = rng.standard_normal((size, size))
    smooth = gaussian_blur(noise, sigma)
    return smooth / (np.abs(smooth).max() + 1e-12)

def synth_scene(size: int, rng: np.random.Generator) -> np.ndarray:
    """One procedural HDR scene of shape (size, size, 3).

    Luminance is built in the log domain from a dominant gradient, two scales
    of textured noise, and hard-edged rectangles/disks, then mapped onto a
    span of 4 to 6 decades anchored at 1e-2. Chromaticity varies smoothly but
    leaves the luminance channel untouched.
    """
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)

    # Dominant smooth gradient carries the dynamic range.
    angle = rng.uniform(0, 2 * np.pi)
    ramp = np.cos(angle) * xx + np.sin(angle) * yy
    cx, cy = rng.uniform(0.2, 0.8, size=2)
    radial = np.hypot(xx - cx, yy - cy)
    log_field = ramp + rng.uniform(-0.8, 0.8) * radial

    # Band-limited textures at two scales, amplitudes straddling visibility.
    log_field = log_field + rng.uniform(0.02, 0.25) * _smooth_field(rng, size, 1.5)
    log_field = log_field + rng.uniform(0.05, 0.3) * _smooth_field(rng, size, 6.0)

    # Hard-edged rectangles and disks.
    for _ in range(rng.integers(2, 6)):
        offset = rng.uniform(-0.5, 0.5)
        if rng.random() < 0.5:
            x0, y0 = rng.uniform(0, 0.8, size=2)
            w, h = rng.uniform(0.1, 0.35, size=2)
            mask = (xx >= x0) & (xx < x0 + w) & (yy >= y0) & (yy < y0 + h)
        else:
            px, py = rng.uniform(0.1, 0.9, size=2)
            r = rng.uniform(0.05, 0.2)
            mask = np.hypot(xx - px, yy - py) < r
        log_field = log_field + offset * mask

    # Normalize to [0, 1] and stretch onto the target decade span.
    log_field = log_field - log_field.min()
    log_field = log_field / (log_field.max() + 1e-12)
    decades = rng.uniform(4.05, 6.0)
    log_lum = -2.0 + decades * log_field  # log10 cd/m^2, anchored at 1e-2
    lum = 10.0**log_lum

    # Smooth chromaticity with unit Rec. 709 luminance, applied multiplicatively.
    tint = np.stack(
        [1.0 + 0.4 * _smooth_field(rng, size, size / 6.0) for _ in range(3)], axis=-1
    )
    tint = np.clip(tint, 0.05, None)
    tint /= luminance(tint)[:, :, None]
    return lum[:, :, None] * tint


def synth_scenes(out_dir: str | Path, count: int, size: int = 256, seed: int = 0) -> list[Path]:
    """Write ``count`` procedural scenes as scene000.hdr ... under out_dir.

    Deterministic: the same (count, size, seed) rebuilds byte-identical files.
    Every scene spans at least 4 decades of luminance.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for index in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        scene = synth_scene(size, rng)
        path = out_dir / f"scene{index:03d}.hdr"
        save_hdr(path, scene)
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# corpus build
# ---------------------------------------------------------------------------


def default_tmo_set() -> list[TmoParams]:
    return [TmoParams(operator=op) for op in ("reinhard", "ward", "durand")]


def build_corpus(
    hdr_dir: str | Path,
    out_dir: str | Path,
    tmo_set: list[TmoParams] | None = None,
    oracle_params: OracleParams = OracleParams(),
    split_ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
    seed: int = 0,
) -> CorpusManifest:
    """Render LDR images and oracle maps for every (scene, operator) pair.

    Scenes are assigned whole to train/val/test by a seeded shuffle with
    round(ratio * n) train and val counts. Layout:
    ``out/{scene}/{tmo}/ldr.png`` and ``out/{scene}/{tmo}/maps/{key}.pfm``.
    Undecodable .hdr files are skipped with a warning; an empty corpus is an
    error.
    """
    hdr_dir = Path(hdr_dir)
    out_dir = Path(out_dir)
    tmo_set = default_tmo_set() if tmo_set is None else tmo_set
    if abs(sum(split_ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")

    scenes: list[tuple[str, np.ndarray]] = []
    for path in sorted(hdr_dir.glob("*.hdr")):
        try:
            scenes.append((path.stem, load_hdr(path)))
        except (RgbeParseError, ValueError) as exc:
            warnings.warn(f"skipping undecodable {path.name}: {exc}")
    if not scenes:
        raise ValueError(f"no decodable .hdr files in {hdr_dir}")

    split_of = _assign_splits([s for s, _ in scenes], split_ratios, seed)

    manifest = CorpusManifest(seed=seed, root=str(out_dir))
    for scene_id, hdr in scenes:
        hdr_path = hdr_dir / f"{scene_id}.hdr"
        for params in tmo_set:
            pair_dir = out_dir / scene_id / params.operator
            maps_dir = pair_dir / "maps"
            maps_dir.mkdir(parents=True, exist_ok=True)

            ldr = tonemap(hdr, params)
            maps = distortion_maps(hdr, ldr, oracle_params)

            ldr_path = pair_dir / "ldr.png"
            save_png(ldr_path, ldr)
            map_paths = {}
            for key, values in maps.as_dict().items():
                if np.any(values < 0) or np.any(values > 1):
                    raise AssertionError(f"oracle map {key} out of [0, 1] for {scene_id}")
                map_path = maps_dir / f"{key}.pfm"
                save_pfm(map_path, values)
                map_paths[key] = str(map_path)
            manifest.entries.append(
                CorpusEntry(
                    scene=scene_id,
                    hdr_path=str(hdr_path),
                    tmo=params.operator,
                    ldr_path=str(ldr_path),
                    map_paths=map_paths,
                    split=split_of[scene_id],
                )
            )
    manifest.save(out_dir / "manifest.json")
    return manifest


def _assign_splits(
    scene_ids: list[str], ratios: tuple[float, float, float], seed: int
) -> dict[str, str]:
    order = list(scene_ids)
    np.random.default_rng(np.random.SeedSequence([seed, 0])).shuffle(order)
    n = len(order)
    n_train = int(round(ratios[0] * n))
    n_val = int(round(ratios[1] * n))
    split_of = {}
    for i, scene in enumerate(order):
        if i < n_train:
            split_of[scene] = "train"
        elif i < n_train + n_val:
            split_of[scene] = "val"
        else:
            split_of[scene] = "test"
    return split_of


# ---------------------------------------------------------------------------
# patch extraction
# ---------------------------------------------------------------------------


def patch_count(extent: int, patch: int, stride: int) -> int:
    """Windows along one axis: floor((extent - patch)/stride) + 1."""
    if extent < patch:
        return 0
    return (extent - patch) // stride + 1


def patch_extract(
    manifest: CorpusManifest,
    split: str,
    map_type: str,
    patch: int = 128,
    stride: int = 64,
) -> tuple[np.ndarray, np.ndarray]:
    """Aligned (luminance, label) 128x128 windows for one split and map type.

    Returns (patches, labels), both (N, 1, patch, patch) float64. Luminance is
    the linearized LDR luminance in [0, 1]; labels are the oracle map values.
    Images smaller than the patch contribute nothing.
    """
    if map_type not in MAP_KEYS:
        raise ValueError(f"unknown map type {map_type!r}")
    patches: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    for entry in manifest.of_split(split):
        lum = ldr_luminance(load_png(entry.ldr_path))
        label_map = load_pfm(entry.map_paths[map_type]).astype(np.float64)
        if label_map.shape != lum.shape:
            raise ValueError(f"map/ldr dimension mismatch for {entry.entry_id}")
        h, w = lum.shape
        for ty in range(0, h - patch + 1, stride):
            for tx in range(0, w - patch + 1, stride):
                patches.append(lum[ty : ty + patch, tx : tx + patch])
                labels.append(label_map[ty : ty + patch, tx : tx + patch])
    if not patches:
        raise ValueError(f"no patches extracted for split {split!r}")
    x = np.asarray(patches)[:, None, :, :]
    y = np.asarray(labels)[:, None, :, :]
    return x, np.clip(y, 0.0, 1.0)


# ---------------------------------------------------------------------------
# synthetic quality scores
# ---------------------------------------------------------------------------


def synthetic_mos(manifest: CorpusManifest, map_key: str = "loss-high") -> tuple[list[str], np.ndarray]:
    """Per-entry synthetic MOS: 100 * (1 - mean of the ground-truth map).

    A stand-in for human opinion scores on procedurally built corpora: less
    lost contrast reads as higher quality.
    """
    ids = []
    values = []
    for entry in manifest.entries:
        gt = load_pfm(entry.map_paths[map_key]).astype(np.float64)
        ids.append(entry.entry_id)
        values.append(100.0 * (1.0 - float(np.mean(gt))))
    return ids, np.array(values)


def write_mos_csv(path: str | Path, ids: list[str], mos: np.ndarray) -> None:
    lines = ["id,mos"] + [f"{i},{v:.9g}" for i, v in zip(ids, mos)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_mos_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != "id,mos":
        raise ValueError("bad MOS CSV header")
    ids, values = [], []
    for line in lines[1:]:
        if not line:
            continue
        row_id, value = line.split(",")
        ids.append(row_id)
        values.append(float(value))
    return ids, np.array(values)
