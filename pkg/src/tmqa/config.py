"""Pipeline configuration: one document holding every module's parameters.

Configs load from JSON or TOML and save as JSON; nested parameter records
re-validate their invariants on construction, so a loaded config is known
good. ``load_config(save_config(cfg)) == cfg`` holds exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .cnn import TrainConfig
from .distortion import OracleParams
from .features import MscnConfig
from .svr import DEFAULT_GRID
from .tonemap import TmoParams

CONFIG_ENV_VAR = "TMQA_CONFIG"


@dataclass
class PipelineConfig:
    seed: int = 0
    tmo: TmoParams = field(default_factory=TmoParams)
    oracle: OracleParams = field(default_factory=OracleParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    mscn: MscnConfig = field(default_factory=MscnConfig)
    grid: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_GRID.items()})
    trials: int = 100
    train_fraction: float = 0.8
    folds: int = 5

    def __post_init__(self):
        if self.trials < 1 or not (0 < self.train_fraction < 1) or self.folds < 2:
            raise ValueError("trials >= 1, 0 < train_fraction < 1, folds >= 2 required")
        for key in ("box", "gamma", "epsilon"):
            if key not in self.grid or not self.grid[key]:
                raise ValueError(f"grid must provide a non-empty {key!r} list")


_SECTIONS = {
    "tmo": TmoParams,
    "oracle": OracleParams,
    "train": TrainConfig,
    "mscn": MscnConfig,
}


def config_to_dict(cfg: PipelineConfig) -> dict:
    doc = dataclasses.asdict(cfg)
    return doc


def config_from_dict(doc: dict) -> PipelineConfig:
    doc = dict(doc)
    kwargs = {}
    for key, cls in _SECTIONS.items():
        if key in doc:
            section = doc.pop(key)
            known = {f.name for f in dataclasses.fields(cls)}
            unknown = set(section) - known
            if unknown:
                raise ValueError(f"unknown keys in config section {key!r}: {sorted(unknown)}")
            kwargs[key] = cls(**section)
    known_top = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(doc) - known_top
    if unknown:
        raise ValueError(f"unknown top-level config keys: {sorted(unknown)}")
    kwargs.update(doc)
    return PipelineConfig(**kwargs)


def load_config(path: str | Path) -> PipelineConfig:
    """Load a pipeline config from a .json or .toml file."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python 3.10
            import tomli as tomllib
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
        # TOML has no null; the sentinel strings "auto" map to None.
        for section in ("tmo", "train"):
            for key, value in list(doc.get(section, {}).items()):
                if value == "auto":
                    doc[section][key] = None
    else:
        doc = json.loads(path.read_text(encoding="utf-8"))
    return config_from_dict(doc)


def save_config(path: str | Path, cfg: PipelineConfig) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n", encoding="ascii")
