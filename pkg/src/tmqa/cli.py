"""Command-line orchestration of the full pipeline.

One binary, subcommand style; artifacts are addressed by explicit paths.
Every command echoes its effective configuration and seed to stderr so runs
are reproducible from the log alone. Exit status 0 on success, 1 on errors
(message on stderr), 2 on bad usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import cnn, corpus, distortion, evaluation, features, hdr_io, svr, tonemap
from .config import CONFIG_ENV_VAR, PipelineConfig, config_to_dict, load_config


def _echo(command: str, effective: dict) -> None:
    sys.stderr.write(f"[tmqa {command}] {json.dumps(effective, default=str)}\n")


def _load_effective_config(args) -> PipelineConfig:
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    return load_config(path) if path else PipelineConfig()


def _override(record, **overrides):
    """Rebuild a frozen/param dataclass with the non-None overrides applied."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(record, **changes) if changes else record


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = _load_effective_config(args)
    seed = args.seed if args.seed is not None else cfg.seed
    _echo("synth", {"out": args.out, "count": args.count, "size": args.size, "seed": seed})
    paths = corpus.synth_scenes(args.out, args.count, args.size, seed)
    print(f"wrote {len(paths)} scenes to {args.out}")
    return 0


def cmd_tonemap(args) -> int:
    cfg = _load_effective_config(args)
    params = _override(
        cfg.tmo,
        operator=args.tmo,
        key_a=args.key_a,
        l_white=args.l_white,
        base_contrast=args.base_contrast,
        sigma_s=args.sigma_s,
        sigma_r=args.sigma_r,
    )
    _echo("tonemap", {"hdr": args.hdr, "out": args.out, **dataclasses.asdict(params)})
    ldr = tonemap.tonemap(hdr_io.load_hdr(args.hdr), params)
    hdr_io.save_png(args.out, ldr)
    print(f"wrote {args.out}")
    return 0


def cmd_oracle(args) -> int:
    cfg = _load_effective_config(args)
    params = _override(
        cfg.oracle, sigma1=args.sigma1, sigma2=args.sigma2, threshold=args.threshold, slope=args.slope
    )
    _echo("oracle", {"hdr": args.hdr, "ldr": args.ldr, "out_dir": args.out_dir, **dataclasses.asdict(params)})
    maps = distortion.distortion_maps(hdr_io.load_hdr(args.hdr), hdr_io.load_png(args.ldr), params)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for key, values in maps.as_dict().items():
        hdr_io.save_pfm(out_dir / f"{key}.pfm", values)
        if args.png:
            hdr_io.save_map_png(out_dir / f"{key}.png", values)
    print(f"wrote 6 maps to {out_dir}")
    return 0


def cmd_build_corpus(args) -> int:
    cfg = _load_effective_config(args)
    seed = args.seed if args.seed is not None else cfg.seed
    tmo_set = [dataclasses.replace(cfg.tmo, operator=op) for op in args.tmos.split(",")]
    _echo(
        "build-corpus",
        {"hdr_dir": args.hdr_dir, "out": args.out, "tmos": args.tmos, "seed": seed,
         "oracle": dataclasses.asdict(cfg.oracle)},
    )
    manifest = corpus.build_corpus(
        args.hdr_dir, args.out, tmo_set=tmo_set, oracle_params=cfg.oracle, seed=seed
    )
    print(f"built {len(manifest.entries)} entries; manifest at {Path(args.out) / 'manifest.json'}")
    return 0


def cmd_train_cnn(args) -> int:
    cfg = _load_effective_config(args)
    train_cfg = _override(
        cfg.train,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=args.seed,
        patch_size=args.patch_size,
        stride=args.stride,
    )
    _echo("train-cnn", {"corpus": args.corpus, "map": args.map, "out": args.out,
                        **dataclasses.asdict(train_cfg)})
    manifest = corpus.CorpusManifest.load(args.corpus)
    patches, labels = corpus.patch_extract(
        manifest, "train", args.map, patch=train_cfg.patch_size, stride=train_cfg.stride
    )
    model = cnn.train_model(patches, labels, args.map, train_cfg)
    cnn.save_model(args.out, model)
    print(f"trained {args.map} on {patches.shape[0]} patches; "
          f"final MSE {model.metadata['loss_curve'][-1]:.6g}; wrote {args.out}")
    return 0


def cmd_predict_maps(args) -> int:
    _echo("predict-maps", {"image": args.image, "models": args.models, "out_dir": args.out_dir})
    models = cnn.load_model_set(args.models)
    maps = cnn.predict_image(models, hdr_io.load_png(args.image))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for key, values in maps.as_dict().items():
        hdr_io.save_pfm(out_dir / f"{key}.pfm", values)
        if args.png:
            hdr_io.save_map_png(out_dir / f"{key}.png", values)
    print(f"wrote 6 predicted maps to {out_dir}")
    return 0


def cmd_features(args) -> int:
    cfg = _load_effective_config(args)
    _echo("features", {"corpus": args.corpus, "models": args.models, "out": args.out,
                       "from_oracle": args.from_oracle})
    manifest = corpus.CorpusManifest.load(args.corpus)
    models = None if args.from_oracle else cnn.load_model_set(args.models)
    ids, rows = [], []
    for entry in manifest.entries:
        ldr = hdr_io.load_png(entry.ldr_path)
        if args.from_oracle:
            loaded = {
                k.replace("-", "_"): hdr_io.load_pfm(p).astype(np.float64)
                for k, p in entry.map_paths.items()
            }
            maps = distortion.DistortionMaps(**loaded)
        else:
            maps = cnn.predict_image(models, ldr)
        ids.append(entry.entry_id)
        rows.append(features.extract_features(ldr, maps, cfg.mscn))
    features.write_feature_csv(args.out, ids, np.asarray(rows))
    print(f"wrote {len(ids)} feature rows to {args.out}")
    return 0


def cmd_train_svr(args) -> int:
    cfg = _load_effective_config(args)
    _echo("train-svr", {"features": args.features, "mos": args.mos, "out": args.out,
                        "grid": cfg.grid, "seed": cfg.seed})
    ids, X = features.read_feature_csv(args.features)
    mos_ids, mos = corpus.read_mos_csv(args.mos)
    y = _align_mos(ids, mos_ids, mos)
    if args.box is not None and args.gamma is not None and args.epsilon is not None:
        params = svr.SvrParams(box=args.box, gamma=args.gamma, epsilon=args.epsilon)
    else:
        grid = {k: tuple(v) for k, v in cfg.grid.items()}
        params = svr.grid_search(X, y, grid, folds=cfg.folds, seed=cfg.seed)
    model = svr.svr_train(X, y, params)
    svr.save_svr(args.out, model)
    print(f"trained SVR (box={params.box}, gamma={params.gamma}, epsilon={params.epsilon}, "
          f"kkt={model.kkt_residual:.2e}); wrote {args.out}")
    return 0


def cmd_score(args) -> int:
    cfg = _load_effective_config(args)
    _echo("score", {"image": args.image, "models": args.models, "svr": args.svr,
                    "emit_maps": args.emit_maps})
    models = cnn.load_model_set(args.models)
    regressor = svr.load_svr(args.svr)
    ldr = hdr_io.load_png(args.image)
    maps = cnn.predict_image(models, ldr)
    vec = features.extract_features(ldr, maps, cfg.mscn)
    score = svr.svr_predict(regressor, vec)
    if args.emit_maps:
        out_dir = Path(args.emit_maps)
        out_dir.mkdir(parents=True, exist_ok=True)
        for key, values in maps.as_dict().items():
            hdr_io.save_map_png(out_dir / f"{key}.png", values)
    print(f"{score:.6g}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_effective_config(args)
    trials = args.trials if args.trials is not None else cfg.trials
    seed = args.seed if args.seed is not None else cfg.seed
    fraction = args.train_fraction if args.train_fraction is not None else cfg.train_fraction
    _echo("evaluate", {"features": args.features, "mos": args.mos, "trials": trials,
                       "seed": seed, "train_fraction": fraction, "grid": cfg.grid})
    ids, X = features.read_feature_csv(args.features)
    mos_ids, mos = corpus.read_mos_csv(args.mos)
    y = _align_mos(ids, mos_ids, mos)
    grid = {k: tuple(v) for k, v in cfg.grid.items()}
    summary = evaluation.split_protocol(
        X, y, trials=trials, train_fraction=fraction, grid=grid, seed=seed, folds=cfg.folds
    )
    if args.out:
        summary.save(args.out)
    print(summary.table())
    return 0


def _align_mos(feature_ids: list[str], mos_ids: list[str], mos: np.ndarray) -> np.ndarray:
    lookup = dict(zip(mos_ids, mos))
    missing = [i for i in feature_ids if i not in lookup]
    if missing:
        raise ValueError(f"MOS file lacks entries for ids: {missing[:5]}...")
    return np.array([lookup[i] for i in feature_ids])


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tmqa",
        description="No-reference quality assessment for tone-mapped HDR images.",
    )
    parser.add_argument("--config", help=f"pipeline config (JSON/TOML); default ${CONFIG_ENV_VAR}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate procedural HDR scenes")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("tonemap", help="tone-map an HDR image to PNG")
    p.add_argument("--hdr", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tmo", choices=tonemap.OPERATOR_IDS)
    p.add_argument("--key-a", type=float)
    p.add_argument("--l-white", type=float)
    p.add_argument("--base-contrast", type=float)
    p.add_argument("--sigma-s", type=float)
    p.add_argument("--sigma-r", type=float)
    p.set_defaults(func=cmd_tonemap)

    p = sub.add_parser("oracle", help="ground-truth distortion maps for an HDR/LDR pair")
    p.add_argument("--hdr", required=True)
    p.add_argument("--ldr", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--png", action="store_true", help="also write PNG visualizations")
    p.add_argument("--sigma1", type=float)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--slope", type=float)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("build-corpus", help="render LDRs + oracle maps for all scenes")
    p.add_argument("--hdr-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tmos", default="reinhard,ward,durand")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_build_corpus)

    p = sub.add_parser("train-cnn", help="train one distortion-map model")
    p.add_argument("--corpus", required=True, help="manifest.json path")
    p.add_argument("--map", required=True, choices=distortion.MAP_KEYS)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--patch-size", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train_cnn)

    p = sub.add_parser("predict-maps", help="predict 6 maps for an LDR image")
    p.add_argument("--image", required=True)
    p.add_argument("--models", required=True, help="directory with <map-key>.json models")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--png", action="store_true")
    p.set_defaults(func=cmd_predict_maps)

    p = sub.add_parser("features", help="feature CSV for every corpus entry")
    p.add_argument("--corpus", required=True)
    p.add_argument("--models", help="model directory (omit with --from-oracle)")
    p.add_argument("--out", required=True)
    p.add_argument("--from-oracle", action="store_true",
                   help="use ground-truth maps instead of CNN predictions")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train-svr", help="train the score regressor")
    p.add_argument("--features", required=True)
    p.add_argument("--mos", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--box", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=cmd_train_svr)

    p = sub.add_parser("score", help="quality score of a single LDR image")
    p.add_argument("image")
    p.add_argument("--models", required=True)
    p.add_argument("--svr", required=True)
    p.add_argument("--emit-maps", help="directory for predicted-map PNGs")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="repeated random-split evaluation")
    p.add_argument("--features", required=True)
    p.add_argument("--mos", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--out", help="write EvalSummary JSON here")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # structured failure -> stderr, nonzero exit
        sys.stderr.write(f"tmqa: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
