"""Performance statistics and the repeated random-split evaluation protocol.

Reports the standard IQA triple -- Pearson linear correlation (PLCC),
Spearman rank-order correlation (SROCC), and RMSE -- between predicted and
reference quality scores, and runs the protocol of many random 80/20
train/test splits with per-split hyperparameter search, aggregating the
metrics across trials.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .svr import DEFAULT_GRID, grid_search, svr_predict, svr_train


def _check_pair(x, y, min_len: int = 2) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < min_len:
        raise ValueError(f"need at least {min_len} values, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite values")
    return x, y


def plcc(x, y) -> float:
    """Pearson linear correlation coefficient."""
    x, y = _check_pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    if denom == 0.0:
        raise ValueError("degenerate input: zero variance")
    return float(np.sum(dx * dy) / denom)


def srocc(x, y) -> float:
    """Spearman rank-order correlation: PLCC of average-ranked data."""
    x, y = _check_pair(x, y)
    return plcc(rankdata(x, method="average"), rankdata(y, method="average"))


def rmse(x, y) -> float:
    """Root mean squared error."""
    x, y = _check_pair(x, y, min_len=1)
    return float(np.sqrt(np.mean((x - y) ** 2)))


@dataclass
class EvalSummary:
    """Per-trial metrics of the split protocol plus mean/median aggregates."""

    trials: int
    seed: int
    plcc_values: list[float] = field(default_factory=list)
    srocc_values: list[float] = field(default_factory=list)
    rmse_values: list[float] = field(default_factory=list)

    @property
    def mean_plcc(self) -> float:
        return float(np.mean(self.plcc_values))

    @property
    def mean_srocc(self) -> float:
        return float(np.mean(self.srocc_values))

    @property
    def mean_rmse(self) -> float:
        return float(np.mean(self.rmse_values))

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "per_trial": {
                "plcc": self.plcc_values,
                "srocc": self.srocc_values,
                "rmse": self.rmse_values,
            },
            "mean": {
                "plcc": self.mean_plcc,
                "srocc": self.mean_srocc,
                "rmse": self.mean_rmse,
            },
            "median": {
                "plcc": float(np.median(self.plcc_values)),
                "srocc": float(np.median(self.srocc_values)),
                "rmse": float(np.median(self.rmse_values)),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="ascii")

    def table(self) -> str:
        lines = [f"{'trial':>5s}  {'plcc':>8s}  {'srocc':>8s}  {'rmse':>8s}"]
        for t, (p, s, r) in enumerate(
            zip(self.plcc_values, self.srocc_values, self.rmse_values)
        ):
            lines.append(f"{t:>5d}  {p:8.4f}  {s:8.4f}  {r:8.4f}")
        lines.append(
            f"{'mean':>5s}  {self.mean_plcc:8.4f}  {self.mean_srocc:8.4f}  {self.mean_rmse:8.4f}"
        )
        return "\n".join(lines)


def split_protocol(
    features: np.ndarray,
    mos: np.ndarray,
    trials: int = 100,
    train_fraction: float = 0.8,
    grid: dict = DEFAULT_GRID,
    seed: int = 0,
    folds: int = 5,
) -> EvalSummary:
    """Repeated random-split evaluation.

    Each trial draws a seeded random train/test partition with
    round(train_fraction * n) training rows, grid-searches SVR
    hyperparameters on the training part, trains, and records test-set PLCC,
    SROCC, and RMSE. Trial t uses the RNG stream seeded by (seed, t), so the
    whole summary is reproducible from (seed, trials).
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    mos = np.asarray(mos, dtype=np.float64).reshape(-1)
    n = mos.size
    if features.shape[0] != n:
        raise ValueError("feature rows and MOS length differ")
    if n < 10:
        raise ValueError(f"split protocol needs at least 10 rows, got {n}")
    if not (0 < train_fraction < 1):
        raise ValueError("train_fraction must lie in (0, 1)")

    summary = EvalSummary(trials=trials, seed=seed)
    n_train = int(round(train_fraction * n))
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        order = rng.permutation(n)
        train_idx, test_idx = order[:n_train], order[n_train:]
        try:
            params = grid_search(features[train_idx], mos[train_idx], grid, folds=folds, seed=seed)
            model = svr_train(features[train_idx], mos[train_idx], params)
        except Exception as exc:
            raise RuntimeError(f"trial {t} failed: {exc}") from exc
        pred = svr_predict(model, features[test_idx])
        summary.plcc_values.append(plcc(pred, mos[test_idx]))
        summary.srocc_values.append(srocc(pred, mos[test_idx]))
        summary.rmse_values.append(rmse(pred, mos[test_idx]))
    return summary
