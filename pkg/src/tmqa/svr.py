"""Epsilon-insensitive support vector regression with an RBF kernel.

Maps 35-dim feature vectors to quality scores. The dual problem is solved by
sequential minimal optimization over the stacked variables z = [alpha;
alpha*] with the equality constraint sum(alpha) - sum(alpha*) = 0, using the
maximal-violating-pair working-set rule (ties broken toward the lowest
index), so training is fully deterministic. Features are z-scored with
training statistics; constant features are dropped and the mask recorded.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

KKT_TOL = 1e-3
TAU = 1e-12  # curvature guard for degenerate pair subproblems

#: Default hyperparameter search space (quality scores on a 0..100 MOS scale).
DEFAULT_GRID = {
    "box": (1.0, 10.0, 100.0, 1000.0),
    "gamma": tuple(2.0**k for k in range(-6, 3)),
    "epsilon": (0.1, 0.5, 1.0),
}


class ConvergenceError(RuntimeError):
    """SMO failed to reach the KKT tolerance within the iteration budget."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"SMO did not converge: KKT residual {residual:.3e} after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SvrParams:
    """Hyperparameters: box constraint, RBF width, tube half-width."""

    box: float = 100.0
    gamma: float = 0.125
    epsilon: float = 0.1
    tol: float = KKT_TOL
    max_iter: int = 200_000

    def __post_init__(self):
        if self.box <= 0 or self.gamma <= 0 or self.epsilon < 0 or self.tol <= 0:
            raise ValueError("invalid SVR hyperparameters")


@dataclass
class SvrModel:
    """Trained regressor: support vectors live in standardized feature space."""

    support_vectors: np.ndarray  # (m, d_kept)
    dual_coef: np.ndarray  # (m,) values of alpha_i - alpha_i*
    bias: float
    params: SvrParams
    feature_mean: np.ndarray  # (d,)
    feature_std: np.ndarray  # (d,) of the kept features' stds, 1.0 where dropped
    kept: np.ndarray  # (d,) bool mask of non-degenerate features
    kkt_residual: float = 0.0

    def standardize(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        z = (x - self.feature_mean) / self.feature_std
        return z[:, self.kept]


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """k(u, v) = exp(-gamma ||u - v||^2) for row sets a (m, d) and b (n, d)."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    sq = np.sum(a**2, axis=1)[:, None] + np.sum(b**2, axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _smo_solve(
    kernel: np.ndarray, y: np.ndarray, params: SvrParams
) -> tuple[np.ndarray, float, float, int]:
    """Solve the epsilon-SVR dual on a precomputed kernel matrix.

    Works on z = [alpha; alpha*] with signs u = [+1...; -1...]; the KKT
    residual is the violating-pair gap max_{I_up}(-uG) - min_{I_low}(-uG).
    Returns (theta, bias, residual, iterations).
    """
    n = y.size
    box, eps = params.box, params.epsilon
    u = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([eps - y, eps + y])
    z = np.zeros(2 * n)
    grad = p.copy()

    def q_column(t: int) -> np.ndarray:
        # Q[:, t] = u * u_t * K[s % n, t % n] over s = 0..2n-1
        k_row = kernel[t % n]
        return u * (u[t] * np.concatenate([k_row, k_row]))

    iterations = 0
    while True:
        score = -u * grad
        in_up = np.where(u > 0, z < box, z > 0)
        in_low = np.where(u > 0, z > 0, z < box)
        up_scores = np.where(in_up, score, -np.inf)
        low_scores = np.where(in_low, score, np.inf)
        i = int(np.argmax(up_scores))
        j = int(np.argmin(low_scores))
        residual = up_scores[i] - low_scores[j]
        if residual <= params.tol:
            break
        if iterations >= params.max_iter:
            raise ConvergenceError(float(residual), iterations)
        iterations += 1

        q_i, q_j = q_column(i), q_column(j)
        z_i_old, z_j_old = z[i], z[j]
        if u[i] != u[j]:
            quad = kernel[i % n, i % n] + kernel[j % n, j % n] + 2.0 * q_i[j]
            quad = max(quad, TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = z_i_old - z_j_old
            z[i] = z_i_old + delta
            z[j] = z_j_old + delta
            if diff > 0:
                if z[j] < 0:
                    z[j] = 0.0
                    z[i] = diff
            else:
                if z[i] < 0:
                    z[i] = 0.0
                    z[j] = -diff
            if diff > 0:
                if z[i] > box:
                    z[i] = box
                    z[j] = box - diff
            else:
                if z[j] > box:
                    z[j] = box
                    z[i] = box + diff
        else:
            quad = kernel[i % n, i % n] + kernel[j % n, j % n] - 2.0 * q_i[j]
            quad = max(quad, TAU)
            delta = (grad[i] - grad[j]) / quad
            total = z_i_old + z_j_old
            z[i] = z_i_old - delta
            z[j] = z_j_old + delta
            if total > box:
                if z[i] > box:
                    z[i] = box
                    z[j] = total - box
            else:
                if z[j] < 0:
                    z[j] = 0.0
                    z[i] = total
            if total > box:
                if z[j] > box:
                    z[j] = box
                    z[i] = total - box
            else:
                if z[i] < 0:
                    z[i] = 0.0
                    z[j] = total

        grad += q_i * (z[i] - z_i_old) + q_j * (z[j] - z_j_old)

    # Bias from the KKT conditions: average -u*G over free variables when any
    # exist, otherwise the midpoint of the violating-pair bounds.
    score = -u * grad
    free = (z > 0) & (z < box)
    if np.any(free):
        bias = float(np.mean(score[free]))
    else:
        in_up = np.where(u > 0, z < box, z > 0)
        in_low = np.where(u > 0, z > 0, z < box)
        hi = np.max(np.where(in_up, score, -np.inf))
        lo = np.min(np.where(in_low, score, np.inf))
        bias = float((hi + lo) / 2.0)

    theta = z[:n] - z[n:]
    return theta, bias, float(max(residual, 0.0)), iterations


def svr_train(X: np.ndarray, y: np.ndarray, params: SvrParams = SvrParams()) -> SvrModel:
    """Train an epsilon-SVR on rows X (n, d) with targets y (n,).

    Standardizes features internally (z-score with training statistics,
    constant features dropped) and solves the dual to KKT residual below
    params.tol. Deterministic: no randomness anywhere in the solver.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.shape[0] != y.size:
        raise ValueError(f"row mismatch: X has {X.shape[0]} rows, y has {y.size}")
    if X.shape[0] < 1:
        raise ValueError("need at least one training row")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite training data")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    kept = std > 1e-12
    safe_std = np.where(kept, std, 1.0)
    Xs = ((X - mean) / safe_std)[:, kept]

    kernel = rbf_kernel(Xs, Xs, params.gamma)
    theta, bias, residual, _ = _smo_solve(kernel, y, params)

    support = np.abs(theta) > 0
    return SvrModel(
        support_vectors=Xs[support].copy(),
        dual_coef=theta[support].copy(),
        bias=bias,
        params=params,
        feature_mean=mean,
        feature_std=safe_std,
        kept=kept,
        kkt_residual=residual,
    )


def svr_predict(model: SvrModel, x: np.ndarray) -> float | np.ndarray:
    """f(x) = sum_i theta_i k(s_i, x_std) + b. Accepts one vector or (n, d) rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xs = model.standardize(x)
    if model.support_vectors.shape[0] == 0:
        out = np.full(xs.shape[0], model.bias)
    else:
        k = rbf_kernel(xs, model.support_vectors, model.params.gamma)
        out = k @ model.dual_coef + model.bias
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# cross-validated grid search
# ---------------------------------------------------------------------------


def grid_search(
    X: np.ndarray,
    y: np.ndarray,
    grid: dict = DEFAULT_GRID,
    folds: int = 5,
    seed: int = 0,
) -> SvrParams:
    """Pick (box, gamma, epsilon) minimizing k-fold cross-validated RMSE.

    Folds come from a seeded permutation, identical for every grid point.
    Ties break toward smaller box, then larger epsilon, then grid order.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = y.size
    if n < 2:
        raise ValueError("grid search needs at least 2 rows")
    folds = max(2, min(folds, n))
    order = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=int)
    fold_of[order] = np.arange(n) % folds

    combos = list(itertools.product(grid["box"], grid["gamma"], grid["epsilon"]))
    best_key: tuple | None = None
    best: SvrParams | None = None
    for index, (box, gamma, eps) in enumerate(combos):
        params = SvrParams(box=box, gamma=gamma, epsilon=eps)
        fold_rmse = []
        for f in range(folds):
            test = fold_of == f
            model = svr_train(X[~test], y[~test], params)
            pred = svr_predict(model, X[test])
            fold_rmse.append(float(np.sqrt(np.mean((pred - y[test]) ** 2))))
        key = (float(np.mean(fold_rmse)), box, -eps, index)
        if best_key is None or key < best_key:
            best_key = key
            best = params
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

MODEL_FORMAT = "tmqa-svr-v1"


def save_svr(path: str | Path, model: SvrModel) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "params": {
            "box": model.params.box,
            "gamma": model.params.gamma,
            "epsilon": model.params.epsilon,
            "tol": model.params.tol,
            "max_iter": model.params.max_iter,
        },
        "support_vectors": model.support_vectors.tolist(),
        "dual_coef": model.dual_coef.tolist(),
        "bias": model.bias,
        "feature_mean": model.feature_mean.tolist(),
        "feature_std": model.feature_std.tolist(),
        "kept": model.kept.astype(int).tolist(),
        "kkt_residual": model.kkt_residual,
    }
    Path(path).write_text(json.dumps(doc), encoding="ascii")


def load_svr(path: str | Path) -> SvrModel:
    doc = json.loads(Path(path).read_text(encoding="ascii"))
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unrecognized SVR model format {doc.get('format')!r}")
    kept = np.array(doc["kept"], dtype=bool)
    sv = np.array(doc["support_vectors"], dtype=np.float64)
    return SvrModel(
        support_vectors=sv.reshape(-1, int(kept.sum())),
        dual_coef=np.array(doc["dual_coef"], dtype=np.float64),
        bias=float(doc["bias"]),
        params=SvrParams(**doc["params"]),
        feature_mean=np.array(doc["feature_mean"], dtype=np.float64),
        feature_std=np.array(doc["feature_std"], dtype=np.float64),
        kept=kept,
        kkt_residual=float(doc["kkt_residual"]),
    )
