"""Correlation metrics and the repeated-split protocol."""

import numpy as np
import pytest

from tmqa.evaluation import EvalSummary, plcc, rmse, split_protocol, srocc


class TestPlcc:
    def test_perfect_linear_relation(self):
        x = np.arange(10.0)
        assert plcc(x, 2 * x + 3) == pytest.approx(1.0, abs=1e-12)

    def test_perfect_anticorrelation(self):
        assert plcc([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)

    def test_worked_example(self):
        # x=[1,2,3], y=[1,2,2]: cov sum = 1, sqrt(2 * 2/3) denominator
        expected = 1.0 / (np.sqrt(2.0) * np.sqrt(2.0 / 3.0))
        assert plcc([1, 2, 3], [1, 2, 2]) == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(0.8660, abs=1e-4)

    def test_affine_invariance(self):
        rng = np.random.default_rng(0)
        x, y = rng.standard_normal((2, 50))
        assert plcc(5 * x - 2, y) == pytest.approx(plcc(x, y), abs=1e-12)

    def test_zero_variance_raises(self):
        with pytest.raises(ValueError, match="degenerate"):
            plcc([1, 1, 1], [1, 2, 3])

    def test_bounded(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            x, y = rng.standard_normal((2, 8))
            assert -1.0 - 1e-12 <= plcc(x, y) <= 1.0 + 1e-12


class TestSrocc:
    def test_identical_order(self):
        assert srocc([1, 5, 9], [2, 3, 10]) == pytest.approx(1.0, abs=1e-12)

    def test_worked_example(self):
        # x=[1,2,3], y=[1,3,2]: d = (0,1,1), 1 - 6*2/(3*8) = 0.5
        assert srocc([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-12)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(2)
        x, y = rng.standard_normal((2, 40))
        assert srocc(x, np.exp(y)) == pytest.approx(srocc(x, y), abs=1e-12)

    def test_matches_tie_free_closed_form(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            n = int(rng.integers(5, 30))
            x = rng.permutation(n).astype(float)
            y = rng.permutation(n).astype(float)
            rx = np.argsort(np.argsort(x)) + 1
            ry = np.argsort(np.argsort(y)) + 1
            d2 = np.sum((rx - ry) ** 2)
            closed = 1 - 6 * d2 / (n * (n**2 - 1))
            assert srocc(x, y) == pytest.approx(closed, abs=1e-9)

    def test_handles_ties_with_average_ranks(self):
        # [1,1,2] vs [1,2,3]: ranks x = (1.5,1.5,3); plcc of ranks
        got = srocc([1, 1, 2], [1, 2, 3])
        expected = plcc([1.5, 1.5, 3.0], [1.0, 2.0, 3.0])
        assert got == pytest.approx(expected, abs=1e-12)


class TestRmse:
    def test_identical_is_zero(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_worked_example(self):
        assert rmse([0, 0], [3, 4]) == pytest.approx(np.sqrt(12.5), abs=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(4)
        x, y = rng.standard_normal((2, 20))
        assert rmse(x, y) == rmse(y, x)


SMALL_GRID = {"box": (10.0, 100.0, 1000.0), "gamma": (0.0625, 0.25, 1.0), "epsilon": (0.1,)}


class TestSplitProtocol:
    def make_linear_data(self, n=30, seed=5):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n, 4))
        mos = 50.0 + 20.0 * X[:, 0] - 10.0 * X[:, 1]  # exact function of 2 features
        return X, mos

    def test_split_sizes(self):
        X, mos = self.make_linear_data(n=10)
        summary = split_protocol(X, mos, trials=1, grid=SMALL_GRID, seed=1, folds=2)
        assert summary.trials == 1 and len(summary.plcc_values) == 1
        # 10 rows, fraction 0.8 -> 8 train / 2 test (test metrics exist)
        assert np.isfinite(summary.rmse_values[0])

    def test_deterministic_given_seed(self):
        X, mos = self.make_linear_data()
        a = split_protocol(X, mos, trials=3, grid=SMALL_GRID, seed=7, folds=3)
        b = split_protocol(X, mos, trials=3, grid=SMALL_GRID, seed=7, folds=3)
        assert a.to_dict() == b.to_dict()

    def test_noiseless_linear_mos_gives_high_plcc(self):
        X, mos = self.make_linear_data(n=60)
        summary = split_protocol(X, mos, trials=10, grid=SMALL_GRID, seed=3, folds=3)
        assert summary.mean_plcc > 0.99

    def test_too_few_rows_raises(self):
        X, mos = self.make_linear_data(n=8)
        with pytest.raises(ValueError, match="at least 10"):
            split_protocol(X, mos, trials=1, grid=SMALL_GRID)

    def test_summary_serialization(self, tmp_path):
        X, mos = self.make_linear_data(n=20)
        summary = split_protocol(X, mos, trials=2, grid=SMALL_GRID, seed=2, folds=2)
        path = tmp_path / "summary.json"
        summary.save(path)
        assert path.exists()
        table = summary.table()
        assert "plcc" in table and "mean" in table
        doc = summary.to_dict()
        assert set(doc["mean"]) == {"plcc", "srocc", "rmse"}
        assert all(-1 <= v <= 1 for v in doc["per_trial"]["plcc"])
