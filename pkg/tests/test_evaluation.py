import numpy as np
import pytest

from bayeslogit.data import Dataset
from bayeslogit.evaluation import (
    REDUCED_GRID,
    AucReport,
    ForestConfig,
    auc,
    auc_from_roc,
    compare,
    cv_folds,
    cv_score,
    forest_fit,
    grid_search,
    iter_grid,
    roc,
)
from bayeslogit.sampler import ChainResult, PosteriorDraws


def auc_pair_oracle(scores, labels):
    """Exhaustive positive/negative pair enumeration."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = ties = 0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1
            elif sp == sn:
                ties += 1
    return (wins + 0.5 * ties) / (pos.size * neg.size)


def toy_dataset(n, seed, k=2, theta=(0.0, 1.5, -1.0)):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.standard_normal((n, k))])
    p = 1.0 / (1.0 + np.exp(-(X @ np.asarray(theta))))
    y = (rng.random(n) < p).astype(float)
    names = ("intercept",) + tuple(f"x{j}" for j in range(1, k + 1))
    return Dataset(X, y, names)


class TestRoc:
    def test_perfect_separation_passes_through_corner(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        labels = np.array([1.0, 1.0, 0.0, 0.0])
        curve = roc(scores, labels)
        points = set(zip(curve.fpr, curve.tpr))
        assert (0.0, 1.0) in points

    def test_constant_scores_give_diagonal(self):
        curve = roc(np.full(6, 0.5), np.array([1, 0, 1, 0, 1, 0], dtype=float))
        np.testing.assert_array_equal(curve.fpr, [0.0, 1.0])
        np.testing.assert_array_equal(curve.tpr, [0.0, 1.0])

    def test_endpoints_and_monotonicity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(4, 60))
            labels = rng.integers(0, 2, size=n).astype(float)
            if labels.min() == labels.max():
                labels[0] = 1.0 - labels[0]
            scores = np.round(rng.random(n), 2)  # induce ties
            curve = roc(scores, labels)
            assert curve.fpr[0] == 0.0 and curve.tpr[0] == 0.0
            assert curve.fpr[-1] == 1.0 and curve.tpr[-1] == 1.0
            assert np.all(np.diff(curve.fpr) >= 0)
            assert np.all(np.diff(curve.tpr) >= 0)
            assert curve.thresholds[0] == np.inf

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            roc(np.array([0.1, 0.2]), np.array([1.0, 1.0]))

    def test_reversed_scores_reflect_auc(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(4, 50))
            labels = rng.integers(0, 2, size=n).astype(float)
            if labels.min() == labels.max():
                labels[0] = 1.0 - labels[0]
            scores = rng.random(n)
            assert auc(-scores, labels) == pytest.approx(1.0 - auc(scores, labels), abs=1e-12)


class TestAuc:
    def test_perfect_classifier(self):
        assert auc(np.array([0.9, 0.8, 0.2]), np.array([1.0, 1.0, 0.0])) == 1.0

    def test_hand_case(self):
        scores = np.array([0.9, 0.8, 0.3, 0.1])
        labels = np.array([1.0, 0.0, 1.0, 0.0])
        assert auc(scores, labels) == pytest.approx(0.75, abs=1e-12)

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(2)
        labels = rng.integers(0, 2, size=2000).astype(float)
        scores = rng.random(2000)
        assert auc(scores, labels) == pytest.approx(0.5, abs=0.04)

    def test_matches_pair_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(4, 200))
            labels = rng.integers(0, 2, size=n).astype(float)
            if labels.min() == labels.max():
                labels[0] = 1.0 - labels[0]
            scores = np.round(rng.random(n), 1)  # heavy ties
            assert auc(scores, labels) == pytest.approx(
                auc_pair_oracle(scores, labels), abs=1e-12)


class TestForest:
    def test_pure_training_set_predicts_one(self):
        rng = np.random.default_rng(4)
        X = np.column_stack([np.ones(20), rng.standard_normal((20, 2))])
        ds = Dataset(X, np.ones(20), ("intercept", "a", "b"))
        forest = forest_fit(ds, ForestConfig(n_trees=1, m_features=2), seed=0)
        np.testing.assert_array_equal(forest.predict(X), np.ones(20))

    def test_separable_data_training_auc_one(self):
        rng = np.random.default_rng(5)
        X = np.column_stack([np.ones(100), rng.standard_normal((100, 2))])
        y = (X[:, 1] + X[:, 2] > 0).astype(float)
        ds = Dataset(X, y, ("intercept", "a", "b"))
        forest = forest_fit(ds, ForestConfig(n_trees=100, m_features=2), seed=1)
        assert auc(forest.predict(X), y) == pytest.approx(1.0, abs=1e-12)

    def test_seed_determinism(self):
        ds = toy_dataset(150, seed=6)
        cfg = ForestConfig(n_trees=30, m_features=2, min_node=3,
                           sample_fraction=0.8, with_replacement=False)
        p1 = forest_fit(ds, cfg, seed=7).predict(ds.X)
        p2 = forest_fit(ds, cfg, seed=7).predict(ds.X)
        np.testing.assert_array_equal(p1, p2)
        p3 = forest_fit(ds, cfg, seed=8).predict(ds.X)
        assert not np.array_equal(p1, p3)

    def test_too_many_features_rejected(self):
        ds = toy_dataset(50, seed=9)
        with pytest.raises(ValueError, match="m_features"):
            forest_fit(ds, ForestConfig(n_trees=5, m_features=10), seed=0)

    def test_monotone_transform_invariance(self):
        # Re-fitting on a strictly monotone transform of one covariate moves
        # the split points but leaves training-set decisions identical.
        ds = toy_dataset(120, seed=10)
        cfg = ForestConfig(n_trees=25, m_features=2, min_node=2)
        base = forest_fit(ds, cfg, seed=11).predict(ds.X)
        X2 = ds.X.copy()
        X2[:, 1] = np.exp(X2[:, 1])
        ds2 = Dataset(X2, ds.y, ds.feature_names)
        transformed = forest_fit(ds2, cfg, seed=11).predict(X2)
        np.testing.assert_array_equal(base, transformed)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ForestConfig(n_trees=0)
        with pytest.raises(ValueError):
            ForestConfig(sample_fraction=0.0)


class TestGridSearch:
    def test_folds_partition_exactly(self):
        folds = cv_folds(25, 3, seed=12)
        merged = np.sort(np.concatenate(folds))
        np.testing.assert_array_equal(merged, np.arange(25))

    def test_single_cell_grid_returns_it(self):
        ds = toy_dataset(60, seed=13)
        grid = {"n_trees": (10,), "m_features": (2,), "min_node": (5,),
                "sample_fraction": (1.0,), "with_replacement": (True,)}
        best = grid_search(ds, folds=3, seed=14, grid=grid)
        assert best == ForestConfig(10, 2, 5, 1.0, True)

    def test_selected_config_maximizes_cv_auc(self):
        ds = toy_dataset(90, seed=15)
        grid = {"n_trees": (5, 20), "m_features": (1, 2), "min_node": (1, 10),
                "sample_fraction": (1.0,), "with_replacement": (True,)}
        seed = 16
        best = grid_search(ds, folds=3, seed=seed, grid=grid)
        folds = cv_folds(ds.n, 3, seed)
        best_score = cv_score(ds, best, folds, auc, seed)
        for cfg in iter_grid(grid):
            assert best_score >= cv_score(ds, cfg, folds, auc, seed) - 1e-12

    def test_infeasible_cells_skipped(self):
        ds = toy_dataset(60, seed=17)  # 3 columns
        grid = {"n_trees": (5,), "m_features": (2, 10), "min_node": (1,),
                "sample_fraction": (1.0,), "with_replacement": (True,)}
        best = grid_search(ds, folds=3, seed=18, grid=grid)
        assert best.m_features == 2

    def test_reduced_grid_size(self):
        assert sum(1 for _ in iter_grid(REDUCED_GRID)) == 32


class TestCompare:
    def test_reports_well_formed(self):
        ds = toy_dataset(300, seed=19)
        rng = np.random.default_rng(20)
        draws = rng.standard_normal((400, 3)) * 0.3 + np.array([0.0, 1.5, -1.0])
        pd = PosteriorDraws(
            [ChainResult(draws, np.zeros(400, dtype=bool))], ds.feature_names)
        from bayeslogit.data import split

        train, test = split(ds, 0.3, seed=21)
        cfg = ForestConfig(n_trees=40, m_features=2)
        logit_report, forest_report = compare(train, test, pd, cfg, seed=22)
        for report in (logit_report, forest_report):
            assert 0.0 <= report.auc <= 1.0
            assert report.auc == pytest.approx(auc_from_roc(report.roc), abs=1e-12)
        assert logit_report.model == "Logistic Regression"
        assert forest_report.model == "Random Forest"
