"""Out-of-sample comparison harness: ROC curves, AUC, and a tuned forest.

The forest benchmark grows axis-aligned Gini trees on per-tree subsamples
(bootstrap or without replacement) and averages leaf positive-class
fractions, so its scores are continuous and ROC-ready.  Tree growth is
delegated to scikit-learn's CART; subsampling, aggregation, cross-validated
grid search, and the comparison against the posterior-predictive classifier
are implemented here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from sklearn.tree import DecisionTreeClassifier

from .analysis import posterior_predictive
from .data import Dataset
from .sampler import PosteriorDraws

FULL_GRID = {
    "n_trees": (50, 100, 150, 200, 250, 300, 400, 500, 600),
    "m_features": (2, 3, 4, 5, 6, 7),
    "min_node": (1, 3, 5, 10, 15, 20, 30),
    "sample_fraction": (0.5, 0.6, 0.8, 1.0),
    "with_replacement": (True, False),
}

REDUCED_GRID = {
    "n_trees": (50, 200),
    "m_features": (2, 4),
    "min_node": (1, 10),
    "sample_fraction": (0.6, 1.0),
    "with_replacement": (True, False),
}


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Operating points swept over descending score thresholds.

    Starts at (0, 0) and ends at (1, 1); tied scores collapse into one step.
    ``thresholds[i]`` is the cutoff producing point i (inf for the origin).
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        for field in ("fpr", "tpr", "thresholds"):
            object.__setattr__(self, field, np.asarray(getattr(self, field), dtype=float))


@dataclass(frozen=True, eq=False)
class AucReport:
    model: str
    auc: float
    roc: RocCurve


@dataclass(frozen=True)
class ForestConfig:
    """Forest hyperparameters; grid_search draws them from the grids above."""

    n_trees: int = 200
    m_features: int = 2
    min_node: int = 1
    sample_fraction: float = 1.0
    with_replacement: bool = True

    def __post_init__(self):
        if self.n_trees < 1 or self.m_features < 1 or self.min_node < 1:
            raise ValueError("n_trees, m_features, and min_node must be >= 1")
        if not 0.0 < self.sample_fraction <= 1.0:
            raise ValueError("sample_fraction must lie in (0, 1]")


class Forest:
    """Bagged Gini trees scoring the positive-class probability.

    Trees are grown on per-feature dense ranks of the training values, which
    makes the fitted model exactly invariant under strictly monotone
    transforms of any covariate: the candidate partitions (and hence the
    Gini-optimal splits) depend only on value order, never on spacing.
    """

    def __init__(self, trees, unique_values: list[np.ndarray]):
        self.trees = list(trees)
        self.unique_values = unique_values
        self.n_features = len(unique_values)

    def _to_ranks(self, X: np.ndarray) -> np.ndarray:
        ranks = np.empty_like(X)
        for j, uniques in enumerate(self.unique_values):
            ranks[:, j] = np.searchsorted(uniques, X[:, j], side="right")
        return ranks

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError("X columns do not match the fitted forest")
        ranks = self._to_ranks(X)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            proba = tree.predict_proba(ranks)
            classes = tree.classes_
            if proba.shape[1] == 1:
                total += float(classes[0])
            else:
                total += proba[:, int(np.nonzero(classes == 1)[0][0])]
        return total / len(self.trees)


def roc(scores, labels) -> RocCurve:
    """ROC curve over descending unique score thresholds."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both classes must be present")
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    group_ends = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tp = np.cumsum(y)[group_ends]
    fp = np.cumsum(1.0 - y)[group_ends]
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[np.inf, s[group_ends]]
    return RocCurve(fpr, tpr, thresholds)


def auc_from_roc(curve: RocCurve) -> float:
    """Trapezoidal area under an ROC curve."""
    return float(np.trapezoid(curve.tpr, curve.fpr))


def auc(scores, labels) -> float:
    """Area under the ROC curve; equals the rank statistic
    P(score_1 > score_0) + 0.5 P(tie) over positive/negative pairs."""
    return auc_from_roc(roc(scores, labels))


def forest_fit(train: Dataset, cfg: ForestConfig, seed: int) -> Forest:
    """Grow ``cfg.n_trees`` trees on per-tree subsamples of the training set.

    Each tree samples ``m_features`` candidates per split, splits by Gini
    impurity decrease, and stops recursing at ``min_node`` rows or purity.
    Deterministic for a fixed seed.
    """
    X, y = train.X, train.y
    n = train.n
    if cfg.m_features > X.shape[1]:
        raise ValueError(
            f"m_features={cfg.m_features} exceeds the {X.shape[1]} available covariates"
        )
    uniques = [np.unique(X[:, j]) for j in range(X.shape[1])]
    forest = Forest([], uniques)
    ranks = forest._to_ranks(X)
    n_sub = max(1, int(round(cfg.sample_fraction * n)))
    for child in np.random.SeedSequence(seed).spawn(cfg.n_trees):
        rng = np.random.Generator(np.random.PCG64(child))
        if cfg.with_replacement:
            idx = rng.integers(0, n, size=n_sub)
        else:
            idx = rng.permutation(n)[:n_sub]
        tree = DecisionTreeClassifier(
            criterion="gini",
            max_features=cfg.m_features,
            min_samples_split=cfg.min_node + 1,
            random_state=int(rng.integers(2**31 - 1)),
        )
        tree.fit(ranks[idx], y[idx])
        forest.trees.append(tree)
    return forest


def cv_folds(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Shuffled exact partition of range(n) into ``folds`` index blocks."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < folds:
        raise ValueError("more folds than rows")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0])))
    return np.array_split(rng.permutation(n), folds)


def cv_score(train: Dataset, cfg: ForestConfig, fold_indices, metric, seed: int) -> float:
    """Mean held-fold metric of a forest config over a fixed fold partition."""
    scores = []
    for f, held in enumerate(fold_indices):
        mask = np.ones(train.n, dtype=bool)
        mask[held] = False
        fold_train = Dataset(train.X[mask], train.y[mask], train.feature_names,
                             dict(train.standardization), 0)
        fold_seed = int(np.random.SeedSequence([seed, 1, f]).generate_state(1)[0])
        forest = forest_fit(fold_train, cfg, fold_seed)
        scores.append(metric(forest.predict(train.X[held]), train.y[held]))
    return float(np.mean(scores))


def iter_grid(grid: dict):
    """Configs in lexicographic order of the listed grids."""
    keys = ("n_trees", "m_features", "min_node", "sample_fraction", "with_replacement")
    for combo in itertools.product(*(grid[k] for k in keys)):
        yield ForestConfig(*combo)


def grid_search(train: Dataset, folds: int = 3, metric=None, seed: int = 0,
                reduced: bool = False, grid: dict | None = None) -> ForestConfig:
    """Exhaustive sweep of the tuning grids, maximizing mean fold AUC.

    Ties keep the earliest config in lexicographic grid order.  Cells asking
    for more split candidates than available covariates are skipped.  A custom
    ``grid`` dict overrides the built-in full/reduced grids.
    """
    metric = metric or auc
    fold_indices = cv_folds(train.n, folds, seed)
    if grid is None:
        grid = REDUCED_GRID if reduced else FULL_GRID
    best_cfg = None
    best_score = -np.inf
    for cfg in iter_grid(grid):
        if cfg.m_features > train.dim:
            continue
        score = cv_score(train, cfg, fold_indices, metric, seed)
        if score > best_score:
            best_cfg, best_score = cfg, score
    if best_cfg is None:
        raise ValueError("no feasible grid cell for this dataset")
    return best_cfg


def compare(train: Dataset, test: Dataset, pd: PosteriorDraws,
            cfg: ForestConfig, seed: int = 0) -> tuple[AucReport, AucReport]:
    """Score the test set with both models and report ROC/AUC for each."""
    logit_scores = posterior_predictive(test.X, pd)
    forest = forest_fit(train, cfg, seed)
    forest_scores = forest.predict(test.X)
    reports = []
    for name, scores in (("Logistic Regression", logit_scores),
                         ("Random Forest", forest_scores)):
        curve = roc(scores, test.y)
        reports.append(AucReport(name, auc_from_roc(curve), curve))
    return reports[0], reports[1]
