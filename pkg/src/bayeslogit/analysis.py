"""Posterior summaries and decision analysis.

Four result layers over a matrix of posterior draws: shortest-interval HPD
summaries, odds-change distributions exp(delta * theta_j) - 1, a three-way
hypothesis verdict per coefficient driven by odds thresholds, and
sample-averaged marginal effects of single covariates.  The posterior
predictive classifier lives here too.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .data import Dataset
from .model import sigmoid
from .sampler import PosteriorDraws

DEFAULT_D_VALUES = (0.01, 0.02, 0.03, 0.04, 0.05)

_PREDICTIVE_BLOCK = 4_000_000  # cap on rows*draws handled per chunk


@dataclass(frozen=True)
class HpdInterval:
    """Shortest interval holding the requested posterior mass."""

    lower: float
    upper: float
    mass: float = 0.95

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower exceeds upper")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def width(self) -> float:
        return self.upper - self.lower


class SummaryStats(NamedTuple):
    mean: float
    q25: float
    median: float
    q75: float


@dataclass(frozen=True, eq=False)
class OddsChangeDraws:
    """Draws of the relative odds change exp(delta * theta_j) - 1."""

    name: str
    delta: float
    draws: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "draws", np.asarray(self.draws, dtype=float))


class Verdict(Enum):
    NEGATIVE = "-"
    NULL = "0"
    POSITIVE = "+"

    @property
    def symbol(self) -> str:
        return self.value


@dataclass(frozen=True)
class HypothesisThresholds:
    """Null-region bounds on the odds change implied by a probability shift.

    ``epsilon1`` is the odds change from lowering the baseline rate ``p`` by
    ``d`` points, ``epsilon2`` from raising it by ``d`` points.
    """

    p: float
    d: float
    epsilon1: float
    epsilon2: float

    def __post_init__(self):
        if not (self.epsilon1 < 0.0 < self.epsilon2):
            raise ValueError("need epsilon1 < 0 < epsilon2")
        if not 0.0 < self.p - abs(self.d):
            raise ValueError("p - |d| must stay positive")
        if not self.p + abs(self.d) < 1.0:
            raise ValueError("p + |d| must stay below 1")

    @classmethod
    def from_probability_shift(cls, p: float, d: float) -> "HypothesisThresholds":
        d = abs(d)
        return cls(p, d, omega(p, -d), omega(p, d))


@dataclass(frozen=True)
class Decision:
    """Verdict plus the empirical probabilities of the three regions."""

    verdict: Verdict
    region_probabilities: tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class DecisionTable:
    """Verdict per (coefficient, |d|) pair, paper-table shaped."""

    feature_names: tuple[str, ...]
    d_values: tuple[float, ...]
    verdicts: tuple[tuple[Verdict, ...], ...]

    def symbol_rows(self) -> list[list[str]]:
        return [
            [name, *(v.symbol for v in row)]
            for name, row in zip(self.feature_names, self.verdicts)
        ]


@dataclass(frozen=True, eq=False)
class MarginalEffectSample:
    """Posterior-mean marginal effect of one covariate, per sample row."""

    name: str
    effects: np.ndarray


def hpd(draws, mass: float = 0.95) -> HpdInterval:
    """Shortest window of ceil(mass * L) consecutive order statistics.

    Ties in width resolve to the lowest starting order statistic.  Valid for
    unimodal marginals.
    """
    x = np.sort(np.asarray(draws, dtype=float))
    n = x.size
    if n < 10:
        raise ValueError("need at least 10 draws")
    if not 0.0 < mass < 1.0:
        raise ValueError("mass must lie in (0, 1)")
    m = int(np.ceil(mass * n))
    widths = x[m - 1:] - x[: n - m + 1]
    i = int(np.argmin(widths))
    return HpdInterval(float(x[i]), float(x[i + m - 1]), mass)


def summary(draws) -> SummaryStats:
    """Mean and quartiles (linear-interpolation quantile rule)."""
    x = np.asarray(draws, dtype=float)
    if x.size < 1:
        raise ValueError("need at least one draw")
    q25, med, q75 = np.quantile(x, [0.25, 0.5, 0.75])
    return SummaryStats(float(np.mean(x)), float(q25), float(med), float(q75))


def odds_change(theta_j_draws, delta: float = 1.0, name: str = "") -> OddsChangeDraws:
    """Pointwise transform exp(delta * theta_j) - 1 of coefficient draws."""
    if not np.isfinite(delta):
        raise ValueError("delta must be finite")
    draws = np.expm1(delta * np.asarray(theta_j_draws, dtype=float))
    return OddsChangeDraws(name, float(delta), draws)


def omega(p: float, d: float) -> float:
    """Relative odds change when the baseline probability p shifts by d."""
    shifted = p + d
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not 0.0 < shifted < 1.0:
        raise ValueError("p + d must lie in (0, 1)")
    return float((shifted / (1.0 - shifted)) / (p / (1.0 - p)) - 1.0)


def decide(oc: OddsChangeDraws, th: HypothesisThresholds) -> Decision:
    """Argmax verdict over the three regions of the odds-change draws.

    Probabilities are exact counting fractions and sum to 1.  Ties involving
    the null region resolve to Null; an exact Negative/Positive tie resolves
    to Negative.
    """
    draws = oc.draws
    n = draws.size
    n_neg = int(np.count_nonzero(draws < th.epsilon1))
    n_pos = int(np.count_nonzero(draws > th.epsilon2))
    n_null = n - n_neg - n_pos
    if n_null >= n_neg and n_null >= n_pos:
        verdict = Verdict.NULL
    elif n_neg >= n_pos:
        verdict = Verdict.NEGATIVE
    else:
        verdict = Verdict.POSITIVE
    return Decision(verdict, (n_neg / n, n_null / n, n_pos / n))


def decision_table(pd: PosteriorDraws, p: float,
                   d_values=DEFAULT_D_VALUES, delta: float = 1.0) -> DecisionTable:
    """One verdict per (coefficient, |d|) scenario.

    The null region widens with |d|, so a Null verdict persists as |d| grows.
    """
    flat = pd.flat()
    rows = []
    for j, name in enumerate(pd.feature_names):
        oc = odds_change(flat[:, j], delta, name)
        rows.append(tuple(
            decide(oc, HypothesisThresholds.from_probability_shift(p, d)).verdict
            for d in d_values
        ))
    return DecisionTable(pd.feature_names, tuple(float(d) for d in d_values), tuple(rows))


def posterior_predictive(x, pd: PosteriorDraws):
    """Draw-averaged predicted probability (1/L) sum_l sigmoid(x^T theta_l).

    A single covariate vector yields a float; a matrix yields one probability
    per row.
    """
    theta = pd.flat()
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != theta.shape[1]:
            raise ValueError("x dimension does not match the draws")
        return float(np.mean(sigmoid(theta @ x)))
    if x.shape[1] != theta.shape[1]:
        raise ValueError("x dimension does not match the draws")
    total = np.zeros(x.shape[0])
    step = max(1, _PREDICTIVE_BLOCK // max(1, x.shape[0]))
    for start in range(0, theta.shape[0], step):
        block = theta[start:start + step]
        total += sigmoid(x @ block.T).sum(axis=1)
    return total / theta.shape[0]


def marginal_effect(x, pd: PosteriorDraws, j: int) -> float:
    """Derivative of the posterior predictive in coordinate j at x.

    (1/L) sum_l sigmoid(z_l)(1 - sigmoid(z_l)) theta_l[j] with z_l = x^T theta_l.
    """
    theta = pd.flat()
    if not 0 <= j < theta.shape[1]:
        raise ValueError(f"coefficient index {j} out of range")
    x = np.asarray(x, dtype=float)
    if x.shape != (theta.shape[1],):
        raise ValueError("x dimension does not match the draws")
    s = sigmoid(theta @ x)
    return float(np.mean(s * (1.0 - s) * theta[:, j]))


def marginal_effect_distribution(ds: Dataset, pd: PosteriorDraws, j: int) -> MarginalEffectSample:
    """Marginal effect of covariate j evaluated at every sample row."""
    theta = pd.flat()
    if not 0 <= j < theta.shape[1]:
        raise ValueError(f"coefficient index {j} out of range")
    if ds.dim != theta.shape[1]:
        raise ValueError("dataset dimension does not match the draws")
    n = ds.n
    effects = np.zeros(n)
    step = max(1, _PREDICTIVE_BLOCK // max(1, n))
    for start in range(0, theta.shape[0], step):
        block = theta[start:start + step]
        s = sigmoid(ds.X @ block.T)
        effects += (s * (1.0 - s)) @ block[:, j]
    effects /= theta.shape[0]
    return MarginalEffectSample(pd.feature_names[j], effects)
