"""Synthetic two-wave cohorts with known coefficients and attrition.

Outcomes follow the logistic model exactly, so every downstream estimator can
be validated against ground truth.  Attrition (loss of rows between waves)
comes in four flavors: none, completely random, driven by observed covariates
(under which the conditional outcome law among retained rows matches the full
population), or depending directly on the outcome (which biases estimates and
is what ``bias_probe`` quantifies).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .model import ModelSpec, sigmoid
from .sampler import ChainConfig, run_chains


@dataclass(frozen=True)
class Covariate:
    """One design-matrix block: standard normal, Bernoulli, or categorical.

    A categorical block with m levels expands to m-1 indicators; the first
    level is the omitted baseline.
    """

    kind: str
    p: float = 0.5
    probs: tuple[float, ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("normal", "binary", "categorical"):
            raise ValueError(f"unknown covariate kind {self.kind!r}")
        if self.kind == "binary" and not 0.0 <= self.p <= 1.0:
            raise ValueError("binary probability must lie in [0, 1]")
        if self.kind == "categorical":
            probs = tuple(float(v) for v in self.probs)
            if len(probs) < 2 or any(v < 0 for v in probs) or abs(sum(probs) - 1.0) > 1e-9:
                raise ValueError("categorical probs must be >= 0 and sum to 1")
            object.__setattr__(self, "probs", probs)

    @property
    def width(self) -> int:
        return len(self.probs) - 1 if self.kind == "categorical" else 1

    def column_names(self, index: int) -> list[str]:
        base = self.name or f"x{index}"
        if self.kind == "categorical":
            return [f"{base}:level{j}" for j in range(1, len(self.probs))]
        return [base]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "normal":
            return rng.standard_normal(n)[:, None]
        if self.kind == "binary":
            return (rng.random(n) < self.p).astype(float)[:, None]
        levels = rng.choice(len(self.probs), size=n, p=np.asarray(self.probs))
        block = np.zeros((n, len(self.probs) - 1))
        for j in range(1, len(self.probs)):
            block[:, j - 1] = levels == j
        return block


@dataclass(frozen=True)
class AttritionSpec:
    """How rows go missing between waves.

    ``z_columns`` index the design matrix (0 is the intercept), ``gamma``
    are the matching coefficients in the dropout equation, and
    ``outcome_coef`` is the direct outcome dependence used by mode ``on_y``.
    """

    mode: str = "none"
    q: float = 0.0
    z_columns: tuple[int, ...] = ()
    gamma: tuple[float, ...] = ()
    outcome_coef: float = 0.0

    def __post_init__(self):
        if self.mode not in ("none", "random", "on_z", "on_y"):
            raise ValueError(f"unknown attrition mode {self.mode!r}")
        if self.mode == "random" and not 0.0 <= self.q < 1.0:
            raise ValueError("dropout probability must lie in [0, 1)")
        if self.mode in ("on_z", "on_y"):
            if len(self.z_columns) != len(self.gamma) or not self.z_columns:
                raise ValueError("z_columns and gamma must be non-empty and aligned")
        object.__setattr__(self, "z_columns", tuple(int(c) for c in self.z_columns))
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))


@dataclass(frozen=True, eq=False)
class SynthConfig:
    n: int
    theta_true: np.ndarray
    covariates: tuple[Covariate, ...]
    attrition: AttritionSpec = AttritionSpec()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "theta_true", np.asarray(self.theta_true, dtype=float))
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if self.n < 1:
            raise ValueError("n must be positive")
        dim = 1 + sum(c.width for c in self.covariates)
        if self.theta_true.shape != (dim,):
            raise ValueError(
                f"theta_true must have length {dim} (intercept + covariate columns)"
            )
        if self.attrition.mode in ("on_z", "on_y"):
            if any(not 0 <= c < dim for c in self.attrition.z_columns):
                raise ValueError("z_columns out of range")

    @property
    def feature_names(self) -> tuple[str, ...]:
        names = ["intercept"]
        for i, cov in enumerate(self.covariates):
            names.extend(cov.column_names(i))
        return tuple(names)


@dataclass(frozen=True, eq=False)
class SynthCohort:
    """Full population, dropout flags, retained subsample, and the truth."""

    full: Dataset
    attrition_flags: np.ndarray
    observed: Dataset
    theta_true: np.ndarray
    true_probabilities: np.ndarray

    @property
    def retention(self) -> float:
        return float(np.mean(self.attrition_flags == 0))


def generate(cfg: SynthConfig) -> SynthCohort:
    """Sample covariates, outcomes, and dropout flags; bit-reproducible per seed.

    Outcomes are Bernoulli(sigmoid(x^T theta_true)).  Under modes none,
    random, and on_z the outcome law conditional on x is the same among
    retained rows as in the full population; under on_y it is not.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    blocks = [np.ones((n, 1))]
    for cov in cfg.covariates:
        blocks.append(cov.sample(rng, n))
    X = np.hstack(blocks)
    p_true = sigmoid(X @ cfg.theta_true)
    y = (rng.random(n) < p_true).astype(float)

    att = cfg.attrition
    if att.mode == "none":
        flags = np.zeros(n, dtype=int)
    elif att.mode == "random":
        flags = (rng.random(n) < att.q).astype(int)
    else:
        eta = X[:, list(att.z_columns)] @ np.asarray(att.gamma)
        if att.mode == "on_y":
            eta = eta + att.outcome_coef * y
        flags = (rng.random(n) < sigmoid(eta)).astype(int)

    names = cfg.feature_names
    full = Dataset(X, y, names, {}, 0)
    keep = flags == 0
    if not np.any(keep):
        raise ValueError("attrition removed every row")
    observed = Dataset(X[keep], y[keep], names, {}, 0)
    return SynthCohort(full, flags, observed, cfg.theta_true.copy(), p_true)


@dataclass(frozen=True, eq=False)
class BiasReport:
    """Mean posterior-mean deviation from the truth across replications."""

    feature_names: tuple[str, ...]
    bias: np.ndarray
    standard_error: np.ndarray
    n_replications: int


def bias_probe(cfg: SynthConfig, chains: ChainConfig,
               model_spec: ModelSpec | None = None,
               n_replications: int = 20) -> BiasReport:
    """Measure estimation bias induced by outcome-dependent attrition.

    Regenerates the cohort and refits the posterior ``n_replications`` times
    with derived seeds, each time on the retained rows only, and reports the
    mean deviation of posterior means from ``theta_true`` with a standard
    error per coefficient.  With ``outcome_coef == 0`` the mode reduces to
    covariate-driven attrition and the bias sits at Monte-Carlo noise level.
    """
    if cfg.attrition.mode != "on_y":
        raise ValueError("bias_probe expects attrition mode 'on_y'")
    if n_replications < 2:
        raise ValueError("need at least 2 replications")
    dim = cfg.theta_true.shape[0]
    spec = model_spec or ModelSpec.default(dim)
    deviations = np.zeros((n_replications, dim))
    rep_seeds = np.random.SeedSequence(cfg.seed).spawn(n_replications)
    for r, seq in enumerate(rep_seeds):
        data_seed, chain_seed = (int(s.generate_state(1)[0]) for s in seq.spawn(2))
        cohort = generate(replace(cfg, seed=data_seed))
        draws = run_chains(cohort.observed, spec, replace(chains, seed=chain_seed))
        deviations[r] = draws.flat().mean(axis=0) - cfg.theta_true
    bias = deviations.mean(axis=0)
    se = deviations.std(axis=0, ddof=1) / np.sqrt(n_replications)
    return BiasReport(cfg.feature_names, bias, se, n_replications)
