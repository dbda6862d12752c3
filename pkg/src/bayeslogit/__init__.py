"""Bayesian logistic regression: NUTS sampling, diagnostics, and analysis."""

from .analysis import (
    Decision,
    DecisionTable,
    HpdInterval,
    HypothesisThresholds,
    MarginalEffectSample,
    OddsChangeDraws,
    SummaryStats,
    Verdict,
    decide,
    decision_table,
    hpd,
    marginal_effect,
    marginal_effect_distribution,
    odds_change,
    omega,
    posterior_predictive,
    summary,
)
from .data import (
    CategoricalSpec,
    DataError,
    Dataset,
    RawTable,
    Schema,
    encode,
    load_table,
    split,
)
from .diagnostics import (
    DEGENERATE,
    Degenerate,
    DiagnosticsReport,
    autocorrelation,
    diagnose,
    divergence_count,
    ess_bulk,
    ess_tail,
    rank_histogram,
    split_rank_rhat,
)
from .evaluation import (
    AucReport,
    Forest,
    ForestConfig,
    RocCurve,
    auc,
    compare,
    forest_fit,
    grid_search,
    roc,
)
from .model import (
    ModelSpec,
    grad_log_posterior,
    log_likelihood,
    log_posterior,
    log_prior,
    make_target,
    sigmoid,
)
from .sampler import (
    ChainConfig,
    ChainResult,
    NumericError,
    PosteriorDraws,
    StepSizeAdapter,
    adapt_step_size,
    leapfrog,
    nuts_draw,
    run_chains,
    sample,
)
from .synth import (
    AttritionSpec,
    BiasReport,
    Covariate,
    SynthCohort,
    SynthConfig,
    bias_probe,
    generate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
