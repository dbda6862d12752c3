"""MCMC convergence diagnostics over multi-chain draws.

The headline statistics are rank-based: chains are split in half, pooled,
replaced by normal scores of their ranks, and only then fed to the classic
between/within variance ratio and to the autocorrelation-sum effective sample
size (Geyer's initial monotone sequence).  Rank histograms and plain
autocorrelation functions are emitted as plot-ready tables.

Zero-variance inputs are reported as the typed ``DEGENERATE`` sentinel rather
than NaN so callers and tests can branch on them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from .sampler import PosteriorDraws


class Degenerate:
    """Sentinel for statistics undefined on zero-variance draws."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "degenerate"


DEGENERATE = Degenerate()


def _as_chain_matrix(chains) -> np.ndarray:
    arr = np.asarray(chains, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("chains must be a (n_chains, n_draws) matrix")
    return arr


def _split_halves(arr: np.ndarray) -> np.ndarray:
    """Halve every chain (dropping a trailing draw if odd), doubling the count."""
    n = arr.shape[1]
    half = n // 2
    return np.vstack([arr[:, :half], arr[:, half:2 * half]])


def _rank_normalize(arr: np.ndarray) -> np.ndarray:
    """Pooled fractional ranks mapped through the normal quantile function."""
    flat = arr.reshape(-1)
    ranks = rankdata(flat, method="average")
    z = ndtri((ranks - 0.375) / (flat.size + 0.25))
    return z.reshape(arr.shape)


def _is_constant(arr: np.ndarray) -> bool:
    return bool(np.all(arr == arr.reshape(-1)[0]))


def split_rank_rhat(chains):
    """Split rank-normalized potential scale reduction factor.

    Chains are split in half; the pooled halves are rank-normalized, then the
    classic sqrt(((N-1)/N * W + B/N) / W) is computed over the transformed
    halves.  The estimator noise can push the raw ratio a hair under 1, which
    carries no diagnostic information, so the result is floored at 1.
    Returns ``DEGENERATE`` when every draw is identical.
    """
    arr = _as_chain_matrix(chains)
    if arr.shape[0] < 2:
        raise ValueError("need at least 2 chains")
    if arr.shape[1] < 4:
        raise ValueError("need at least 4 draws per chain")
    if _is_constant(arr):
        return DEGENERATE
    z = _rank_normalize(_split_halves(arr))
    m, n = z.shape
    chain_means = z.mean(axis=1)
    w = float(np.mean(np.var(z, axis=1, ddof=1)))
    b = n * float(np.var(chain_means, ddof=1))
    if w == 0.0:
        return DEGENERATE
    return float(max(1.0, np.sqrt(((n - 1) / n * w + b / n) / w)))


def _autocov_rows(x: np.ndarray) -> np.ndarray:
    """Biased (divide-by-N) autocovariance of each row, via FFT."""
    m, n = x.shape
    x = x - x.mean(axis=1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n]
    return acov / n


def _ess_core(z: np.ndarray):
    """Combined-chain effective sample size of transformed draws.

    Sums paired autocorrelations until the first negative pair, then enforces
    a monotone non-increasing sequence before inverting the sum.
    """
    m, n = z.shape
    if n < 4:
        raise ValueError("need at least 4 draws per chain")
    acov = _autocov_rows(z)
    mean_var = float(np.mean(acov[:, 0])) * n / (n - 1.0)
    var_plus = mean_var * (n - 1.0) / n
    if m > 1:
        var_plus += float(np.var(z.mean(axis=1), ddof=1))
    if var_plus == 0.0:
        return DEGENERATE

    rho_hat = np.zeros(n)
    rho_hat[0] = 1.0
    rho_even = 1.0
    rho_odd = 1.0 - (mean_var - float(np.mean(acov[:, 1]))) / var_plus
    rho_hat[1] = rho_odd
    t = 1
    while t < n - 3 and (rho_even + rho_odd) > 0.0:
        rho_even = 1.0 - (mean_var - float(np.mean(acov[:, t + 1]))) / var_plus
        rho_odd = 1.0 - (mean_var - float(np.mean(acov[:, t + 2]))) / var_plus
        if rho_even + rho_odd >= 0.0:
            rho_hat[t + 1] = rho_even
            rho_hat[t + 2] = rho_odd
        t += 2
    max_t = t - 2
    if rho_even > 0.0:
        rho_hat[max_t + 1] = rho_even
    t = 1
    while t <= max_t - 2:
        if rho_hat[t + 1] + rho_hat[t + 2] > rho_hat[t - 1] + rho_hat[t]:
            rho_hat[t + 1] = (rho_hat[t - 1] + rho_hat[t]) / 2.0
            rho_hat[t + 2] = rho_hat[t + 1]
        t += 2

    total = m * n
    tau = -1.0 + 2.0 * float(np.sum(rho_hat[: max_t + 1])) + float(rho_hat[max_t + 1])
    tau = max(tau, 1.0 / np.log10(total))
    return float(total / tau)


def ess_bulk(chains):
    """Effective sample size of the rank-normalized split chains."""
    arr = _as_chain_matrix(chains)
    if _is_constant(arr):
        return DEGENERATE
    return _ess_core(_rank_normalize(_split_halves(arr)))


def ess_tail(chains):
    """Minimum tail effective sample size over the 5% and 95% quantiles.

    Each tail is measured as the ESS of the rank-normalized indicator of
    exceeding the pooled quantile.
    """
    arr = _as_chain_matrix(chains)
    if _is_constant(arr):
        return DEGENERATE
    out = []
    for q in (0.05, 0.95):
        cut = np.quantile(arr.reshape(-1), q)
        indicator = (arr <= cut).astype(float)
        if _is_constant(indicator):
            return DEGENERATE
        out.append(_ess_core(_rank_normalize(_split_halves(indicator))))
    if any(isinstance(v, Degenerate) for v in out):
        return DEGENERATE
    return float(min(out))


def autocorrelation(chain, max_lag: int) -> np.ndarray:
    """Autocorrelation of one chain up to ``max_lag``; lag 0 is exactly 1.

    Biased (divide-by-N) autocovariance normalized by lag zero.
    """
    x = np.asarray(chain, dtype=float)
    if x.ndim != 1:
        raise ValueError("chain must be 1-D")
    if x.size <= max_lag:
        raise ValueError("chain length must exceed max_lag")
    acov = _autocov_rows(x[None, :])[0]
    if acov[0] == 0.0:
        raise ValueError("zero-variance chain has no autocorrelation")
    return acov[: max_lag + 1] / acov[0]


def rank_histogram(chains, n_bins: int = 20) -> np.ndarray:
    """Per-chain histograms of pooled ranks over uniform bins.

    Chains drawn from a common distribution give near-uniform histograms;
    a shifted chain piles into the extreme bins.  Returns an
    (n_chains, n_bins) count matrix whose rows sum to the chain length.
    """
    arr = _as_chain_matrix(chains)
    m, n = arr.shape
    ranks = rankdata(arr.reshape(-1), method="average").reshape(m, n)
    bins = np.floor((ranks - 1.0) * n_bins / (m * n)).astype(int)
    bins = np.clip(bins, 0, n_bins - 1)
    counts = np.zeros((m, n_bins), dtype=int)
    for ci in range(m):
        counts[ci] = np.bincount(bins[ci], minlength=n_bins)
    return counts


def divergence_count(pd: PosteriorDraws) -> np.ndarray:
    """Number of divergent transitions retained per chain."""
    return np.array([int(np.sum(c.divergent)) for c in pd.chains])


@dataclass(eq=False)
class ParameterDiagnostics:
    name: str
    rhat: object
    ess_bulk: object
    ess_tail: object
    autocorr: np.ndarray | None
    rank_histogram: np.ndarray | None


@dataclass(eq=False)
class DiagnosticsReport:
    """Per-parameter convergence summary plus per-chain divergence counts."""

    parameters: list[ParameterDiagnostics]
    n_divergent: np.ndarray

    def summary_rows(self) -> list[tuple]:
        return [(p.name, p.rhat, p.ess_bulk, p.ess_tail) for p in self.parameters]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["parameter", "rhat", "ess_bulk", "ess_tail"])
            for name, rhat, bulk, tail in self.summary_rows():
                writer.writerow(
                    [name]
                    + [repr(float(v)) if not isinstance(v, Degenerate) else "degenerate"
                       for v in (rhat, bulk, tail)]
                )


def diagnose(pd: PosteriorDraws, max_lag: int = 50, n_bins: int = 20) -> DiagnosticsReport:
    """Full convergence report for every parameter of a posterior sample."""
    max_lag = min(max_lag, pd.draws_per_chain - 1)
    params = []
    for j, name in enumerate(pd.feature_names):
        chains = pd.parameter(j)
        rhat = split_rank_rhat(chains)
        if isinstance(rhat, Degenerate):
            params.append(ParameterDiagnostics(name, DEGENERATE, DEGENERATE, DEGENERATE, None, None))
            continue
        acf = np.vstack([
            autocorrelation(row, max_lag) if not _is_constant(row)
            else np.full(max_lag + 1, np.nan)
            for row in chains
        ])
        params.append(
            ParameterDiagnostics(
                name, rhat, ess_bulk(chains), ess_tail(chains),
                acf, rank_histogram(chains, n_bins),
            )
        )
    return DiagnosticsReport(params, divergence_count(pd))
