"""No-U-Turn Hamiltonian Monte Carlo over multiple independent chains.

The transition is the multinomial variant: the trajectory doubles until the
path starts turning back on itself (or the tree depth cap is hit), leaves are
weighted by the joint density, and the next state is drawn proportionally to
those weights.  A transition whose Hamiltonian drifts more than 1000 nats
below its starting value is flagged divergent and its subtree discarded.

Step size is tuned during warmup by dual averaging toward a target acceptance
statistic and frozen afterwards.  The mass matrix is the identity.  Chains own
private seeded generators, so runs are reproducible bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .data import DataError

Target = Callable[[np.ndarray], tuple[float, np.ndarray]]

DIVERGENCE_THRESHOLD = 1000.0


class NumericError(RuntimeError):
    """Sampling could not proceed (e.g. no finite starting point)."""


@dataclass(frozen=True)
class ChainConfig:
    """Chain schedule: counts, warmup, thinning, and tree/acceptance limits."""

    n_chains: int = 4
    warmup: int = 1000
    thin: int = 1
    draws_per_chain: int = 2500
    max_tree_depth: int = 10
    target_accept: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if min(self.n_chains, self.thin, self.draws_per_chain) < 1:
            raise ValueError("n_chains, thin, and draws_per_chain must be >= 1")
        if self.warmup < 0:
            raise ValueError("warmup must be >= 0")
        if self.max_tree_depth < 1:
            raise ValueError("max_tree_depth must be >= 1")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target_accept must lie in (0, 1)")

    @property
    def total_draws(self) -> int:
        return self.n_chains * self.draws_per_chain


@dataclass(eq=False)
class ChainResult:
    """Retained draws of one chain plus per-draw sampler telemetry."""

    draws: np.ndarray
    divergent: np.ndarray
    tree_depth: np.ndarray | None = None
    energy: np.ndarray | None = None
    step_size: float | None = None

    def __post_init__(self):
        if self.draws.ndim != 2:
            raise ValueError("draws must be a 2-D matrix")
        if self.divergent.shape[0] != self.draws.shape[0]:
            raise ValueError("divergent flags must align with draws")


@dataclass(eq=False)
class PosteriorDraws:
    """All chains merged; chain identity stays recoverable per row."""

    chains: list[ChainResult]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        self.feature_names = tuple(self.feature_names)
        dims = {c.draws.shape[1] for c in self.chains}
        if len(dims) != 1:
            raise ValueError("chains disagree on dimension")
        if dims.pop() != len(self.feature_names):
            raise ValueError("feature_names length must match draw dimension")
        counts = {c.draws.shape[0] for c in self.chains}
        if len(counts) != 1:
            raise ValueError("chains must hold equal numbers of draws")

    @property
    def n_chains(self) -> int:
        return len(self.chains)

    @property
    def draws_per_chain(self) -> int:
        return self.chains[0].draws.shape[0]

    @property
    def dim(self) -> int:
        return self.chains[0].draws.shape[1]

    @property
    def total(self) -> int:
        return self.n_chains * self.draws_per_chain

    def flat(self) -> np.ndarray:
        """L x dim matrix, chains stacked in order."""
        return np.vstack([c.draws for c in self.chains])

    def chain_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_chains), self.draws_per_chain)

    def parameter(self, j) -> np.ndarray:
        """Per-chain draws of one coordinate as an (n_chains, draws) matrix."""
        if isinstance(j, str):
            j = self.feature_names.index(j)
        return np.stack([c.draws[:, j] for c in self.chains])

    def write_csv(self, path) -> None:
        """One row per retained draw: chain, draw, divergent, coefficients."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["chain", "draw", "divergent", *self.feature_names])
            for ci, chain in enumerate(self.chains):
                for di in range(chain.draws.shape[0]):
                    writer.writerow(
                        [ci, di, int(chain.divergent[di])]
                        + [repr(float(v)) for v in chain.draws[di]]
                    )

    @classmethod
    def read_csv(cls, path) -> "PosteriorDraws":
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if not header or header[:3] != ["chain", "draw", "divergent"]:
                    raise DataError(f"{path}: not a draws file")
                names = tuple(header[3:])
                per_chain: dict[int, list] = {}
                flags: dict[int, list] = {}
                for rec in reader:
                    ci = int(rec[0])
                    per_chain.setdefault(ci, []).append([float(v) for v in rec[3:]])
                    flags.setdefault(ci, []).append(bool(int(rec[2])))
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from exc
        except (ValueError, IndexError) as exc:
            raise DataError(f"{path}: malformed draws file: {exc}") from exc
        if not per_chain:
            raise DataError(f"{path}: no draws")
        chains = [
            ChainResult(np.array(per_chain[ci]), np.array(flags[ci], dtype=bool))
            for ci in sorted(per_chain)
        ]
        return cls(chains, names)


class DrawResult(NamedTuple):
    position: np.ndarray
    divergent: bool
    depth: int
    accept_stat: float
    energy: float
    logp: float
    grad: np.ndarray


def leapfrog(position, momentum, epsilon: float, grad_fn):
    """One velocity-Verlet step: half momentum kick, drift, half kick.

    Exactly reversible: stepping from the result with negated momentum
    returns the start.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    q = np.asarray(position, dtype=float)
    p = np.asarray(momentum, dtype=float)
    p_half = p + 0.5 * epsilon * np.asarray(grad_fn(q), dtype=float)
    q_new = q + epsilon * p_half
    p_new = p_half + 0.5 * epsilon * np.asarray(grad_fn(q_new), dtype=float)
    return q_new, p_new


def _leapfrog_cached(q, p, grad, epsilon, target: Target):
    p_half = p + 0.5 * epsilon * grad
    q_new = q + epsilon * p_half
    logp_new, grad_new = target(q_new)
    p_new = p_half + 0.5 * epsilon * grad_new
    return q_new, p_new, logp_new, grad_new


def _uturn(q_minus, p_minus, q_plus, p_plus) -> bool:
    dq = q_plus - q_minus
    return bool(dq @ p_minus < 0.0 or dq @ p_plus < 0.0)


class _Subtree:
    __slots__ = (
        "q_minus", "p_minus", "grad_minus",
        "q_plus", "p_plus", "grad_plus",
        "q_prop", "logp_prop", "grad_prop", "logjoint_prop",
        "log_sum_weight", "sum_alpha", "n_alpha",
        "turning", "diverging",
    )


def _build_tree(depth, q, p, grad, direction, epsilon, logjoint0, target, rng, max_delta):
    """Extend the trajectory by 2**depth leapfrog steps from (q, p)."""
    if depth == 0:
        q1, p1, logp1, grad1 = _leapfrog_cached(q, p, grad, direction * epsilon, target)
        logjoint = logp1 - 0.5 * float(p1 @ p1)
        t = _Subtree()
        t.q_minus = t.q_plus = q1
        t.p_minus = t.p_plus = p1
        t.grad_minus = t.grad_plus = grad1
        t.q_prop, t.logp_prop, t.grad_prop = q1, logp1, grad1
        t.logjoint_prop = logjoint
        if np.isfinite(logjoint):
            delta = logjoint - logjoint0
            t.diverging = delta < -max_delta
            t.log_sum_weight = delta
            t.sum_alpha = min(1.0, float(np.exp(min(delta, 0.0))))
        else:
            t.diverging = True
            t.log_sum_weight = -np.inf
            t.sum_alpha = 0.0
        t.n_alpha = 1
        t.turning = False
        return t

    first = _build_tree(depth - 1, q, p, grad, direction, epsilon, logjoint0, target, rng, max_delta)
    if first.diverging or first.turning:
        return first

    if direction > 0:
        edge = (first.q_plus, first.p_plus, first.grad_plus)
    else:
        edge = (first.q_minus, first.p_minus, first.grad_minus)
    second = _build_tree(depth - 1, *edge, direction, epsilon, logjoint0, target, rng, max_delta)

    first.sum_alpha += second.sum_alpha
    first.n_alpha += second.n_alpha
    if second.diverging or second.turning:
        first.diverging = second.diverging
        first.turning = second.turning
        return first

    total = np.logaddexp(first.log_sum_weight, second.log_sum_weight)
    if np.log(rng.random()) < second.log_sum_weight - total:
        first.q_prop = second.q_prop
        first.logp_prop = second.logp_prop
        first.grad_prop = second.grad_prop
        first.logjoint_prop = second.logjoint_prop
    first.log_sum_weight = total
    if direction > 0:
        first.q_plus, first.p_plus, first.grad_plus = second.q_plus, second.p_plus, second.grad_plus
    else:
        first.q_minus, first.p_minus, first.grad_minus = second.q_minus, second.p_minus, second.grad_minus
    first.turning = _uturn(first.q_minus, first.p_minus, first.q_plus, first.p_plus)
    return first


def _transition(q, logp, grad, epsilon, target, rng, max_tree_depth) -> DrawResult:
    p = rng.standard_normal(q.shape[0])
    logjoint0 = logp - 0.5 * float(p @ p)

    q_minus = q_plus = q
    p_minus = p_plus = p
    grad_minus = grad_plus = grad
    prop_q, prop_logp, prop_grad, prop_logjoint = q, logp, grad, logjoint0
    log_sum_weight = 0.0
    sum_alpha = 0.0
    n_alpha = 0
    depth = 0
    divergent = False

    while depth < max_tree_depth:
        direction = 1 if rng.random() < 0.5 else -1
        if direction > 0:
            sub = _build_tree(depth, q_plus, p_plus, grad_plus, direction,
                              epsilon, logjoint0, target, rng, DIVERGENCE_THRESHOLD)
        else:
            sub = _build_tree(depth, q_minus, p_minus, grad_minus, direction,
                              epsilon, logjoint0, target, rng, DIVERGENCE_THRESHOLD)
        sum_alpha += sub.sum_alpha
        n_alpha += sub.n_alpha
        if sub.diverging:
            divergent = True
            break
        if sub.turning:
            break
        # Biased progressive sampling: favor the fresh half of the trajectory.
        if np.log(rng.random()) < sub.log_sum_weight - log_sum_weight:
            prop_q, prop_logp, prop_grad = sub.q_prop, sub.logp_prop, sub.grad_prop
            prop_logjoint = sub.logjoint_prop
        log_sum_weight = float(np.logaddexp(log_sum_weight, sub.log_sum_weight))
        if direction > 0:
            q_plus, p_plus, grad_plus = sub.q_plus, sub.p_plus, sub.grad_plus
        else:
            q_minus, p_minus, grad_minus = sub.q_minus, sub.p_minus, sub.grad_minus
        depth += 1
        if _uturn(q_minus, p_minus, q_plus, p_plus):
            break

    accept_stat = sum_alpha / n_alpha if n_alpha else 0.0
    return DrawResult(prop_q, divergent, depth, accept_stat, -prop_logjoint, prop_logp, prop_grad)


def nuts_draw(current, epsilon: float, target: Target, rng, max_tree_depth: int = 10) -> DrawResult:
    """One No-U-Turn transition from ``current``.

    Divergence is reported as data on the result, never raised.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    q = np.asarray(current, dtype=float)
    logp, grad = target(q)
    return _transition(q, logp, grad, epsilon, target, rng, max_tree_depth)


class StepSizeAdapter:
    """Dual-averaging controller driving acceptance toward a target.

    ``update`` consumes one acceptance statistic and returns the step size for
    the next warmup iteration; ``finalize`` returns the averaged iterate used
    after warmup.
    """

    def __init__(self, initial_step: float, target_accept: float = 0.8,
                 gamma: float = 0.05, t0: float = 10.0, kappa: float = 0.75):
        if initial_step <= 0:
            raise ValueError("initial_step must be positive")
        self.mu = np.log(10.0 * initial_step)
        self.target_accept = target_accept
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.count = 0
        self.h_bar = 0.0
        self.log_step = np.log(initial_step)
        self.log_step_bar = 0.0

    def update(self, accept_stat: float) -> float:
        self.count += 1
        m = self.count
        eta = 1.0 / (m + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target_accept - accept_stat)
        self.log_step = self.mu - np.sqrt(m) / self.gamma * self.h_bar
        w = m ** (-self.kappa)
        self.log_step_bar = w * self.log_step + (1.0 - w) * self.log_step_bar
        return float(np.exp(self.log_step))

    def finalize(self) -> float:
        if self.count == 0:
            return float(np.exp(self.log_step))
        return float(np.exp(self.log_step_bar))


def adapt_step_size(accept_history, initial_step: float = 1.0,
                    target_accept: float = 0.8) -> float:
    """Replay a history of acceptance statistics; return the current step."""
    adapter = StepSizeAdapter(initial_step, target_accept)
    step = initial_step
    for a in accept_history:
        step = adapter.update(a)
    return step


def _find_initial_step(q, logp, grad, target: Target, rng) -> float:
    """Double/halve the step until one leapfrog step crosses 50% acceptance."""
    epsilon = 1.0
    p = rng.standard_normal(q.shape[0])
    logjoint0 = logp - 0.5 * float(p @ p)

    def joint_after(eps):
        q1, p1, logp1, _ = _leapfrog_cached(q, p, grad, eps, target)
        return logp1 - 0.5 * float(p1 @ p1)

    delta = joint_after(epsilon) - logjoint0
    for _ in range(100):
        if np.isfinite(delta):
            break
        epsilon *= 0.5
        delta = joint_after(epsilon) - logjoint0
    direction = 1.0 if delta > np.log(0.5) else -1.0
    for _ in range(100):
        if direction * delta <= -direction * np.log(2.0):
            break
        epsilon *= 2.0 ** direction
        delta = joint_after(epsilon) - logjoint0
        if not np.isfinite(delta):
            delta = -np.inf
    return epsilon


def _run_chain(target: Target, dim: int, cfg: ChainConfig, seed_seq) -> ChainResult:
    rng = np.random.Generator(np.random.PCG64(seed_seq))

    q = logp = grad = None
    for _ in range(100):
        candidate = rng.uniform(-2.0, 2.0, size=dim)
        lp, g = target(candidate)
        if np.isfinite(lp) and np.all(np.isfinite(g)):
            q, logp, grad = candidate, lp, g
            break
    if q is None:
        raise NumericError("no finite log-posterior found in 100 initialization draws")

    epsilon = _find_initial_step(q, logp, grad, target, rng)
    adapter = StepSizeAdapter(epsilon, cfg.target_accept)
    for _ in range(cfg.warmup):
        res = _transition(q, logp, grad, epsilon, target, rng, cfg.max_tree_depth)
        q, logp, grad = res.position, res.logp, res.grad
        epsilon = adapter.update(res.accept_stat)
    if cfg.warmup > 0:
        epsilon = adapter.finalize()

    draws = np.empty((cfg.draws_per_chain, dim))
    divergent = np.zeros(cfg.draws_per_chain, dtype=bool)
    depth = np.zeros(cfg.draws_per_chain, dtype=int)
    energy = np.zeros(cfg.draws_per_chain)
    kept = 0
    for i in range(cfg.draws_per_chain * cfg.thin):
        res = _transition(q, logp, grad, epsilon, target, rng, cfg.max_tree_depth)
        q, logp, grad = res.position, res.logp, res.grad
        if (i + 1) % cfg.thin == 0:
            draws[kept] = q
            divergent[kept] = res.divergent
            depth[kept] = res.depth
            energy[kept] = res.energy
            kept += 1
    return ChainResult(draws, divergent, depth, energy, float(epsilon))


def sample(target: Target, dim: int, cfg: ChainConfig,
           feature_names=None) -> PosteriorDraws:
    """Run ``cfg.n_chains`` independent chains against an arbitrary target.

    Each chain gets a spawned sub-seed, a uniform [-2, 2] start, its own
    warmup adaptation, and thinned retention.  Deterministic per seed.
    """
    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(dim))
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_chains)
    chains = [_run_chain(target, dim, cfg, s) for s in seeds]
    return PosteriorDraws(chains, tuple(feature_names))


def run_chains(ds, spec, cfg: ChainConfig) -> PosteriorDraws:
    """Sample the logistic posterior for an encoded dataset."""
    from .model import make_target

    target = make_target(ds, spec)
    return sample(target, ds.dim, cfg, ds.feature_names)
