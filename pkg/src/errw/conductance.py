"""Truncated escape probabilities, population dynamics for the law of the
conductance, the series constant governing positivity of the speed, and the
tail-index probe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .branching import OffspringDistribution
from .dirichlet import EnvTree
from .exceptions import InsufficientDataError
from .specfun import ParamSet, phi

__all__ = [
    "BetaPopulation",
    "beta_truncated",
    "beta_truncated_all",
    "sample_beta_population",
    "estimate_C",
    "tail_exponent",
    "TailEstimate",
]

ZERO_BETA = 1e-12
LIGHT_TAIL_INDEX = 50.0


def beta_truncated_all(env: EnvTree, n: int) -> np.ndarray:
    """Per-vertex probability of reaching depth ``n`` before the parent.

    Bottom-up over the breadth-first layout: 1 on the depth-n frontier, 0 at
    childless interior vertices (the walk must fall back to the parent), and
    s / (s + eta_parent) with s = sum eta_i beta_i elsewhere.  The s/(s+eta_0)
    form is the algebraic solution of the conductance recursion and avoids
    dividing by vanishing child values on extinct subtrees.
    """
    tree = env.tree
    if tree.max_depth < n:
        raise ValueError(f"environment truncated at {tree.max_depth} < {n}")
    beta = np.zeros(tree.n_vertices)
    for v in range(tree.n_vertices - 1, -1, -1):
        if tree.depth[v] >= n:
            beta[v] = 1.0
            continue
        kids = list(tree.children(v))
        if not kids:
            beta[v] = 0.0
            continue
        s = float(np.dot(env.eta_children[v], beta[kids]))
        beta[v] = s / (s + env.eta_parent[v]) if s > 0 else 0.0
    return beta


def beta_truncated(env: EnvTree, n: int) -> float:
    """Root value of the truncated escape probability."""
    return float(beta_truncated_all(env, n)[0])


def beta_complement_truncated(env: EnvTree, n: int) -> float:
    """1 - beta at the root, as eta_parent/(eta_parent + s): avoids the
    catastrophic cancellation of 1 - beta when the escape probability is
    within rounding of 1."""
    tree = env.tree
    if tree.boundary[0]:
        return 0.0
    beta = beta_truncated_all(env, n)
    kids = list(tree.children(0))
    if not kids:
        return 1.0
    s = float(np.dot(env.eta_children[0], beta[kids]))
    return float(env.eta_parent[0] / (env.eta_parent[0] + s))


@dataclass
class BetaPopulation:
    """Empirical pool approximating the law of the conductance.

    Zeros stay in the pool (extinct subtrees escape with probability 0);
    consumers that condition on survival drop them explicitly.
    """

    pool: np.ndarray
    params: ParamSet
    dist: OffspringDistribution
    iterations: int
    seed_info: str = ""

    @property
    def size(self) -> int:
        return len(self.pool)

    def survivors(self) -> np.ndarray:
        return self.pool[self.pool >= ZERO_BETA]

    def save(self, path: str | Path):
        """Pool as raw doubles plus a JSON metadata sidecar."""
        path = Path(path)
        self.pool.astype("<f8").tofile(path)
        meta = {
            "alpha_p": self.params.alpha_p,
            "alpha_c": self.params.alpha_c,
            "offspring": {str(n): p for n, p in enumerate(self.dist.probs) if p > 0},
            "iterations": self.iterations,
            "pool_size": self.size,
            "seed_info": self.seed_info,
        }
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(meta, sort_keys=True, indent=1) + "\n"
        )

    @classmethod
    def load(cls, path: str | Path) -> "BetaPopulation":
        path = Path(path)
        meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        pool = np.fromfile(path, dtype="<f8")
        if len(pool) != meta["pool_size"]:
            raise ValueError("pool file does not match its metadata sidecar")
        return cls(
            pool=pool,
            params=ParamSet(meta["alpha_p"], meta["alpha_c"]),
            dist=OffspringDistribution.from_dict(meta["offspring"]),
            iterations=meta["iterations"],
            seed_info=meta.get("seed_info", ""),
        )


def _resample_step(
    pool: np.ndarray,
    p: ParamSet,
    dist: OffspringDistribution,
    rng: np.random.Generator,
) -> np.ndarray:
    """One bulk-synchronous population-dynamics iteration.

    Every slot draws an offspring count, a fresh Dirichlet exit vector and
    that many members of the previous pool, then applies the one-level
    conductance recursion. Slots are grouped by offspring count so the gamma
    sampling vectorizes.
    """
    size = len(pool)
    counts = np.arange(len(dist.probs))
    nu = rng.choice(counts, size=size, p=np.asarray(dist.probs))
    new = np.zeros(size)
    for n in counts:
        idx = np.flatnonzero(nu == n)
        if idx.size == 0 or n == 0:
            continue  # nu = 0 slots keep beta = 0
        g0 = rng.gamma(shape=p.alpha_p, size=idx.size)
        gc = rng.gamma(shape=p.alpha_c, size=(idx.size, n))
        total = g0 + gc.sum(axis=1)
        betas = pool[rng.integers(0, size, size=(idx.size, n))]
        s = (gc * betas).sum(axis=1) / total
        eta0 = g0 / total
        with np.errstate(invalid="ignore"):
            val = np.where(s > 0, s / (s + eta0), 0.0)
        new[idx] = val
    return new


def sample_beta_population(
    p: ParamSet,
    dist: OffspringDistribution,
    pool_size: int,
    iterations: int,
    rng: np.random.Generator,
) -> BetaPopulation:
    """Fixed-point iteration on an empirical pool for the recursive
    distributional equation of the conductance; pool starts at 1."""
    pool = np.ones(pool_size)
    for _ in range(iterations):
        pool = _resample_step(pool, p, dist, rng)
    return BetaPopulation(pool=pool, params=p, dist=dist, iterations=iterations)


def _sample_tuples(
    p: ParamSet,
    dist: OffspringDistribution,
    pool: np.ndarray,
    n: int,
    rng: np.random.Generator,
):
    """Draw (eta_0, s = sum eta_i beta_i) for n independent one-level tuples."""
    counts = np.arange(len(dist.probs))
    nu = rng.choice(counts, size=n, p=np.asarray(dist.probs))
    eta0 = np.zeros(n)
    s = np.zeros(n)
    for k in counts:
        idx = np.flatnonzero(nu == k)
        if idx.size == 0:
            continue
        g0 = rng.gamma(shape=p.alpha_p, size=idx.size)
        if k == 0:
            eta0[idx] = 1.0
            continue
        gc = rng.gamma(shape=p.alpha_c, size=(idx.size, k))
        total = g0 + gc.sum(axis=1)
        eta0[idx] = g0 / total
        betas = pool[rng.integers(0, len(pool), size=(idx.size, k))]
        s[idx] = (gc * betas).sum(axis=1) / total
    return eta0, s


def estimate_C(
    p: ParamSet,
    dist: OffspringDistribution,
    pop: BetaPopulation,
    n_samples: int,
    series_cap: int,
    rng: np.random.Generator,
    *,
    n_batches: int = 10,
    flag_ratio: float = 1e-3,
):
    """Monte Carlo estimate of sum_k phi(k) a_k b_k with
    a_k = E[(1-beta)^{k+1} / eta_0] and b_k = E[beta (1-beta)^k].

    The two expectations come from independent sample streams (the formula is
    a product of expectations over the two independent halves of a doubled
    tree). The first is evaluated as (1-beta)^k / (eta_0 + s), which is
    algebraically identical and avoids dividing by small eta_0. Returns
    (estimate, standard error, divergence flag); the flag trips when the last
    series term still exceeds ``flag_ratio`` of the partial sum, the signature
    of the zero-speed regime.
    """
    eta0_a, s_a = _sample_tuples(p, dist, pop.pool, n_samples, rng)
    beta_a = np.where(s_a > 0, s_a / (s_a + eta0_a), 0.0)
    w_a = 1.0 / (eta0_a + s_a)  # (1-beta)/eta_0 for the a-stream
    eta0_b, s_b = _sample_tuples(p, dist, pop.pool, n_samples, rng)
    beta_b = np.where(s_b > 0, s_b / (s_b + eta0_b), 0.0)

    batch = np.arange(n_samples) % n_batches
    batch_counts = np.bincount(batch, minlength=n_batches)
    one_minus_a = 1.0 - beta_a
    one_minus_b = 1.0 - beta_b
    pow_a = np.ones(n_samples)
    pow_b = np.ones(n_samples)
    total = 0.0
    batch_totals = np.zeros(n_batches)
    last_term = 0.0
    for k in range(series_cap + 1):
        a_term = pow_a * w_a
        b_term = pow_b * beta_b
        phik = phi(k, p)
        last_term = phik * a_term.mean() * b_term.mean()
        total += last_term
        a_means = np.bincount(batch, weights=a_term, minlength=n_batches) / batch_counts
        b_means = np.bincount(batch, weights=b_term, minlength=n_batches) / batch_counts
        batch_totals += phik * a_means * b_means
        pow_a *= one_minus_a
        pow_b *= one_minus_b
    flag = last_term > flag_ratio * total
    se = float(batch_totals.std(ddof=1) / np.sqrt(n_batches))
    return float(total), se, bool(flag)


@dataclass
class TailEstimate:
    index: float
    light_tail: bool
    n_order_stats: int


def tail_exponent(pop: BetaPopulation, *, top_fraction: float = 0.01) -> TailEstimate:
    """Hill estimator of the tail index of the reciprocal conductance over the
    top order statistics, on the pool conditioned on survival."""
    surv = pop.survivors()
    if len(surv) < 10**4:
        raise InsufficientDataError(
            f"need at least 1e4 surviving samples, have {len(surv)}"
        )
    x = np.sort(1.0 / surv)[::-1]
    k = max(int(top_fraction * len(x)), 10)
    logs = np.log(x[:k])
    denom = logs.mean() - np.log(x[k])
    if denom <= 1.0 / LIGHT_TAIL_INDEX:
        return TailEstimate(index=LIGHT_TAIL_INDEX if denom <= 0 else 1.0 / denom,
                            light_tail=True, n_order_stats=k)
    return TailEstimate(index=1.0 / denom, light_tail=False, n_order_stats=k)
