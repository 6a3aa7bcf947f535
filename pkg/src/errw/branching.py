"""Offspring-distribution analysis and Galton-Watson tree sampling.

Only finite-support offspring laws are accepted: the moment conditions of the
positive-speed criteria then hold automatically, and the extinction
probability is a polynomial root.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .exceptions import UnsupportedRegimeError, VertexCapError

__all__ = ["OffspringDistribution", "TruncatedTree", "sample_tree"]

_PROB_TOL = 1e-9
DEFAULT_VERTEX_CAP = 10**7


@dataclass(frozen=True)
class OffspringDistribution:
    """Finite-support offspring law (p_0, ..., p_N) with cached derived data.

    ``m``: mean; ``q``: smallest fixed point of the generating function on
    [0, 1]; ``f_prime_q``: derivative there; ``d``: minimal positive support.
    The degenerate ray p_1 = 1 (m = 1) is accepted as a special case; all
    other non-supercritical laws are rejected.
    """

    probs: tuple[float, ...]
    m: float = field(init=False)
    q: float = field(init=False)
    f_prime_q: float = field(init=False)
    d: int = field(init=False)

    def __post_init__(self):
        probs = tuple(float(x) for x in self.probs)
        if any(x < 0 for x in probs):
            raise ValueError("offspring probabilities must be nonnegative")
        if abs(sum(probs) - 1.0) > _PROB_TOL:
            raise ValueError(f"offspring probabilities sum to {sum(probs)}, not 1")
        object.__setattr__(self, "probs", probs)
        m = sum(n * x for n, x in enumerate(probs))
        if m <= 1 and not self.is_ray_from(probs):
            raise UnsupportedRegimeError(
                f"offspring mean {m} <= 1: only supercritical laws (or the ray p_1=1) are supported"
            )
        pos = [n for n, x in enumerate(probs) if n >= 1 and x > 0]
        if not pos:
            raise UnsupportedRegimeError("offspring law has no positive support")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "d", min(pos))
        q = _extinction_prob(probs, m)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "f_prime_q", self.gen_fn_deriv(q))

    @staticmethod
    def is_ray_from(probs) -> bool:
        return len(probs) >= 2 and abs(probs[1] - 1.0) <= _PROB_TOL

    @property
    def is_ray(self) -> bool:
        return self.is_ray_from(self.probs)

    @classmethod
    def from_dict(cls, d: dict) -> "OffspringDistribution":
        """Build from a JSON-style map {n: p_n}; keys may be strings."""
        items = {int(k): float(v) for k, v in d.items()}
        if any(k < 0 for k in items):
            raise ValueError("offspring counts must be nonnegative")
        n_max = max(items)
        probs = [items.get(n, 0.0) for n in range(n_max + 1)]
        return cls(tuple(probs))

    def gen_fn(self, s: float) -> float:
        """Generating function f(s) = sum_n p_n s^n, Horner form."""
        acc = 0.0
        for p in reversed(self.probs):
            acc = acc * s + p
        return acc

    def gen_fn_deriv(self, s: float) -> float:
        acc = 0.0
        for n in range(len(self.probs) - 1, 0, -1):
            acc = acc * s + n * self.probs[n]
        return acc


def _extinction_prob(probs, m) -> float:
    """Smallest root of f(s) = s on [0, 1]."""
    if probs[0] == 0.0:
        return 0.0
    if m <= 1:  # only the ray reaches here; it has p_0 = 0
        return 0.0

    def g(s):
        acc = 0.0
        for p in reversed(probs):
            acc = acc * s + p
        return acc - s

    # g(0) = p_0 > 0, g(1) = 0; supercriticality gives g < 0 just below 1,
    # so the smallest root is bracketed by [0, 1 - eps].
    hi = 1.0 - 1e-9
    while g(hi) >= 0:
        hi = 1.0 - (1.0 - hi) * 2
        if hi < 0.5:
            break
    if g(hi) >= 0:
        # root extremely close to 1; fall back to iterating f from 0
        s = 0.0
        for _ in range(10_000):
            s_new = g(s) + s
            if abs(s_new - s) < 1e-15:
                break
            s = s_new
        return s
    q = brentq(g, 0.0, hi, xtol=1e-15, rtol=8.9e-16)
    return float(q)


def extinction_prob(dist: OffspringDistribution) -> float:
    """Extinction probability q (smallest fixed point of the generating function)."""
    return dist.q


@dataclass
class TruncatedTree:
    """Rooted tree truncated at ``max_depth``, stored flat in breadth-first order.

    ``parent[v]`` is -1 for the root; children of v are the contiguous range
    ``child_start[v]:child_end[v]``. Vertices at depth ``max_depth`` are
    boundary leaves (their offspring were never sampled); ``boundary`` flags
    them so the conductance recursion can treat them as absorbing.
    """

    parent: np.ndarray
    child_start: np.ndarray
    child_end: np.ndarray
    depth: np.ndarray
    boundary: np.ndarray
    max_depth: int

    @property
    def n_vertices(self) -> int:
        return len(self.parent)

    def children(self, v: int) -> range:
        return range(self.child_start[v], self.child_end[v])

    def n_children(self, v: int) -> int:
        return self.child_end[v] - self.child_start[v]


def sample_tree(
    dist: OffspringDistribution,
    max_depth: int,
    rng: np.random.Generator,
    *,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
) -> TruncatedTree:
    """Sample a Galton-Watson tree truncated at ``max_depth``, breadth-first."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    counts = np.arange(len(dist.probs))
    probs = np.asarray(dist.probs)

    parent = [-1]
    depth = [0]
    child_start = []
    child_end = []
    frontier = [0]
    for level in range(max_depth):
        if not frontier:
            break
        nu = rng.choice(counts, size=len(frontier), p=probs)
        next_frontier = []
        for v, n in zip(frontier, nu):
            first = len(parent)
            child_start.append(first)
            child_end.append(first + int(n))
            for _ in range(int(n)):
                parent.append(v)
                depth.append(level + 1)
            next_frontier.extend(range(first, first + int(n)))
            if len(parent) > vertex_cap:
                raise VertexCapError(
                    f"tree exceeded vertex cap {vertex_cap} at depth {level + 1}"
                )
        frontier = next_frontier
    # vertices at max_depth get no sampled children
    for _ in frontier:
        child_start.append(len(parent))
        child_end.append(len(parent))

    depth_arr = np.asarray(depth, dtype=np.int64)
    return TruncatedTree(
        parent=np.asarray(parent, dtype=np.int64),
        child_start=np.asarray(child_start, dtype=np.int64),
        child_end=np.asarray(child_end, dtype=np.int64),
        depth=depth_arr,
        boundary=depth_arr == max_depth,
        max_depth=max_depth,
    )
