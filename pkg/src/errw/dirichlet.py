"""Dirichlet environment sampling and the exact gamma-product path calculus.

The annealed law of the reinforced walk is the averaged quenched law of a
Markov chain whose exit probabilities are Dirichlet; both path-probability
formulas here are exact gamma-ratio products, evaluated in log space because
paths of modest length on sub-unit weights already underflow naive products.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .branching import TruncatedTree
from .exceptions import DivergentMomentError, InvalidPathError
from .specfun import ParamSet, log_gamma

__all__ = [
    "EnvTree",
    "WeightedDigraph",
    "sample_dirichlet",
    "dirichlet_moment",
    "errw_path_probability",
    "two_path_product",
    "edge_local_times",
    "sample_env_tree",
]

ORACLE_VERTEX_CAP = 64


def sample_dirichlet(weights, rng: np.random.Generator) -> np.ndarray:
    """Sample a Dirichlet vector as normalized unit-rate gamma variates."""
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("Dirichlet weights must be strictly positive")
    g = rng.gamma(shape=w)
    total = g.sum()
    while total == 0.0:  # astronomically unlikely underflow for tiny shapes
        g = rng.gamma(shape=w)
        total = g.sum()
    return g / total


def dirichlet_moment(weights, exponents) -> float:
    """E[prod_j D_j^{s_j}] for D ~ Dirichlet(weights), in closed gamma-ratio form."""
    a = np.asarray(weights, dtype=float)
    s = np.asarray(exponents, dtype=float)
    if a.shape != s.shape:
        raise ValueError("weights and exponents must have the same length")
    if np.any(a <= 0):
        raise ValueError("Dirichlet weights must be strictly positive")
    if np.any(a + s <= 0):
        raise DivergentMomentError(
            f"moment diverges: alpha + s = {a + s} has a non-positive entry"
        )
    log_val = (
        log_gamma(a.sum())
        - sum(log_gamma(x) for x in a)
        + sum(log_gamma(x) for x in a + s)
        - log_gamma((a + s).sum())
    )
    return math.exp(log_val)


@dataclass
class WeightedDigraph:
    """Small oriented graph with positive edge weights, for exact identity oracles.

    Parallel edges are disallowed; the vertex count is capped because these
    graphs feed exhaustive enumerations.
    """

    weights: dict = field(default_factory=dict)  # (tail, head) -> alpha_e
    _out: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self._out = {}
        for (u, v), a in self.weights.items():
            if a <= 0:
                raise ValueError(f"edge ({u},{v}) has non-positive weight {a}")
            self._out.setdefault(u, []).append(v)
            self._out.setdefault(v, self._out.get(v, []))
        if len(self.vertices()) > ORACLE_VERTEX_CAP:
            raise ValueError(f"oracle graphs are capped at {ORACLE_VERTEX_CAP} vertices")

    def add_edge(self, u, v, alpha: float):
        if (u, v) in self.weights:
            raise ValueError(f"parallel edge ({u},{v})")
        if alpha <= 0:
            raise ValueError(f"edge ({u},{v}) has non-positive weight {alpha}")
        self.weights[(u, v)] = alpha
        self._out.setdefault(u, []).append(v)
        self._out.setdefault(v, self._out.get(v, []))

    def vertices(self):
        return list(self._out.keys())

    def out_neighbors(self, u):
        return self._out.get(u, [])

    def has_edge(self, u, v) -> bool:
        return (u, v) in self.weights

    def with_shifted_weights(self, shift: Counter) -> "WeightedDigraph":
        """New graph with weights alpha_e + shift[e]."""
        w = {e: a + shift.get(e, 0) for e, a in self.weights.items()}
        return WeightedDigraph(w)


def edge_local_times(path) -> Counter:
    """Directed-edge traversal counts N_e of a vertex sequence."""
    return Counter(zip(path, path[1:]))


def errw_path_probability(g: WeightedDigraph, path) -> float:
    """Annealed reinforced-walk probability of a path, as the exact double
    gamma product over vertices and edges.

    Depends on the path only through its edge local times; equals the
    step-by-step urn product.
    """
    path = list(path)
    if len(path) <= 1:
        return 1.0
    for u, v in zip(path, path[1:]):
        if not g.has_edge(u, v):
            raise InvalidPathError(f"step ({u},{v}) is not an edge")
    counts = edge_local_times(path)

    log_p = 0.0
    # vertex factor: Gamma(sum alpha_e) / Gamma(sum alpha_e + sum N_e) over out-edges
    out_n = Counter()
    for (u, _), n in counts.items():
        out_n[u] += n
    for u, n in out_n.items():
        a_sum = sum(g.weights[(u, v)] for v in g.out_neighbors(u))
        log_p += log_gamma(a_sum) - log_gamma(a_sum + n)
    # edge factor: Gamma(alpha_e + N_e) / Gamma(alpha_e)
    for e, n in counts.items():
        a = g.weights[e]
        log_p += log_gamma(a + n) - log_gamma(a)
    return math.exp(log_p)


def sequential_urn_probability(g: WeightedDigraph, path) -> float:
    """Step-by-step urn product of the reinforced walk; independent cross-check
    for the gamma-product formula."""
    path = list(path)
    counts = Counter()
    p = 1.0
    for u, v in zip(path, path[1:]):
        if not g.has_edge(u, v):
            raise InvalidPathError(f"step ({u},{v}) is not an edge")
        num = g.weights[(u, v)] + counts[(u, v)]
        den = sum(g.weights[(u, w)] + counts[(u, w)] for w in g.out_neighbors(u))
        p *= num / den
        counts[(u, v)] += 1
    return p


def two_path_product(g: WeightedDigraph, gamma1, gamma2) -> float:
    """E over the Dirichlet environment of P^eta(gamma1) P^eta(gamma2):
    the probability of gamma2 under weights shifted by gamma1's local times,
    times the probability of gamma1. Symmetric in the two paths."""
    shift = edge_local_times(gamma1)
    return errw_path_probability(g.with_shifted_weights(shift), gamma2) * errw_path_probability(g, gamma1)


@dataclass
class EnvTree:
    """A truncated tree with sampled transition probabilities at every
    non-boundary vertex.

    ``eta_parent[v]`` is the exit probability toward the parent (for the root:
    toward the artificial parent); ``eta_children[v]`` aligns with
    ``tree.children(v)``. Boundary vertices carry no environment.
    """

    tree: TruncatedTree
    eta_parent: np.ndarray
    eta_children: list

    def transition(self, v: int):
        """(neighbor indices, probabilities) from v; parent slot first.

        The root's parent slot points at -1 (the artificial parent)."""
        kids = list(self.tree.children(v))
        nbrs = [self.tree.parent[v]] + kids
        probs = np.concatenate(([self.eta_parent[v]], self.eta_children[v]))
        return nbrs, probs


def sample_env_tree(
    tree: TruncatedTree, p: ParamSet, rng: np.random.Generator
) -> EnvTree:
    """Draw the Dirichlet environment (alpha_p toward the parent, alpha_c toward
    each child) at every non-boundary vertex."""
    n = tree.n_vertices
    eta_parent = np.zeros(n)
    eta_children: list = [None] * n
    for v in range(n):
        if tree.boundary[v]:
            continue
        nu = tree.n_children(v)
        w = np.concatenate(([p.alpha_p], np.full(nu, p.alpha_c)))
        eta = sample_dirichlet(w, rng)
        eta_parent[v] = eta[0]
        eta_children[v] = eta[1:]
    return EnvTree(tree=tree, eta_parent=eta_parent, eta_children=eta_children)
