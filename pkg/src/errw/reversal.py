"""Exact verification oracles for the path-reversal machinery: the pivot
transform, the weight swap along the root-to-pivot spine, and the three
reversal identities (fresh-path, two-walk, and quenched-bias).

Vertices are named by strings: "*" is the artificial parent of the root, ""
is the root, and children append a digit ("01" is the second child of the
first child of the root).  The pivot transform re-hangs the tree at the
distinguished vertex; since that is a bijection preserving adjacency, all
checks keep the original vertex names and encode the transform entirely in
the weight swap plus path reversal.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .branching import OffspringDistribution
from .conductance import beta_complement_truncated, beta_truncated
from .dirichlet import (
    EnvTree,
    WeightedDigraph,
    edge_local_times,
    errw_path_probability,
    sample_env_tree,
    two_path_product,
)
from .exceptions import UnsupportedRegimeError
from .specfun import ParamSet, phi

__all__ = [
    "MarkedTree",
    "DoubleTree",
    "CheckResult",
    "full_tree_children",
    "psi_transform",
    "verify_fresh_reversal",
    "verify_two_walk_reversal",
    "verify_quenched_bias",
    "sample_double_tree",
    "enumerate_fresh_paths",
    "enumerate_second_paths",
    "check_flow_conservation",
    "check_reverse_local_times",
    "run_verification_suite",
]

ROOT = ""
ROOT_STAR = "*"

_REL_TOL = 1e-10
_SERIES_EPS = 1e-14


@dataclass(frozen=True)
class CheckResult:
    lhs: float
    rhs: float
    passed: bool
    skipped: bool = False
    reason: str = ""

    def __iter__(self):  # unpacks as (lhs, rhs, passed)
        return iter((self.lhs, self.rhs, self.passed))

    @property
    def residual(self) -> float:
        scale = max(abs(self.lhs), abs(self.rhs), 1e-300)
        return abs(self.lhs - self.rhs) / scale


def full_tree_children(branching: int, depth: int) -> dict:
    """Children map of the complete ``branching``-ary tree of the given depth."""
    children: dict = {}
    frontier = [ROOT]
    for _ in range(depth):
        nxt = []
        for v in frontier:
            kids = tuple(v + str(i) for i in range(branching))
            children[v] = kids
            nxt.extend(kids)
        frontier = nxt
    for v in frontier:
        children[v] = ()
    return children


@dataclass
class MarkedTree:
    """Finite rooted tree with artificial parent, a distinguished pivot vertex
    and per-directed-edge weights."""

    children: dict  # vertex -> tuple of child names
    weights: dict  # (tail, head) -> alpha_e, both directions of every edge
    x: str

    def __post_init__(self):
        if self.x not in self.children and self.x != ROOT_STAR:
            raise ValueError(f"pivot {self.x!r} is not a vertex of the tree")
        if self.x == ROOT_STAR:
            raise ValueError("pivot cannot be the artificial parent")

    @classmethod
    def standard(cls, children: dict, p: ParamSet, x: str) -> "MarkedTree":
        """Child-direction edges weighted alpha_c, parent-direction alpha_p;
        the artificial parent is treated as the parent of the root."""
        weights = {(ROOT_STAR, ROOT): p.alpha_c, (ROOT, ROOT_STAR): p.alpha_p}
        for v, kids in children.items():
            for c in kids:
                weights[(v, c)] = p.alpha_c
                weights[(c, v)] = p.alpha_p
        return cls(children=children, weights=weights, x=x)

    def parent(self, v: str) -> str | None:
        if v == ROOT_STAR:
            return None
        if v == ROOT:
            return ROOT_STAR
        return v[:-1]

    def spine(self) -> list:
        """Vertex path from the artificial parent down to the pivot."""
        path = [self.x]
        while path[-1] != ROOT_STAR:
            path.append(self.parent(path[-1]))
        return path[::-1]

    def swap_edges(self) -> set:
        """Directed edges whose weight the pivot transform replaces by the
        reverse weight: tail strictly inside the spine, head adjacent on it."""
        sp = self.spine()
        edges = set()
        for i in range(1, len(sp) - 1):
            edges.add((sp[i], sp[i + 1]))
            edges.add((sp[i], sp[i - 1]))
        return edges

    def swapped_weights(self) -> dict:
        swap = self.swap_edges()
        return {
            e: (self.weights[(e[1], e[0])] if e in swap else a)
            for e, a in self.weights.items()
        }

    def descendants_of_x(self) -> set:
        out = set()
        stack = list(self.children.get(self.x, ()))
        while stack:
            v = stack.pop()
            out.add(v)
            stack.extend(self.children.get(v, ()))
        return out

    def digraph(self, weights: dict | None = None, *, below_x: bool = True) -> WeightedDigraph:
        """Weighted digraph of the tree; ``below_x=False`` removes the strict
        descendants of the pivot (the fresh-path identity lives on that
        restriction, where the pivot is a leaf)."""
        w = self.weights if weights is None else weights
        if below_x:
            drop: set = set()
        else:
            drop = self.descendants_of_x()
        kept = {e: a for e, a in w.items() if e[0] not in drop and e[1] not in drop}
        return WeightedDigraph(kept)

    def check_balance(self) -> bool:
        """Weight balance along the spine: for every interior spine vertex y
        with spine child yj, a(y,parent) + a(y,yj) = a(parent,y) + a(yj,y)."""
        sp = self.spine()
        for i in range(1, len(sp) - 1):
            y, par, yj = sp[i], sp[i - 1], sp[i + 1]
            lhs = self.weights[(y, par)] + self.weights[(y, yj)]
            rhs = self.weights[(par, y)] + self.weights[(yj, y)]
            if abs(lhs - rhs) > 1e-12 * max(abs(lhs), abs(rhs), 1.0):
                return False
        return True


def psi_transform(t: MarkedTree, path):
    """Pivot transform applied to a path: returns the transformed graph (same
    adjacency, spine weights swapped), the transformed vertex sequence, and
    the swapped weight map.

    Re-hanging at the pivot is a bijection that keeps every vertex adjacent to
    the same vertices, so names are preserved and edge local times are
    unchanged by construction.
    """
    if path and any(v not in t.children and v != ROOT_STAR for v in path):
        raise ValueError("path leaves the tree")
    alpha_prime = t.swapped_weights()
    return t.digraph(alpha_prime), list(path), alpha_prime


def _valid_fresh_path(t: MarkedTree, gamma) -> str | None:
    """None when gamma is a fresh root-parent-to-pivot path, else the reason."""
    gamma = list(gamma)
    if len(gamma) < 2:
        return "path too short"
    if gamma[0] != ROOT_STAR:
        return "path must start at the artificial parent"
    if gamma[-1] != t.x:
        return "path must end at the pivot"
    if ROOT_STAR in gamma[1:]:
        return "path revisits the artificial parent"
    if t.x in gamma[:-1]:
        return "path visits the pivot before its end"
    below = t.descendants_of_x()
    if any(v in below for v in gamma):
        return "path leaves the tree above the pivot"
    return None


def verify_fresh_reversal(t: MarkedTree, gamma) -> CheckResult:
    """Fresh-path reversal identity: the annealed probability of a first
    passage from the artificial parent to the pivot equals the weight ratio
    a(pivot_parent, pivot) / a(root_parent, root) times the annealed
    probability, under swapped spine weights, of the reversed path with its
    forced first step dropped."""
    gamma = list(gamma)
    reason = _valid_fresh_path(t, gamma)
    if reason is None and not t.check_balance():
        reason = "spine weights violate the balance condition"
    if reason is not None:
        return CheckResult(math.nan, math.nan, False, skipped=True, reason=reason)

    g = t.digraph(below_x=False)
    lhs = errw_path_probability(g, gamma)
    g_prime = t.digraph(t.swapped_weights(), below_x=False)
    x_star = t.parent(t.x)
    ratio = t.weights[(x_star, t.x)] / t.weights[(ROOT_STAR, ROOT)]
    rhs = ratio * errw_path_probability(g_prime, gamma[::-1][1:])
    ok = math.isclose(lhs, rhs, rel_tol=_REL_TOL)
    return CheckResult(lhs, rhs, ok)


def _valid_second_path(t: MarkedTree, gamma2) -> str | None:
    gamma2 = list(gamma2)
    if not gamma2 or gamma2[0] != t.x:
        return "second path must start at the pivot"
    if ROOT_STAR in gamma2:
        return "second path visits the artificial parent"
    in_subtree = {t.x} | t.descendants_of_x()
    if gamma2[-1] not in in_subtree:
        return "second path must end in the pivot subtree"
    return None


def verify_two_walk_reversal(t: MarkedTree, gamma1, gamma2) -> CheckResult:
    """Two-walk reversal identity: the annealed two-path probability of a
    fresh path gamma1 followed (in the same environment) by gamma2 from the
    pivot equals the crossing factor phi(k) -- k the number of times gamma2
    crosses from the pivot's parent to the pivot -- times the two-path
    probability, under swapped weights, of the reversed-and-truncated gamma1
    and gamma2."""
    gamma1, gamma2 = list(gamma1), list(gamma2)
    reason = _valid_fresh_path(t, gamma1)
    if reason is None:
        reason = _valid_second_path(t, gamma2)
    if reason is None and not t.check_balance():
        reason = "spine weights violate the balance condition"
    if reason is not None:
        return CheckResult(math.nan, math.nan, False, skipped=True, reason=reason)

    g = t.digraph()
    lhs = two_path_product(g, gamma1, gamma2)

    x_star = t.parent(t.x)
    k = edge_local_times(gamma2).get((x_star, t.x), 0)
    ap = t.weights[(t.x, x_star)]
    ac = t.weights[(x_star, t.x)]
    crossing_factor = phi(k, ParamSet(ap, ac))

    g_prime = t.digraph(t.swapped_weights())
    rev1 = gamma1[::-1][1:]
    p_rev1 = errw_path_probability(g_prime, rev1)
    shifted = g_prime.with_shifted_weights(edge_local_times(rev1))
    p_g2 = errw_path_probability(shifted, gamma2)
    rhs = crossing_factor * p_rev1 * p_g2
    ok = math.isclose(lhs, rhs, rel_tol=_REL_TOL)
    return CheckResult(lhs, rhs, ok)


def enumerate_fresh_paths(t: MarkedTree, max_len: int):
    """All fresh root-parent-to-pivot paths of at most ``max_len`` steps that
    stay off the pivot subtree (depth-first enumeration)."""
    below = t.descendants_of_x()
    out = []

    def step(path):
        v = path[-1]
        if v == t.x:
            out.append(list(path))
            return
        if len(path) - 1 >= max_len:
            return
        nbrs = [ROOT] if v == ROOT_STAR else [t.parent(v)] + list(t.children.get(v, ()))
        for w in nbrs:
            if w == ROOT_STAR or w in below:
                continue
            path.append(w)
            step(path)
            path.pop()

    step([ROOT_STAR])
    return out


def enumerate_second_paths(t: MarkedTree, max_len: int):
    """All paths from the pivot of at most ``max_len`` steps that avoid the
    artificial parent and end inside the pivot subtree."""
    in_subtree = {t.x} | t.descendants_of_x()
    out = []

    def step(path):
        if len(path) > 1 and path[-1] in in_subtree:
            out.append(list(path))
        if len(path) - 1 >= max_len:
            return
        v = path[-1]
        nbrs = ([t.parent(v)] if v != ROOT else []) + list(t.children.get(v, ()))
        for w in nbrs:
            if w == ROOT_STAR:
                continue
            path.append(w)
            step(path)
            path.pop()

    step([t.x])
    return out


def check_flow_conservation(path) -> bool:
    """Every vertex other than the endpoints enters as often as it exits."""
    path = list(path)
    counts = edge_local_times(path)
    inflow: dict = {}
    outflow: dict = {}
    for (u, v), n in counts.items():
        outflow[u] = outflow.get(u, 0) + n
        inflow[v] = inflow.get(v, 0) + n
    verts = set(inflow) | set(outflow)
    for v in verts:
        net = outflow.get(v, 0) - inflow.get(v, 0)
        if v == path[0] and v != path[-1]:
            if net != 1:
                return False
        elif v == path[-1] and v != path[0]:
            if net != -1:
                return False
        elif net != 0:
            return False
    return True


def check_reverse_local_times(t: MarkedTree, gamma) -> bool:
    """Fresh paths cross every edge off the swap set (and off the two terminal
    spine edges) equally often in both directions."""
    counts = edge_local_times(gamma)
    excluded = t.swap_edges() | {(ROOT_STAR, ROOT), (t.x, t.parent(t.x))}
    edges = set(counts) | {(v, u) for u, v in counts}
    for e in edges:
        if e in excluded or (e[1], e[0]) in excluded:
            continue
        if counts.get(e, 0) != counts.get((e[1], e[0]), 0):
            return False
    return True


@dataclass
class DoubleTree:
    """Two truncated environments glued at their roots: each root's parent
    slot points at the other root."""

    env_minus: EnvTree
    env_plus: EnvTree
    depth: int


def sample_double_tree(
    dist: OffspringDistribution, depth: int, p: ParamSet, rng: np.random.Generator
) -> DoubleTree:
    from .branching import sample_tree

    t_minus = sample_tree(dist, depth, rng)
    t_plus = sample_tree(dist, depth, rng)
    return DoubleTree(
        env_minus=sample_env_tree(t_minus, p, rng),
        env_plus=sample_env_tree(t_plus, p, rng),
        depth=depth,
    )


def _bias_lhs(dt: DoubleTree, p: ParamSet, k_max: int) -> tuple[float, float]:
    """Expected crossing-weighted occupation of the plus root, computed
    exactly on the chain augmented by the minus-to-plus crossing count.

    Crossings beyond ``k_max`` are dropped (series truncation). Returns the
    sum and the contribution of the top crossing level, an upper proxy for
    the truncation error.
    """
    envs = {+1: dt.env_plus, -1: dt.env_minus}
    # transient (non-boundary) states on both sides
    states = []
    index = {}
    for side in (+1, -1):
        tree = envs[side].tree
        for v in range(tree.n_vertices):
            if not tree.boundary[v]:
                for k in range(k_max + 1):
                    index[(side, v, k)] = len(states)
                    states.append((side, v, k))
    n = len(states)
    if n * n > 4 * 10**8:
        raise UnsupportedRegimeError(f"augmented chain too large ({n} states)")
    q = np.zeros((n, n))
    for i, (side, v, k) in enumerate(states):
        nbrs, probs = envs[side].transition(v)
        for w, pr in zip(nbrs, probs):
            if w == -1:  # crossing the root edge to the other side
                if side == -1:
                    if k + 1 <= k_max:  # minus-to-plus crossing increments k
                        q[i, index[(+1, 0, k + 1)]] = pr
                else:
                    q[i, index[(-1, 0, k)]] = pr
            else:
                if not envs[side].tree.boundary[w]:
                    q[i, index[(side, w, k)]] = pr
    start = np.zeros(n)
    start[index[(+1, 0, 0)]] = 1.0
    visits = np.linalg.solve(np.eye(n) - q.T, start)
    total = sum(phi(k, p) * visits[index[(+1, 0, k)]] for k in range(k_max + 1))
    tail = phi(k_max, p) * visits[index[(+1, 0, k_max)]]
    return float(total), float(tail)


def verify_quenched_bias(dt: DoubleTree, p: ParamSet) -> CheckResult:
    """Quenched bias identity on a finite double tree: the crossing-weighted
    expected occupation of the plus root (walk absorbed at the depth
    frontier) equals (1 - beta_plus)/eta(plus root -> minus root) times the
    crossing series in (1 - beta_plus)(1 - beta_minus)."""
    comp_plus = beta_complement_truncated(dt.env_plus, dt.depth)
    comp_minus = beta_complement_truncated(dt.env_minus, dt.depth)
    ratio = comp_plus * comp_minus
    if ratio >= 1.0 - 1e-9:
        raise UnsupportedRegimeError(
            "both sides hold the walk forever; the crossing series diverges"
        )

    def k_needed() -> int:
        k = 0
        while phi(k, p) * ratio**k >= _SERIES_EPS:
            k += 1
            if k > 100_000:
                raise UnsupportedRegimeError("crossing series converges too slowly")
        return max(k, 2)

    k_max = k_needed()
    for attempt in range(2):
        lhs, tail = _bias_lhs(dt, p, k_max)
        if tail <= 1e-12 * max(lhs, 1e-300):
            break
        k_max *= 2  # truncation visibly insufficient: enlarge once and retry
    else:
        raise UnsupportedRegimeError("crossing-count truncation did not converge")

    eta_cross = dt.env_plus.eta_parent[0]
    series = 0.0
    for k in range(k_max + 1):
        term = phi(k, p) * ratio**k
        series += term
        if term < _SERIES_EPS * max(series, 1.0):
            break
    rhs = comp_plus / eta_cross * series
    ok = math.isclose(lhs, rhs, rel_tol=1e-8)
    return CheckResult(lhs, rhs, ok)


def run_verification_suite(seed: int = 0) -> dict:
    """Battery of reversal-identity checks; returns a JSON-ready report with
    pass counts and worst residuals per identity."""
    rng = np.random.default_rng(seed)
    report = {}

    def tally(name, results):
        done = [r for r in results if not r.skipped]
        report[name] = {
            "n_pass": sum(r.passed for r in done),
            "n_fail": sum(not r.passed for r in done),
            "n_skip": len(results) - len(done),
            "max_residual": max((r.residual for r in done), default=0.0),
        }

    p = ParamSet(2.0, 0.5)
    t = MarkedTree.standard(full_tree_children(2, 3), p, x="00")
    fresh = [verify_fresh_reversal(t, g) for g in enumerate_fresh_paths(t, 7)]
    tally("fresh_reversal", fresh)

    g1s = enumerate_fresh_paths(t, 5)
    g2s = enumerate_second_paths(t, 5)
    two = [
        verify_two_walk_reversal(t, g1, g2)
        for g1, g2 in itertools.product(g1s, g2s)
    ]
    tally("two_walk_reversal", two)

    dist = OffspringDistribution((0.0, 0.0, 1.0))
    pq = ParamSet(1.0, 1.0)
    bias = [
        verify_quenched_bias(sample_double_tree(dist, 3, pq, rng), pq)
        for _ in range(100)
    ]
    tally("quenched_bias", bias)

    report["all_pass"] = all(v["n_fail"] == 0 for v in report.values() if isinstance(v, dict))
    return report
