"""Quenched and reinforced walk simulators, epoch detection, and empirical
speed estimators.

Long transient runs need tree depth linear in the step count but only along
the visited spine, so the production simulators grow a lazy tree on demand;
the fixed-environment simulator on a truncated tree is kept for oracle tests
and reports boundary hits instead.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .branching import OffspringDistribution, TruncatedTree, DEFAULT_VERTEX_CAP
from .dirichlet import EnvTree
from .exceptions import InsufficientDataError, VertexCapError
from .specfun import ParamSet

__all__ = [
    "Trajectory",
    "simulate_rwde",
    "simulate_errw",
    "simulate_rwde_lazy",
    "simulate_errw_lazy",
    "detect_epochs",
    "speed_direct",
    "speed_regen",
]

ROOT_PARENT = -1  # artificial parent of the root

DEFAULT_TAIL_FRACTION = 0.2


@dataclass
class Trajectory:
    """Vertex sequence of a walk together with the parent relation of every
    visited vertex (depths are derived; the artificial parent sits at -1)."""

    vertices: np.ndarray
    depths: np.ndarray
    parent_map: dict
    boundary_hit: bool = False
    hit_root_parent: bool = False
    known_extinct: bool = False

    @property
    def n_steps(self) -> int:
        return len(self.vertices) - 1


def detect_epochs(traj: Trajectory, tail_margin: int | None = None):
    """Fresh epochs (first visits) and confirmed regeneration epochs.

    A fresh epoch n is a regeneration epoch if the parent of X_n is never
    visited from time n on; on a finite path that statement is right-censored,
    so only epochs at most ``horizon = n_steps - tail_margin`` are confirmed.
    Returns (fresh, confirmed_regenerations, horizon).
    """
    v = traj.vertices
    n = len(v)
    if n < 1:
        raise ValueError("empty trajectory")
    if tail_margin is None:
        tail_margin = max(int(traj.n_steps * DEFAULT_TAIL_FRACTION), 1)
    horizon = traj.n_steps - tail_margin

    first_visit: dict = {}
    last_visit: dict = {}
    for i, x in enumerate(v):
        if x not in first_visit:
            first_visit[x] = i
        last_visit[x] = i

    fresh = sorted(first_visit.values())
    regen = []
    for i in fresh:
        if i == 0 or i > horizon:
            continue
        x = int(v[i])
        if x == ROOT_PARENT:
            continue
        par = traj.parent_map.get(x)
        if par is None:
            continue
        # fresh vertices are entered from their parent; regeneration means the
        # parent is never seen again
        if last_visit.get(par, -1) == i - 1:
            regen.append(i)
    return fresh, regen, horizon


def speed_direct(traj: Trajectory) -> float:
    """Depth gained per step over the whole run."""
    if traj.n_steps < 1:
        raise ValueError("trajectory too short")
    return float(traj.depths[-1] - traj.depths[0]) / traj.n_steps


def speed_regen(traj: Trajectory, tail_margin: int | None = None) -> float:
    """Mean depth increment over mean time increment between confirmed
    regeneration epochs; the segment before the first regeneration has a
    different law and is discarded."""
    _, regen, _ = detect_epochs(traj, tail_margin)
    if len(regen) < 2:
        raise InsufficientDataError(
            f"need at least 2 confirmed regenerations, found {len(regen)}"
        )
    times = np.asarray(regen)
    depths = traj.depths[times]
    return float(np.diff(depths).mean() / np.diff(times).mean())


def simulate_rwde(
    env: EnvTree,
    start: int,
    n_steps: int,
    rng: np.random.Generator,
    *,
    root_parent: str = "reflecting",
) -> Trajectory:
    """Quenched walk on a fixed truncated environment.

    Stops with ``boundary_hit`` set when the walk reaches the truncation
    frontier (callers deepen the tree or discard the run); at the artificial
    parent the walk returns to the root deterministically, or is absorbed
    when ``root_parent="absorbing"``.
    """
    tree = env.tree
    verts = [start]
    pos = start
    uniforms = rng.random(n_steps)
    boundary_hit = False
    hit_root_parent = False
    for step in range(n_steps):
        if pos == ROOT_PARENT:
            pos = 0  # only neighbor of the artificial parent
            verts.append(pos)
            continue
        nbrs, probs = env.transition(pos)
        u = uniforms[step]
        acc = 0.0
        nxt = nbrs[-1]
        for w, pr in zip(nbrs, probs):
            acc += pr
            if u < acc:
                nxt = w
                break
        if nxt == ROOT_PARENT and root_parent == "absorbing":
            verts.append(nxt)
            hit_root_parent = True
            break
        verts.append(nxt)
        pos = nxt
        if pos != ROOT_PARENT and tree.boundary[pos]:
            boundary_hit = True
            break

    vertices = np.asarray(verts, dtype=np.int64)
    depths = np.where(vertices == ROOT_PARENT, -1, tree.depth[np.maximum(vertices, 0)])
    parent_map = {int(x): int(tree.parent[x]) for x in set(verts) if x != ROOT_PARENT}
    return Trajectory(
        vertices=vertices,
        depths=depths.astype(np.int64),
        parent_map=parent_map,
        boundary_hit=boundary_hit,
        hit_root_parent=hit_root_parent,
    )


def simulate_errw(
    tree: TruncatedTree,
    p: ParamSet,
    start: int,
    n_steps: int,
    rng: np.random.Generator,
) -> Trajectory:
    """Reinforced walk on a fixed truncated tree: each step is drawn with
    probability proportional to edge weight plus running directed local time.
    Only visited edges hold state (a hash map keyed by directed edge)."""
    local = {}
    verts = [start]
    pos = start
    uniforms = rng.random(n_steps)
    boundary_hit = False
    for step in range(n_steps):
        if pos == ROOT_PARENT:
            nxt = 0
        else:
            kids = list(tree.children(pos))
            nbrs = [int(tree.parent[pos])] + kids
            weights = [p.alpha_p + local.get((pos, nbrs[0]), 0)]
            weights += [p.alpha_c + local.get((pos, c), 0) for c in kids]
            total = sum(weights)
            u = uniforms[step] * total
            acc = 0.0
            nxt = nbrs[-1]
            for w, wt in zip(nbrs, weights):
                acc += wt
                if u < acc:
                    nxt = w
                    break
        local[(pos, nxt)] = local.get((pos, nxt), 0) + 1
        verts.append(nxt)
        pos = nxt
        if pos != ROOT_PARENT and tree.boundary[pos]:
            boundary_hit = True
            break

    vertices = np.asarray(verts, dtype=np.int64)
    depths = np.where(vertices == ROOT_PARENT, -1, tree.depth[np.maximum(vertices, 0)])
    parent_map = {int(x): int(tree.parent[x]) for x in set(verts) if x != ROOT_PARENT}
    return Trajectory(
        vertices=vertices,
        depths=depths.astype(np.int64),
        parent_map=parent_map,
        boundary_hit=boundary_hit,
    )


class _BlockSampler:
    """Draws scalars from a generator method in refillable blocks: tree growth
    needs millions of tiny variates, and per-call numpy overhead dominates a
    naive implementation."""

    def __init__(self, draw_block, block: int = 8192):
        self._draw_block = draw_block
        self._block = block
        self._buf = ()
        self._pos = 0

    def take(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._draw_block(self._block)
            self._pos = 0
        val = self._buf[self._pos]
        self._pos += 1
        return val


class _LazyTree:
    """Galton-Watson tree realized on demand: a vertex's offspring count (and,
    for the quenched walk, its Dirichlet exit vector) is sampled on first
    visit; child slots stay stubs until walked to."""

    def __init__(self, dist: OffspringDistribution, rng: np.random.Generator, cap: int):
        self.dist = dist
        self.rng = rng
        self.cap = cap
        self.cum_probs = np.cumsum(dist.probs).tolist()
        self.parent = [ROOT_PARENT]
        self.depth = [0]
        self.nu = [-1]
        self.children: list = [None]
        self.n_stubs = 1
        self._uniforms = _BlockSampler(lambda n: rng.random(n).tolist())

    def _draw_nu(self) -> int:
        return bisect.bisect_right(self.cum_probs, self._uniforms.take())

    def realize(self, v: int) -> int:
        """Sample the offspring count of a stub and allocate child stubs."""
        nu = self._draw_nu()
        self.nu[v] = nu
        first = len(self.parent)
        if first + nu > self.cap:
            raise VertexCapError(f"lazy tree exceeded vertex cap {self.cap}")
        for _ in range(nu):
            self.parent.append(v)
            self.depth.append(self.depth[v] + 1)
            self.nu.append(-1)
            self.children.append(None)
        self.children[v] = list(range(first, first + nu))
        self.n_stubs += nu - 1
        return nu

    @property
    def known_extinct(self) -> bool:
        return self.n_stubs == 0


def _finish_lazy(tree: _LazyTree, verts: list, hit_root_parent: bool) -> Trajectory:
    vertices = np.asarray(verts, dtype=np.int64)
    depth_arr = np.asarray(tree.depth, dtype=np.int64)
    depths = np.where(vertices == ROOT_PARENT, -1, depth_arr[np.maximum(vertices, 0)])
    parent_map = {int(x): tree.parent[x] for x in set(verts) if x != ROOT_PARENT}
    return Trajectory(
        vertices=vertices,
        depths=depths.astype(np.int64),
        parent_map=parent_map,
        boundary_hit=False,
        hit_root_parent=hit_root_parent,
        known_extinct=tree.known_extinct,
    )


def simulate_rwde_lazy(
    dist: OffspringDistribution,
    p: ParamSet,
    n_steps: int,
    rng: np.random.Generator,
    *,
    root_parent: str = "reflecting",
    vertex_cap: int = DEFAULT_VERTEX_CAP,
) -> Trajectory:
    """Quenched walk in a Dirichlet environment on a lazily grown tree,
    started at the root; the tree and environment are averaged over by
    replication."""
    tree = _LazyTree(dist, rng, vertex_cap)
    cumeta: list = [None]
    gamma_p = _BlockSampler(lambda n: rng.gamma(p.alpha_p, size=n).tolist())
    gamma_c = _BlockSampler(lambda n: rng.gamma(p.alpha_c, size=n).tolist())

    def realize(v):
        nu = tree.realize(v)
        while len(cumeta) < len(tree.parent):
            cumeta.append(None)
        g = [gamma_p.take()] + [gamma_c.take() for _ in range(nu)]
        total = sum(g)
        acc = 0.0
        cum = []
        for gi in g:
            acc += gi
            cum.append(acc / total)
        cumeta[v] = cum

    realize(0)
    verts = [0]
    pos = 0
    hit_root_parent = False
    uniforms = rng.random(n_steps).tolist()
    for step in range(n_steps):
        if pos == ROOT_PARENT:
            pos = 0
            verts.append(0)
            continue
        cum = cumeta[pos]
        i = bisect.bisect_right(cum, uniforms[step])
        if i == 0:
            nxt = tree.parent[pos]
        else:
            nxt = tree.children[pos][i - 1]
            if tree.nu[nxt] < 0:
                realize(nxt)
        verts.append(nxt)
        pos = nxt
        if pos == ROOT_PARENT and root_parent == "absorbing":
            hit_root_parent = True
            break
    return _finish_lazy(tree, verts, hit_root_parent)


def simulate_errw_lazy(
    dist: OffspringDistribution,
    p: ParamSet,
    n_steps: int,
    rng: np.random.Generator,
    *,
    root_parent: str = "reflecting",
    vertex_cap: int = DEFAULT_VERTEX_CAP,
) -> Trajectory:
    """Reinforced walk on a lazily grown tree started at the root."""
    tree = _LazyTree(dist, rng, vertex_cap)
    tree.realize(0)
    local = {}
    verts = [0]
    pos = 0
    hit_root_parent = False
    uniforms = rng.random(n_steps).tolist()
    ap, ac = p.alpha_p, p.alpha_c
    for step in range(n_steps):
        if pos == ROOT_PARENT:
            nxt = 0
        else:
            kids = tree.children[pos]
            par = tree.parent[pos]
            weights = [ap + local.get((pos, par), 0)]
            weights += [ac + local.get((pos, c), 0) for c in kids]
            total = sum(weights)
            u = uniforms[step] * total
            acc = 0.0
            i_sel = len(weights) - 1
            for i, wt in enumerate(weights):
                acc += wt
                if u < acc:
                    i_sel = i
                    break
            if i_sel == 0:
                nxt = par
            else:
                nxt = kids[i_sel - 1]
                if tree.nu[nxt] < 0:
                    tree.realize(nxt)
        local[(pos, nxt)] = local.get((pos, nxt), 0) + 1
        verts.append(nxt)
        pos = nxt
        if pos == ROOT_PARENT and root_parent == "absorbing":
            hit_root_parent = True
            break
    return _finish_lazy(tree, verts, hit_root_parent)
