"""Walk simulators, epoch detection, and empirical speed estimators."""

import numpy as np
import pytest

from errw.branching import OffspringDistribution, sample_tree
from errw.dirichlet import EnvTree, sample_env_tree
from errw.exceptions import InsufficientDataError, VertexCapError
from errw.specfun import ParamSet
from errw.walk import (
    Trajectory,
    detect_epochs,
    simulate_errw,
    simulate_errw_lazy,
    simulate_rwde,
    simulate_rwde_lazy,
    speed_direct,
    speed_regen,
)

BINARY = OffspringDistribution((0.0, 0.0, 1.0))
RAY = OffspringDistribution((0.0, 1.0))


def make_traj(vertices, depths, parent_map):
    return Trajectory(
        vertices=np.asarray(vertices, dtype=np.int64),
        depths=np.asarray(depths, dtype=np.int64),
        parent_map=parent_map,
    )


def test_detect_epochs_pure_descent():
    # straight descent: every epoch is fresh and every confirmed one a
    # regeneration
    n = 10
    traj = make_traj(range(n), range(n), {v: v - 1 for v in range(n)})
    fresh, regen, horizon = detect_epochs(traj, tail_margin=2)
    assert fresh == list(range(n))
    assert regen == list(range(1, horizon + 1))
    assert horizon == n - 1 - 2


def test_detect_epochs_oscillation():
    # x -> child -> x -> child: fresh epochs {0, 1}; epoch 1 is not a
    # regeneration because the parent is revisited
    traj = make_traj([0, 1, 0, 1], [0, 1, 0, 1], {1: 0, 0: -1})
    fresh, regen, _ = detect_epochs(traj, tail_margin=1)
    assert fresh == [0, 1]
    assert regen == []


def test_detect_epochs_horizon_censors_tail():
    n = 10
    traj = make_traj(range(n), range(n), {v: v - 1 for v in range(n)})
    _, regen, horizon = detect_epochs(traj, tail_margin=5)
    assert horizon == 4
    assert max(regen) <= 4


def test_detect_epochs_backtrack_then_escape():
    # 0 -> 1 -> 0 -> 2 -> 3: fresh {0,1,3,4}; epoch 3 (vertex 2) is a
    # regeneration only if 0 is never seen after; epoch 1 is not
    traj = make_traj([0, 1, 0, 2, 3], [0, 1, 0, 1, 2], {1: 0, 2: 0, 3: 2, 0: -1})
    fresh, regen, _ = detect_epochs(traj, tail_margin=1)
    assert fresh == [0, 1, 3, 4]
    assert regen == [3]


def test_speed_estimators_on_descent():
    n = 20
    traj = make_traj(range(n), range(n), {v: v - 1 for v in range(n)})
    assert speed_direct(traj) == 1.0
    assert speed_regen(traj, tail_margin=3) == 1.0


def test_speed_regen_insufficient_data():
    traj = make_traj([0, 1, 0, 1], [0, 1, 0, 1], {1: 0, 0: -1})
    with pytest.raises(InsufficientDataError):
        speed_regen(traj, tail_margin=1)


def test_simulate_rwde_forced_descent():
    # environment with overwhelming forward bias: walk marches to the boundary
    rng = np.random.default_rng(0)
    tree = sample_tree(RAY, 50, rng)
    n_verts = tree.n_vertices
    env = EnvTree(
        tree=tree,
        eta_parent=np.full(n_verts, 1e-12),
        eta_children=[np.array([1.0 - 1e-12]) if not tree.boundary[v] else None for v in range(n_verts)],
    )
    traj = simulate_rwde(env, 0, 200, rng)
    assert traj.boundary_hit
    assert traj.depths[-1] == 50
    assert len(traj.vertices) == 51  # straight down, then stopped


def test_simulate_rwde_absorbing_root_parent():
    rng = np.random.default_rng(1)
    tree = sample_tree(RAY, 30, rng)
    env = EnvTree(
        tree=tree,
        eta_parent=np.full(tree.n_vertices, 1.0 - 1e-12),
        eta_children=[np.array([1e-12]) if not tree.boundary[v] else None for v in range(tree.n_vertices)],
    )
    traj = simulate_rwde(env, 0, 200, rng, root_parent="absorbing")
    assert traj.hit_root_parent
    assert traj.vertices[-1] == -1


def test_trajectory_steps_follow_tree_edges():
    rng = np.random.default_rng(2)
    tree = sample_tree(BINARY, 8, rng)
    env = sample_env_tree(tree, ParamSet(1.0, 1.0), rng)
    traj = simulate_rwde(env, 0, 500, rng)
    for u, v in zip(traj.vertices, traj.vertices[1:]):
        u, v = int(u), int(v)
        if u == -1 or v == -1:
            assert {u, v} == {-1, 0}
            continue
        assert traj.parent_map[v] == u or traj.parent_map[u] == v


def test_simulate_errw_reinforcement_bias():
    # with massive parent weight the reinforced walk hugs the root
    rng = np.random.default_rng(3)
    tree = sample_tree(BINARY, 6, rng)
    traj = simulate_errw(tree, ParamSet(100.0, 0.01), 0, 400, rng)
    assert traj.depths.max() <= 2
    assert not traj.boundary_hit


def test_lazy_walks_consistent_structure():
    rng = np.random.default_rng(4)
    for simulate in (simulate_rwde_lazy, simulate_errw_lazy):
        traj = simulate(BINARY, ParamSet(1.0, 1.0), 2000, rng)
        assert traj.vertices[0] == 0
        assert len(traj.vertices) == 2001
        for u, v in zip(traj.vertices, traj.vertices[1:]):
            u, v = int(u), int(v)
            if u == -1 or v == -1:
                assert {u, v} == {-1, 0}
                continue
            assert traj.parent_map[v] == u or traj.parent_map[u] == v
        # depth increments are +-1 off the artificial parent
        d = np.diff(traj.depths)
        assert set(np.unique(np.abs(d))) <= {1}
        assert not traj.known_extinct  # binary trees never die out


def test_lazy_walk_extinct_tree_detection():
    dist = OffspringDistribution((0.6, 0.0, 0.0, 0.4))  # heavy extinction
    rng = np.random.default_rng(5)
    seen_extinct = False
    for _ in range(50):
        traj = simulate_rwde_lazy(dist, ParamSet(1.0, 1.0), 400, rng)
        if traj.known_extinct:
            seen_extinct = True
            # every visited vertex had all offspring realized: the walk can
            # only have explored a finite tree
            assert traj.depths.max() < 400
    assert seen_extinct


def test_lazy_walk_vertex_cap():
    rng = np.random.default_rng(6)
    with pytest.raises(VertexCapError):
        simulate_rwde_lazy(BINARY, ParamSet(0.5, 5.0), 10**5, rng, vertex_cap=500)


def test_lazy_walk_absorbing_root_parent():
    rng = np.random.default_rng(7)
    # recurrent parameters: the walk returns to the artificial parent quickly
    traj = simulate_rwde_lazy(RAY, ParamSet(5.0, 0.5), 10**4, rng, root_parent="absorbing")
    assert traj.hit_root_parent
    assert traj.vertices[-1] == -1


def test_transient_walk_positive_drift():
    rng = np.random.default_rng(8)
    traj = simulate_rwde_lazy(BINARY, ParamSet(1.0, 1.0), 50_000, rng)
    v_direct = speed_direct(traj)
    v_regen = speed_regen(traj)
    assert v_direct > 0.15
    assert v_regen == pytest.approx(v_direct, rel=0.15)


def test_recurrent_walk_near_zero_drift():
    # ray with alpha_p > alpha_c is recurrent: drift collapses and most runs
    # lack confirmed regenerations
    rng = np.random.default_rng(9)
    insufficient = 0
    drifts = []
    for _ in range(10):
        traj = simulate_rwde_lazy(RAY, ParamSet(2.0, 1.0), 5000, rng)
        drifts.append(speed_direct(traj))
        try:
            speed_regen(traj)
        except InsufficientDataError:
            insufficient += 1
    assert np.mean(drifts) < 0.05
    assert insufficient >= 5


def test_annealed_equivalence_rwde_errw():
    # the reinforced walk is the annealed Dirichlet walk: pooled drift
    # estimates over replicates agree within 4 pooled SE
    p = ParamSet(1.0, 1.0)
    n_rep, n_steps = 60, 3000
    speeds = {"rwde": [], "errw": []}
    for i in range(n_rep):
        r1 = np.random.default_rng((10, i))
        r2 = np.random.default_rng((11, i))
        speeds["rwde"].append(speed_direct(simulate_rwde_lazy(BINARY, p, n_steps, r1)))
        speeds["errw"].append(speed_direct(simulate_errw_lazy(BINARY, p, n_steps, r2)))
    m1, m2 = np.mean(speeds["rwde"]), np.mean(speeds["errw"])
    se = np.hypot(
        np.std(speeds["rwde"]) / np.sqrt(n_rep), np.std(speeds["errw"]) / np.sqrt(n_rep)
    )
    assert abs(m1 - m2) < 4 * se
