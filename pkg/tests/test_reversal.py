"""Path-reversal machinery: spine weight swap, the three identities, and the
supporting combinatorial facts."""

import itertools

import numpy as np
import pytest

from errw.branching import OffspringDistribution, sample_tree
from errw.conductance import beta_complement_truncated, beta_truncated
from errw.dirichlet import EnvTree, errw_path_probability, sample_env_tree
from errw.reversal import (
    DoubleTree,
    MarkedTree,
    check_flow_conservation,
    check_reverse_local_times,
    enumerate_fresh_paths,
    enumerate_second_paths,
    full_tree_children,
    psi_transform,
    run_verification_suite,
    sample_double_tree,
    verify_fresh_reversal,
    verify_quenched_bias,
    verify_two_walk_reversal,
)
from errw.specfun import ParamSet

P_STD = ParamSet(2.0, 0.5)


def binary_marked(depth=3, x="00", p=P_STD):
    return MarkedTree.standard(full_tree_children(2, depth), p, x)


def test_swap_edges_worked_example():
    # pivot = first child of first child: swap set pairs each interior spine
    # vertex with its two spine neighbors
    t = binary_marked(x="00")
    expected = {("", "0"), ("", "*"), ("0", "00"), ("0", "")}
    assert t.swap_edges() == expected


def test_trivial_pivot_at_root():
    # pivot = root: no interior spine vertices, no swaps
    t = binary_marked(x="")
    assert t.swap_edges() == set()
    assert t.swapped_weights() == t.weights


def test_pivot_validation():
    with pytest.raises(ValueError):
        MarkedTree.standard(full_tree_children(2, 2), P_STD, x="banana")
    with pytest.raises(ValueError):
        MarkedTree.standard(full_tree_children(2, 2), P_STD, x="*")


def test_swapped_weights_values():
    t = binary_marked(x="00")
    w = t.swapped_weights()
    # swapped edges take the reverse direction's weight
    assert w[("", "0")] == t.weights[("0", "")]  # alpha_c -> alpha_p
    assert w[("0", "")] == t.weights[("", "0")]
    assert w[("", "*")] == t.weights[("*", "")]
    # off-spine edges unchanged
    assert w[("1", "10")] == t.weights[("1", "10")]
    # the two terminal spine edges (out of the endpoints) are not in the swap
    # set and keep their weights
    assert w[("*", "")] == t.weights[("*", "")]
    assert w[("00", "0")] == t.weights[("00", "0")]


def test_psi_transform_preserves_local_times():
    t = binary_marked()
    rng = np.random.default_rng(0)
    path = ["*"]
    for _ in range(10):
        v = path[-1]
        nbrs = ([""] if v == "*" else [t.parent(v)] + list(t.children.get(v, ())))
        path.append(str(rng.choice([w for w in nbrs if w != "*"])) if v != "*" else "")
    from errw.dirichlet import edge_local_times

    _, transformed, alpha_prime = psi_transform(t, path)
    assert edge_local_times(transformed) == edge_local_times(path)
    assert set(alpha_prime) == set(t.weights)
    with pytest.raises(ValueError):
        psi_transform(t, ["*", "nope"])


def test_fresh_reversal_shortest_path():
    t = binary_marked(depth=2, x="0")
    res = verify_fresh_reversal(t, ["*", "", "0"])
    assert res.passed and not res.skipped
    assert res.lhs == pytest.approx(res.rhs, rel=1e-10)


def test_fresh_reversal_exhaustive_depth2_pivot():
    # all fresh paths of length <= 7 to a depth-2 pivot on the binary tree
    t = binary_marked(depth=3, x="00")
    paths = enumerate_fresh_paths(t, 7)
    assert len(paths) > 5
    for gamma in paths:
        res = verify_fresh_reversal(t, gamma)
        assert res.passed, (gamma, res)
        assert res.residual < 1e-10


def test_fresh_reversal_skips_bad_paths():
    t = binary_marked(depth=2, x="0")
    assert verify_fresh_reversal(t, ["", "0"]).skipped  # wrong start
    assert verify_fresh_reversal(t, ["*", "", "1"]).skipped  # wrong end
    assert verify_fresh_reversal(t, ["*", "", "*", "", "0"]).skipped  # revisit
    assert verify_fresh_reversal(t, ["*", "", "0", "", "0"]).skipped  # pivot early


def test_fresh_reversal_general_balanced_weights():
    # non-(alpha_p, alpha_c) weights that satisfy the balance condition still
    # verify, with a weight ratio different from 1
    children = {"": ("0",), "0": ("00",), "00": ()}
    w = {
        ("*", ""): 1.0, ("", "*"): 2.0,
        ("", "0"): 3.0, ("0", ""): 2.5,
        ("0", "00"): 2.5, ("00", "0"): 3.0,
    }
    # balance at "": 2.0 + 3.0 = 1.0 + ? -> need alpha_(0,"") = 4.0
    w[("0", "")] = 4.0
    # balance at "0": 4.0 + alpha_(0,00) = 3.0 + alpha_(00,0)
    w[("0", "00")] = 1.5
    w[("00", "0")] = 2.5
    t = MarkedTree(children=children, weights=w, x="00")
    assert t.check_balance()
    ratio = w[("0", "00")] / w[("*", "")]
    assert ratio != 1.0
    for gamma in enumerate_fresh_paths(t, 7):
        res = verify_fresh_reversal(t, gamma)
        assert res.passed, (gamma, res.lhs, res.rhs)


def test_unbalanced_weights_demonstrate_necessity():
    # violating the balance condition is detected and reported as a skip;
    # forcing the computation shows the identity genuinely fails there
    children = {"": ("0",), "0": ("00",), "00": ()}
    w = {
        ("*", ""): 1.0, ("", "*"): 2.0,
        ("", "0"): 3.0, ("0", ""): 1.0,  # unbalanced at ""
        ("0", "00"): 1.5, ("00", "0"): 2.5,
    }
    t = MarkedTree(children=children, weights=w, x="00")
    assert not t.check_balance()
    res = verify_fresh_reversal(t, ["*", "", "0", "", "0", "00"])
    assert res.skipped
    # out-of-hypothesis probe (documented, not an identity assertion): the
    # two sides of the would-be identity differ for this path
    g = t.digraph(below_x=False)
    g_prime = t.digraph(t.swapped_weights(), below_x=False)
    gamma = ["*", "", "0", "", "0", "00"]
    lhs = errw_path_probability(g, gamma)
    rhs = (w[("0", "00")] / w[("*", "")]) * errw_path_probability(g_prime, gamma[::-1][1:])
    assert abs(lhs - rhs) > 1e-6 * lhs


def test_middle_equality_forced_first_step():
    # the artificial parent has a single outgoing edge, so dropping the forced
    # first step leaves the probability unchanged
    t = binary_marked(depth=3, x="00")
    g = t.digraph(below_x=False)
    for gamma in enumerate_fresh_paths(t, 7):
        assert errw_path_probability(g, gamma) == pytest.approx(
            errw_path_probability(g, gamma[1:]), rel=1e-14
        )


def test_flow_conservation_on_fresh_paths():
    t = binary_marked(depth=3, x="00")
    for gamma in enumerate_fresh_paths(t, 9):
        assert check_flow_conservation(gamma)


def test_reverse_local_times_off_swap_set():
    t = binary_marked(depth=3, x="00")
    for gamma in enumerate_fresh_paths(t, 9):
        assert check_reverse_local_times(t, gamma)


def test_two_walk_single_down_step():
    # gamma2 a single down-step never crosses the pivot's parent edge:
    # crossing factor phi(0) = 1
    t = binary_marked(depth=3, x="00")
    res = verify_two_walk_reversal(t, ["*", "", "0", "00"], ["00", "000"])
    assert res.passed and not res.skipped


def test_two_walk_one_excursion_crossing_factor():
    # gamma2 excursion through the pivot's parent: factor phi(1) =
    # (alpha_c + 1)/alpha_p enters the right side; identity still exact
    t = binary_marked(depth=3, x="00", p=ParamSet(2.0, 0.5))
    gamma2 = ["00", "0", "00", "000"]
    res = verify_two_walk_reversal(t, ["*", "", "0", "00"], gamma2)
    assert res.passed
    from errw.dirichlet import edge_local_times

    assert edge_local_times(gamma2)[("0", "00")] == 1


def test_two_walk_exhaustive_pairs():
    t = binary_marked(depth=3, x="00")
    g1s = enumerate_fresh_paths(t, 5)
    g2s = enumerate_second_paths(t, 5)
    assert g1s and g2s
    n_checked = 0
    for g1, g2 in itertools.product(g1s, g2s):
        res = verify_two_walk_reversal(t, g1, g2)
        assert not res.skipped
        assert res.passed, (g1, g2, res.lhs, res.rhs)
        assert res.residual < 1e-10
        n_checked += 1
    assert n_checked >= 100


def test_two_walk_skips_bad_gamma2():
    t = binary_marked(depth=3, x="00")
    g1 = ["*", "", "0", "00"]
    assert verify_two_walk_reversal(t, g1, ["0", "00"]).skipped  # wrong start
    assert verify_two_walk_reversal(t, g1, ["00", "0", "", "*"]).skipped  # hits root parent
    assert verify_two_walk_reversal(t, g1, ["00", "0", ""]).skipped  # ends outside


BINARY = OffspringDistribution((0.0, 0.0, 1.0))


def test_quenched_bias_random_environments():
    p = ParamSet(1.0, 1.0)
    rng = np.random.default_rng(1)
    for _ in range(25):
        dt = sample_double_tree(BINARY, 3, p, rng)
        res = verify_quenched_bias(dt, p)
        assert res.passed
        assert res.residual < 1e-8


def test_quenched_bias_degenerate_escape():
    # boundary at depth 1 with overwhelming forward bias: the walk escapes
    # immediately and both sides reduce to (1 - beta_plus)/eta_cross
    p = ParamSet(1.0, 1.0)
    rng = np.random.default_rng(2)
    t_minus = sample_tree(BINARY, 1, rng)
    t_plus = sample_tree(BINARY, 1, rng)

    def forced_env(tree):
        eta_parent = np.full(tree.n_vertices, 1e-9)
        eta_children = [
            np.full(tree.n_children(v), (1 - 1e-9) / 2) if not tree.boundary[v] else None
            for v in range(tree.n_vertices)
        ]
        return EnvTree(tree=tree, eta_parent=eta_parent, eta_children=eta_children)

    dt = DoubleTree(env_minus=forced_env(t_minus), env_plus=forced_env(t_plus), depth=1)
    res = verify_quenched_bias(dt, p)
    assert res.passed
    comp_plus = beta_complement_truncated(dt.env_plus, 1)
    expect = comp_plus / dt.env_plus.eta_parent[0]
    assert res.lhs == pytest.approx(expect, rel=1e-6)


def test_quenched_bias_symmetric_series_factor():
    # identical environments on both sides: the series factor is symmetric
    # under exchanging the two escape probabilities, so the right side is
    # invariant under swapping the glued halves up to the prefactor
    p = ParamSet(1.0, 1.0)
    rng = np.random.default_rng(3)
    tree = sample_tree(BINARY, 3, rng)
    env = sample_env_tree(tree, p, rng)
    dt = DoubleTree(env_minus=env, env_plus=env, depth=3)
    res = verify_quenched_bias(dt, p)
    assert res.passed
    beta = beta_truncated(env, 3)
    # prefactor times the symmetric series in ((1-beta)^2)^k
    assert res.rhs * env.eta_parent[0] / (1.0 - beta) == pytest.approx(
        res.lhs * env.eta_parent[0] / (1.0 - beta), rel=1e-8
    )


def test_verification_suite_report():
    report = run_verification_suite(seed=0)
    assert report["all_pass"]
    for key in ("fresh_reversal", "two_walk_reversal", "quenched_bias"):
        assert report[key]["n_fail"] == 0
        assert report[key]["n_pass"] > 0
        assert report[key]["max_residual"] < 1e-8
