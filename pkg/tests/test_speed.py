"""Monte Carlo speed-formula evaluation and its closed-form special cases."""

import numpy as np
import pytest

from errw.branching import OffspringDistribution
from errw.conductance import BetaPopulation, sample_beta_population
from errw.exceptions import UnstableRatioError
from errw.specfun import ParamSet
from errw.speed import (
    evaluate_speed,
    evaluate_speed_errw_half,
    evaluate_speed_symmetric,
)

BINARY = OffspringDistribution((0.0, 0.0, 1.0))
RAY = OffspringDistribution((0.0, 1.0))


def ones_pool(p, dist, n=50_000):
    return BetaPopulation(pool=np.ones(n), params=p, dist=dist, iterations=0)


def zeros_pool(p, dist, n=1000):
    return BetaPopulation(pool=np.zeros(n), params=p, dist=dist, iterations=0)


def test_degenerate_pool_reduces_to_hand_formula():
    # beta pool identically 1: F(0) = 1 and the ratio collapses to
    # E[(sum A - 1)/(1 + sum A)] / E[(sum A + 1)/(1 + sum A)] over nu = 1
    p = ParamSet(1.0, 3.0)
    pop = ones_pool(p, RAY)
    est = evaluate_speed(p, RAY, pop, 400_000, np.random.default_rng(0))

    rng = np.random.default_rng(1)
    a = rng.gamma(3.0, size=400_000) / rng.gamma(1.0, size=400_000)
    hand = ((a - 1) / (1 + a)).mean() / ((a + 1) / (1 + a)).mean()
    assert est.speed == pytest.approx(hand, abs=5 * est.se + 0.01)
    assert est.saturated_fraction == 0.0


def test_symmetric_degenerate_pool_hand_formula():
    # beta = 1: the symmetric factor collapses to 1/(1 + sum A), shared by
    # numerator and denominator (it does not cancel inside the expectations)
    alpha = 2.0
    pop = ones_pool(ParamSet(alpha, alpha), BINARY)
    est = evaluate_speed_symmetric(alpha, BINARY, pop, 400_000, np.random.default_rng(2))
    rng = np.random.default_rng(3)
    g0 = rng.gamma(alpha, size=400_000)
    a = rng.gamma(alpha, size=(400_000, 2)).sum(axis=1) / g0
    hand = ((a - 1) / (1 + a)).mean() / ((a + 1) / (1 + a)).mean()
    assert est.speed == pytest.approx(hand, abs=5 * est.se + 0.01)


def test_half_weight_degenerate_pool_code_paths_equal():
    # beta = 1 collapses both the general and the half-weight factors to
    # 1/(1 + sum A): identical tuples (same seed) give identical ratios
    p = ParamSet(1.0, 0.5)
    dist = OffspringDistribution((0.0, 0.0, 0.0, 1.0))
    pop = ones_pool(p, dist, 10_000)
    est_general = evaluate_speed(p, dist, pop, 10_000, np.random.default_rng(4))
    est_half = evaluate_speed_errw_half(dist, pop, 10_000, np.random.default_rng(4))
    assert est_general.speed == pytest.approx(est_half.speed, abs=1e-12)


def test_symmetric_degenerate_pool_matches_general():
    alpha = 1.0
    p = ParamSet(alpha, alpha)
    pop = ones_pool(p, BINARY, 10_000)
    est_general = evaluate_speed(p, BINARY, pop, 10_000, np.random.default_rng(5))
    est_sym = evaluate_speed_symmetric(alpha, BINARY, pop, 10_000, np.random.default_rng(5))
    assert est_general.speed == pytest.approx(est_sym.speed, abs=1e-12)


def test_unstable_ratio_on_zero_pool():
    p = ParamSet(1.0, 1.0)
    with pytest.raises(UnstableRatioError):
        evaluate_speed_symmetric(1.0, BINARY, zeros_pool(p, BINARY), 1000, np.random.default_rng(6))


def test_speed_bounded_by_one_and_positive_in_regime():
    rng = np.random.default_rng(7)
    p = ParamSet(1.0, 1.0)
    pop = sample_beta_population(p, BINARY, 100_000, 60, rng)
    est = evaluate_speed(p, BINARY, pop, 200_000, rng)
    assert 0.0 < est.speed < 1.0
    assert est.speed > 5 * est.se  # positive by a wide margin at (1,1)
    assert not est.flagged


def test_saturation_flag_with_leaf_mass():
    # offspring law with p0 > 0: extinct tuples drive the series argument to 1
    dist = OffspringDistribution((0.2, 0.0, 0.0, 0.8))
    p = ParamSet(1.0, 0.5)
    rng = np.random.default_rng(8)
    pop = sample_beta_population(p, dist, 50_000, 50, rng)
    est = evaluate_speed(p, dist, pop, 50_000, rng)
    assert est.saturated_fraction > 0.01
    assert est.flagged


def test_estimates_reproducible():
    p = ParamSet(1.0, 1.0)
    pop = sample_beta_population(p, BINARY, 20_000, 40, np.random.default_rng(9))
    e1 = evaluate_speed(p, BINARY, pop, 50_000, np.random.default_rng(10))
    e2 = evaluate_speed(p, BINARY, pop, 50_000, np.random.default_rng(10))
    assert e1 == e2


def test_se_scales_with_samples():
    p = ParamSet(1.0, 1.0)
    pop = sample_beta_population(p, BINARY, 50_000, 50, np.random.default_rng(11))
    se_small = evaluate_speed(p, BINARY, pop, 10_000, np.random.default_rng(12)).se
    se_large = evaluate_speed(p, BINARY, pop, 160_000, np.random.default_rng(12)).se
    assert se_large < se_small
