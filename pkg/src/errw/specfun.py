"""Special-function kernel: log-gamma, digamma, the crossing-weight sequence
and its hypergeometric generating series.

Everything downstream (path probabilities, regime thresholds, the speed
formula) reduces to ratios of gamma functions, so this module is the accuracy
root of the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

__all__ = [
    "ParamSet",
    "log_gamma",
    "digamma",
    "phi",
    "hyper_F",
    "hyper_G",
    "hyper_G_deriv",
    "hyper_F_array",
]

# Relative-term threshold for series truncation.
_TERM_TOL = 1e-14
_MAX_TERMS = 50_000_000


@dataclass(frozen=True)
class ParamSet:
    """Reinforcement weights: ``alpha_p`` on every child->parent edge,
    ``alpha_c`` on every parent->child edge."""

    alpha_p: float
    alpha_c: float

    def __post_init__(self):
        if not (self.alpha_p > 0 and self.alpha_c > 0):
            raise ValueError(
                f"weights must be positive, got ({self.alpha_p}, {self.alpha_c})"
            )


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if x <= 0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def digamma(x: float) -> float:
    """psi(x) = Gamma'(x)/Gamma(x) for x > 0."""
    if x <= 0:
        raise ValueError(f"digamma requires x > 0, got {x}")
    return float(sp.psi(x))


def phi(k: int, p: ParamSet) -> float:
    """Crossing-count weight Gamma(a_p)Gamma(a_c+k+1) / (Gamma(a_c+1)Gamma(a_p+k)).

    Grows like k**(a_c - a_p + 1); evaluated through log-gamma so large
    parameter spreads do not overflow.
    """
    if k < 0:
        raise ValueError(f"phi requires k >= 0, got {k}")
    ap, ac = p.alpha_p, p.alpha_c
    return math.exp(
        log_gamma(ap) + log_gamma(ac + k + 1) - log_gamma(ac + 1) - log_gamma(ap + k)
    )


def _series_sum(x: float, p: ParamSet, *, shifted: bool) -> float:
    """Sum sum_k c_k x^k with term ratio x*(ac+k+1)/(ap+k) (shifted=True, the
    phi series) or x*(ac+k)/(ap+k) (shifted=False).

    Terms are tracked in log space and accumulated with Kahan summation under a
    running offset, so intermediate terms may exceed the double range. The
    truncated tail is bounded by a geometric series with the asymptotic term
    ratio and added to the error budget: we only stop once that bound is below
    the relative threshold as well.
    """
    if not (0 <= x < 1):
        raise ValueError(f"series argument must lie in [0, 1), got {x}")
    if x == 0:
        return 1.0
    ap, ac = p.alpha_p, p.alpha_c
    off = ac + 1 if shifted else ac

    offset = 0.0  # sum and comp hold sum_k exp(log_t_k - offset)
    total = 0.0
    comp = 0.0
    log_t = 0.0
    k = 0
    while True:
        if log_t - offset > 60.0:
            scale = math.exp(offset - log_t)
            total *= scale
            comp *= scale
            offset = log_t
        term = math.exp(log_t - offset)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t

        ratio = x * (off + k) / (ap + k)
        if ratio == 0.0:
            break  # subnormal x: every remaining term underflows to zero
        # Relative-term cutoff plus geometric tail bound term * r/(1-r).
        if term < _TERM_TOL * total and ratio < 1.0:
            tail = term * ratio / (1.0 - ratio)
            if tail < _TERM_TOL * total:
                break
        log_t += math.log(ratio)
        k += 1
        if k > _MAX_TERMS:
            raise RuntimeError(f"series did not converge at x={x}")
    return total * math.exp(offset)


_NEAR_ONE = 0.999


def hyper_F(x: float, p: ParamSet) -> float:
    """The generating series sum_k phi(k) x^k = 2F1(1, a_c+1; a_p; x), x in [0,1).

    Arguments beyond 0.999 are delegated to scipy's 2F1, which handles the
    x -> 1 limit by transformation (the direct series needs ~1/(1-x) terms)."""
    if not (0 <= x < 1):
        raise ValueError(f"series argument must lie in [0, 1), got {x}")
    if x > _NEAR_ONE:
        return float(sp.hyp2f1(1.0, p.alpha_c + 1.0, p.alpha_p, x))
    return _series_sum(x, p, shifted=True)


def hyper_G(x: float, p: ParamSet) -> float:
    """2F1(1, a_c; a_p; x) = sum_k Gamma(a_p)Gamma(a_c+k)/(Gamma(a_c)Gamma(a_p+k)) x^k."""
    if not (0 <= x < 1):
        raise ValueError(f"series argument must lie in [0, 1), got {x}")
    if x > _NEAR_ONE:
        return float(sp.hyp2f1(1.0, p.alpha_c, p.alpha_p, x))
    return _series_sum(x, p, shifted=False)


def hyper_G_deriv(x: float, p: ParamSet) -> float:
    """Term-by-term derivative of hyper_G."""
    if not (0 <= x < 1):
        raise ValueError(f"series argument must lie in [0, 1), got {x}")
    ap, ac = p.alpha_p, p.alpha_c
    # d/dx sum g_k x^k = sum_{k>=1} k g_k x^{k-1}; reuse the log-space loop.
    total = 0.0
    comp = 0.0
    log_g = math.log(ac) - math.log(ap)  # g_1
    k = 1
    while True:
        term = k * math.exp(log_g) * x ** (k - 1)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        ratio = x * (ac + k) / (ap + k) * (k + 1) / k
        if term < _TERM_TOL * max(total, 1.0) and ratio < 1.0:
            if term * ratio / (1.0 - ratio) < _TERM_TOL * max(total, 1.0):
                break
        log_g += math.log((ac + k) / (ap + k))
        k += 1
        if k > _MAX_TERMS:
            raise RuntimeError(f"series did not converge at x={x}")
    return total


def hyper_F_array(x: np.ndarray, p: ParamSet, *, switch: float = 0.999) -> np.ndarray:
    """Vectorized hyper_F over x in [0, 1).

    Arguments below ``switch`` are summed termwise (vectorized recursion);
    the rare near-1 stragglers are delegated to scipy's 2F1, which handles the
    x -> 1 limit by transformation. Values are +inf where the series diverges
    at the endpoint and x is within double rounding of 1.
    """
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x >= 1)):
        raise ValueError("series arguments must lie in [0, 1)")
    out = np.empty_like(x)
    near = x > switch
    if np.any(near):
        out[near] = sp.hyp2f1(1.0, p.alpha_c + 1.0, p.alpha_p, x[near])
    xs = x[~near]
    if xs.size:
        ap, ac = p.alpha_p, p.alpha_c
        total = np.ones_like(xs)
        term = np.ones_like(xs)
        k = 0
        active = np.ones(xs.shape, dtype=bool)
        while True:
            ratio = xs * (ac + k + 1) / (ap + k)
            term = term * ratio
            total += np.where(active, term, 0.0)
            active &= ~((term < _TERM_TOL * total) & (ratio < 1.0))
            if not np.any(active):
                break
            k += 1
            if k > _MAX_TERMS:
                raise RuntimeError("vectorized series did not converge")
        out[~near] = total
    return out
