"""Closed-form regime classification: transience, the trap exponent, and the
positive-speed trichotomy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from scipy.optimize import brentq

from .branching import OffspringDistribution
from .exceptions import UnsupportedRegimeError
from .specfun import ParamSet, log_gamma

__all__ = [
    "RegimeReport",
    "classify_transience",
    "transience_by_minimization",
    "compute_r",
    "classify_speed",
    "neg_moment_A",
]

_RESIDUAL = 1e-10
_BOUNDARY_EPS = 1e-9


@dataclass(frozen=True)
class RegimeReport:
    transient: bool
    phi0: float | None  # critical parent weight, only in the small-alpha_c case
    r: float | None  # trap exponent, suppressed for recurrent parameters
    d: int
    case_tag: str  # p0_zero_p1_pos | p0_zero_p1_zero | p0_pos
    positive_speed: bool
    criterion_value: float
    moment_ok: bool
    at_boundary: bool

    def to_dict(self) -> dict:
        return asdict(self)


def neg_moment_A(p: ParamSet, k: float) -> float:
    """E[A^{-k}] = Gamma(a_p+k)Gamma(a_c-k) / (Gamma(a_p)Gamma(a_c)), k < a_c.

    A is the ratio of a child exit probability to the parent exit probability;
    the moment has a pole at k = a_c.
    """
    ap, ac = p.alpha_p, p.alpha_c
    if not (-ap < k < ac):
        raise ValueError(f"E[A^-k] requires -alpha_p < k < alpha_c, got k={k}")
    return math.exp(log_gamma(ap + k) + log_gamma(ac - k) - log_gamma(ap) - log_gamma(ac))


def _phi0(alpha_c: float, m: float) -> float:
    """Critical parent weight in the small-alpha_c case: the root of
    Gamma((phi0+a_c)/2)^2 / (Gamma(phi0)Gamma(a_c)) = 1/m on (a_c, a_c+2]."""

    def g(ap):
        return (
            2 * log_gamma((ap + alpha_c) / 2)
            - log_gamma(ap)
            - log_gamma(alpha_c)
            + math.log(m)
        )

    # g is decreasing on [a_c, a_c+2]; g(a_c) = log m >= 0.
    lo, hi = alpha_c, alpha_c + 2
    if g(hi) >= 0:
        return hi
    root = brentq(g, lo, hi, xtol=1e-14, rtol=8.9e-16)
    return float(root)


def classify_transience(
    p: ParamSet, dist: OffspringDistribution
) -> tuple[bool, float | None]:
    """Transience of the walk conditioned on non-extinction.

    Large alpha_c (> 1/(m-1)): transient iff alpha_p < m*alpha_c + 1.
    Otherwise: transient iff alpha_p < phi0(alpha_c), the gamma-ratio root.
    The degenerate ray (m = 1) falls in the second case with phi0 = alpha_c.
    """
    m = dist.m
    if m < 1 or (m == 1 and not dist.is_ray):
        raise UnsupportedRegimeError(f"mean offspring {m} not supported")
    if m > 1 and p.alpha_c > 1.0 / (m - 1.0):
        return p.alpha_p < m * p.alpha_c + 1.0, None
    if m == 1:
        return p.alpha_p < p.alpha_c, p.alpha_c
    phi0 = _phi0(p.alpha_c, m)
    return p.alpha_p < phi0, phi0


def transience_by_minimization(p: ParamSet, dist: OffspringDistribution) -> bool:
    """Equivalent transience test: the annealed step-ratio moment
    Gamma(a_p-t)Gamma(a_c+t)/(Gamma(a_c)Gamma(a_p)), minimized at
    t = clamp((a_p-a_c)/2, 0, 1), must exceed 1/m."""
    ap, ac = p.alpha_p, p.alpha_c
    t = min(max((ap - ac) / 2.0, 0.0), 1.0)
    log_min = log_gamma(ap - t) + log_gamma(ac + t) - log_gamma(ac) - log_gamma(ap)
    return log_min > -math.log(dist.m)


def compute_r(p: ParamSet, dist: OffspringDistribution) -> float:
    """Trap exponent sup{k : E[A^-k] f'(q) < 1}.

    With f'(q) = 0 the moment condition holds up to the pole, so r = alpha_c.
    Otherwise the unique root of E[A^-k] f'(q) = 1 on [(a_c-a_p) v 0, a_c) is
    found by bracketed root-finding (the map is increasing there).
    """
    fq = dist.f_prime_q
    if fq >= 1.0 and not dist.is_ray:
        raise ValueError(f"f'(q) = {fq} >= 1 is inconsistent with a supercritical law")
    if fq == 0.0:
        return p.alpha_c
    ap, ac = p.alpha_p, p.alpha_c
    lo = max(ac - ap, 0.0)
    hi = ac - _BOUNDARY_EPS
    log_fq = math.log(fq)

    def h(k):
        return (
            log_gamma(ap + k) + log_gamma(ac - k) - log_gamma(ap) - log_gamma(ac)
            + log_fq
        )

    if h(lo) >= 0.0:
        # E[A^-k] f'(q) >= 1 already at the lower edge (ray with a_c <= a_p)
        return lo
    if h(hi) <= 0.0:
        return ac
    root = brentq(h, lo, hi, xtol=1e-13, rtol=8.9e-16)
    return float(root)


def classify_speed(p: ParamSet, dist: OffspringDistribution) -> RegimeReport:
    """Full regime report: transience, trap exponent, and the strict-inequality
    positive-speed criterion for the case selected by (p_0, p_1).

    Parameter points exactly on a criterion boundary are reported as zero
    speed with ``at_boundary`` set; the trichotomy uses strict inequalities
    and does not decide the boundary.
    """
    transient, phi0 = classify_transience(p, dist)
    p0 = dist.probs[0] if len(dist.probs) > 0 else 0.0
    p1 = dist.probs[1] if len(dist.probs) > 1 else 0.0

    r = compute_r(p, dist) if transient else None
    if p0 > 0:
        case_tag = "p0_pos"
        crit = (r if r is not None else compute_r(p, dist)) - p.alpha_c + p.alpha_p - 1.0
    elif p1 > 0:
        case_tag = "p0_zero_p1_pos"
        crit = 2.0 * (r if r is not None else compute_r(p, dist)) - p.alpha_c + p.alpha_p - 1.0
    else:
        case_tag = "p0_zero_p1_zero"
        crit = (2.0 * dist.d - 1.0) * p.alpha_c + p.alpha_p - 1.0

    at_boundary = abs(crit) <= _BOUNDARY_EPS
    positive = transient and crit > 0.0 and not at_boundary
    return RegimeReport(
        transient=transient,
        phi0=phi0,
        r=r,
        d=dist.d,
        case_tag=case_tag,
        positive_speed=positive,
        criterion_value=crit,
        moment_ok=True,  # finite support: all offspring moments exist
        at_boundary=at_boundary,
    )
