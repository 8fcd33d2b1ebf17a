"""Closed-form fade-region probabilities for independent exponential gains.

These joint probabilities are the analytic half of the noise-conditional
estimators: averaging a product of Gaussian tails over channel gains equals
averaging, over squared half-normal thresholds, the probability that the
gains fall in the induced fade region. Every function here evaluates such a
region probability exactly, vectorized over per-trial thresholds.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import erfcx

__all__ = [
    "exp_q_mean",
    "exp_sum_box_prob",
    "exp_erlang_box_prob",
    "ocsa_fade_regions",
    "abs_diff_q_mean",
]


def exp_q_mean(coeff: float, lam: float) -> float:
    """E[Q(sqrt(2 c g))] for g ~ Exponential(mean lam), exactly.

    Equals (1/2)[1 - (1 + 1/(c lam))^(-1/2)]; this is the averaged
    single-link detection failure probability.
    """
    if coeff < 0 or lam <= 0:
        raise ValueError("exp_q_mean: need coeff >= 0 and lam > 0")
    if coeff == 0.0:
        return 0.5
    return 0.5 * (1.0 - 1.0 / math.sqrt(1.0 + 1.0 / (coeff * lam)))


def _int_exp(beta: float, upper: np.ndarray, p0) -> np.ndarray:
    """Stable integral_0^U exp(-p0 - beta t) dt.

    Callers guarantee p0 >= 0 and p0 + beta*U >= 0, so both boundary
    exponents are nonpositive and no overflow can occur for either sign of
    beta.
    """
    upper = np.maximum(upper, 0.0)
    p0 = np.asarray(p0, dtype=float)
    if beta == 0.0:
        return np.exp(-p0) * upper
    bu = beta * upper
    small = np.abs(bu) < 1.0
    with np.errstate(over="ignore"):
        direct = (np.exp(-p0) - np.exp(-p0 - bu)) / beta
    via_expm1 = np.exp(-p0) * -np.expm1(-np.where(small, bu, 0.0)) / beta
    return np.where(small, via_expm1, direct)


def exp_erlang_box_prob(x1, x2, a: float, b: float, k: int) -> np.ndarray:
    """P(u + T <= x1, u <= x2) for u ~ Exp(mean a), T ~ Erlang(k, scale b).

    x1 and x2 are arrays of per-trial thresholds. The Erlang sum models k
    independent equal-mean relay links entering one combined detection.
    """
    if a <= 0 or b <= 0:
        raise ValueError("exp_erlang_box_prob: scales must be positive")
    if k < 1:
        raise ValueError("exp_erlang_box_prob: k must be >= 1")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    m = np.maximum(np.minimum(x1, x2), 0.0)
    x1p = np.maximum(x1, 0.0)
    out = -np.expm1(-m / a)

    # remaining terms integrate the Erlang tail against the u density:
    #   sum_j (1/(j! b^j a)) int_{x1-m}^{x1} s^j exp(c s - x1/a) ds,
    # c = 1/a - 1/b; both endpoint exponents are <= 0 (they equal -x1/b at
    # s = x1 and -m/a - (x1-m)/b at s = x1-m), so the recurrence is safe
    c = 1.0 / a - 1.0 / b
    lo = x1p - m
    hi = x1p
    width = hi - lo
    if abs(c) * float(np.max(width, initial=0.0)) < 1e-8:
        mid_exp = np.exp(c * 0.5 * (lo + hi) - x1p / a)
        js = [mid_exp * (hi ** (j + 1) - lo ** (j + 1)) / (j + 1) for j in range(k)]
    else:
        e_lo = np.exp(c * lo - x1p / a)
        e_hi = np.exp(c * hi - x1p / a)
        js = [(e_hi - e_lo) / c]
        for j in range(1, k):
            js.append((hi ** j * e_hi - lo ** j * e_lo) / c - (j / c) * js[j - 1])
    fact = 1.0
    for j in range(k):
        if j > 0:
            fact *= j
        out = out - js[j] / (fact * b ** j * a)
    return np.maximum(out, 0.0)


def exp_sum_box_prob(x1, x2, mu_u: float, mu_w: float) -> np.ndarray:
    """P(u + w <= x1, u <= x2) for independent u ~ Exp(mu_u), w ~ Exp(mu_w)."""
    return exp_erlang_box_prob(x1, x2, mu_u, mu_w, 1)


def ocsa_fade_regions(x1, x2, x3, d1: int, d2: int,
                      lams: Sequence[float]) -> tuple[np.ndarray, ...]:
    """Joint fade probabilities over three independent exponential gains
    (g1, g2, g3) with means lams, for the regions

      P1: d1 g1 <= x1,  d1 g1 + d2 g3 <= x2,  g1 < min(g2, g3)
      P2: P1's region intersected with d1 g2 <= x3
      P3: d1 g1 <= x1,  (d1+d2) g1 <= x2,     not g1 < min(g2, g3)
      P4: d1 g1 <= x1,  (d1+d2) g1 <= x2,  d1 g2 <= x3,  g1 < min(g2, g3)

    These are the four signed pieces of the noise-conditional estimator for
    the opportunistic scheme, where g1 plays the role of the node whose miss
    probability is being averaged.
    """
    r1, r2, r3 = (1.0 / l for l in lams)
    d = d1 + d2
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x3 = np.asarray(x3, dtype=float)
    c1 = x1 / d1
    c3 = x3 / d1
    alpha = r1 + r2 + r3
    beta = r1 + r2 - r3 * d1 / d2
    gam1 = r1 + r3
    gam2 = r1 - r3 * d1 / d2

    u = np.minimum(c1, x2 / d)
    p1 = r1 * (_int_exp(alpha, u, 0.0) - _int_exp(beta, u, r3 * x2 / d2))
    p3 = -np.expm1(-r1 * np.maximum(u, 0.0)) - r1 * _int_exp(alpha, u, 0.0)

    w = np.minimum(u, c3)
    p2 = r1 * (_int_exp(alpha, w, 0.0)
               - _int_exp(gam1, w, r2 * c3)
               - _int_exp(beta, w, r3 * x2 / d2)
               + _int_exp(gam2, w, r2 * c3 + r3 * x2 / d2))
    p4 = r1 * (_int_exp(alpha, w, 0.0) - _int_exp(gam1, w, r2 * c3))
    clip = lambda p: np.clip(p, 0.0, 1.0)
    return clip(p1), clip(p2), clip(p3), clip(p4)


def abs_diff_q_mean(s: float, mu1: float, mu2: float) -> float:
    """E[Q(|U - W| / s)] for independent U ~ Exp(mu1), W ~ Exp(mu2).

    |U - W| has the mixture density (e^(-x/mu1) + e^(-x/mu2))/(mu1 + mu2),
    and each exponential piece integrates against Q in closed form via the
    scaled complementary error function.
    """
    if s < 0 or mu1 <= 0 or mu2 <= 0:
        raise ValueError("abs_diff_q_mean: need s >= 0 and positive means")
    if s == 0.0:
        return 0.0

    def piece(mu: float) -> float:
        y = s / mu
        return 0.5 - 0.5 * erfcx(y / math.sqrt(2.0))

    return (mu1 * piece(mu1) + mu2 * piece(mu2)) / (mu1 + mu2)
