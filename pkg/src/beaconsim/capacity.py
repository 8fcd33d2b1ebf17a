"""Secondary-link capacity bounds, estimation-noise effects, throughput.

The secondary pair may transmit only in the channel states its sensing
declares free.  With ``p_t`` the probability that the transmitter-side node
senses an opportunity and ``p_joint`` the probability that both nodes do,
the achievable rate over a block is bracketed by

* upper bound:  p_joint * log2(1 + P / p_joint)
* lower bound:  p_joint * log2(1 + P / p_t) - 1 / (T_c * ln 2)

in bits per channel use, where P is the secondary link's received
signal-to-noise ratio and T_c the coherence time in channel uses (the
subtracted term prices the per-block coordination overhead).

Ergodic and outage statistics average the bounds over channel draws with
P = rho * g_tr and the per-draw conditional sensing probabilities of the
chosen scheme.  The imperfect-estimation variants feed noisy relay-selection
metrics into the opportunistic scheme while detection still happens over the
true gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import MeanGains, MetricTriple, perturb_metrics
from .fadeprob import abs_diff_q_mean
from .mc import (
    CHUNK,
    TAG_GAINS,
    TAG_METRIC_NOISE,
    TAG_STATUS,
    parallel_chunk_arrays,
    parallel_chunk_stats,
    substream,
)
from .protocols import (
    ProtocolConfig,
    Scheme,
    csa_conditional_miss,
    csa_joint_success,
    nc_conditional_miss,
    nc_joint_success,
    ocsa_conditional_miss,
    ocsa_joint_success,
    ocsa_select_relay,
    phase1_failure,
)

__all__ = [
    "ActivityModel",
    "CapacityEstimate",
    "OutageResult",
    "OverheadParams",
    "state_probs",
    "capacity_upper",
    "capacity_lower",
    "capacity_draws",
    "ergodic_capacity",
    "imperfect_capacity",
    "outage_capacity",
    "relative_capacity_loss",
    "wrong_relay_bound",
    "wrong_relay_probability_mc",
    "throughput",
    "throughput_loss_bound",
    "throughput_loss_mc",
]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class ActivityModel:
    """Primary-activity priors: probability that the band is free as seen
    by the transmitter-side node alone, and by both nodes agreeing."""

    p_theta_t: float
    p_theta_joint: float

    def __post_init__(self):
        if not 0.0 <= self.p_theta_t <= 1.0:
            raise ValueError("ActivityModel: p_theta_t must lie in [0, 1]")
        if not 0.0 <= self.p_theta_joint <= 1.0:
            raise ValueError("ActivityModel: p_theta_joint must lie in [0, 1]")
        if self.p_theta_joint > self.p_theta_t:
            raise ValueError(
                "ActivityModel: joint agreement cannot be more likely than "
                "the single-node event"
            )


@dataclass(frozen=True)
class CapacityEstimate:
    """Monte Carlo means and standard errors of the two capacity bounds."""

    upper_mean: float
    upper_se: float
    lower_mean: float
    lower_se: float
    n_trials: int


@dataclass(frozen=True)
class OutageResult:
    """Empirical epsilon-outage values of the two capacity bounds."""

    epsilons: tuple
    upper: np.ndarray
    lower: np.ndarray
    n_trials: int


def state_probs(activity: ActivityModel, miss_t, joint_success):
    """Transmission-state probabilities given conditional sensing outcomes."""
    p_t = activity.p_theta_t * (1.0 - np.asarray(miss_t, dtype=float))
    p_joint = activity.p_theta_joint * np.asarray(joint_success, dtype=float)
    if np.ndim(p_t) == 0:
        return float(p_t), float(p_joint)
    return p_t, p_joint


def capacity_upper(p_joint, power):
    """Upper capacity bound; continuous extension gives 0 at p_joint = 0."""
    p = np.asarray(p_joint, dtype=float)
    pw = np.asarray(power, dtype=float)
    if np.any(p < 0) or np.any(pw < 0):
        raise ValueError("capacity_upper: arguments must be nonnegative")
    safe = np.where(p > 0, p, 1.0)
    # log2(1 + pw/p) written as a difference to avoid overflow at tiny p
    out = np.where(p > 0, p * (np.log2(safe + pw) - np.log2(safe)), 0.0)
    return float(out) if out.ndim == 0 else out


def capacity_lower(p_t, p_joint, power, coherence_time):
    """Lower capacity bound; may be negative for tiny access probability.

    Undefined when the single-node state probability is zero but power is
    available, since the rate expression then has no meaning.
    """
    if coherence_time <= 0:
        raise ValueError("capacity_lower: coherence_time must be positive")
    pt = np.asarray(p_t, dtype=float)
    pj = np.asarray(p_joint, dtype=float)
    pw = np.asarray(power, dtype=float)
    if np.any(pt < 0) or np.any(pj < 0) or np.any(pw < 0):
        raise ValueError("capacity_lower: arguments must be nonnegative")
    if np.any((pt == 0) & (pw > 0)):
        raise ValueError(
            "capacity_lower: zero single-node state probability with "
            "positive power"
        )
    safe = np.where(pt > 0, pt, 1.0)
    penalty = 1.0 / (coherence_time * _LN2)
    out = pj * (np.log2(safe + pw) - np.log2(safe)) - penalty
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Per-draw capacity bounds over sampled channels
# ---------------------------------------------------------------------------


def _capacity_worker(scheme: Scheme, means: MeanGains, activity: ActivityModel,
                     rho: float, t_c: float, seed: int, d1: int, d2: int,
                     sigma2: float):
    scheme = Scheme(scheme)
    if scheme is Scheme.MUCSA:
        raise ValueError(
            "capacity estimation covers the single-pair schemes only"
        )
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    if not isinstance(means, MeanGains):
        raise TypeError("means must be a MeanGains instance")
    cfg = ProtocolConfig(rho=rho, d1=d1, d2=d2)

    def worker(idx: int, start: int, size: int) -> np.ndarray:
        rng = substream(seed, TAG_GAINS, idx)
        g = rng.exponential([means.pt, means.pr, means.tr], (size, 3))
        g_pt, g_pr, g_tr = g[:, 0], g[:, 1], g[:, 2]
        metrics = MetricTriple(g_pt + g_pr, g_pt + g_tr, g_pr + g_tr)
        if sigma2 > 0:
            noise_rng = substream(seed, TAG_METRIC_NOISE, idx)
            metrics = perturb_metrics(metrics, sigma2, noise_rng)
        if scheme is Scheme.NC:
            miss_t = nc_conditional_miss(cfg, g_pt)
            joint = nc_joint_success(cfg, g_pt, g_pr)
        elif scheme is Scheme.CSA:
            miss_t = csa_conditional_miss(cfg, g_pt, g_pr, g_tr)
            joint = csa_joint_success(cfg, g_pt, g_pr, g_tr)
        else:
            miss_t = ocsa_conditional_miss(
                cfg, g_pt, g_pr, g_tr,
                metrics=(metrics.t_p, metrics.t_t, metrics.t_r),
            )
            joint = ocsa_joint_success(cfg, g_pt, g_pr, g_tr, metrics=metrics)
        p_t, p_joint = state_probs(activity, miss_t, joint)
        power = rho * g_tr
        upper = capacity_upper(p_joint, power)
        lower = capacity_lower(p_t, p_joint, power, t_c)
        return np.stack([upper, lower], axis=1)

    return worker


def capacity_draws(scheme: Scheme, means: MeanGains, activity: ActivityModel,
                   rho: float, t_c: float, n: int, seed: int,
                   d1: int = 1, d2: int = 1, sigma2: float = 0.0,
                   threads: int = 1, chunk: int | None = None):
    """Per-realization (upper, lower) capacity bound arrays."""
    worker = _capacity_worker(scheme, means, activity, rho, t_c, seed,
                              d1, d2, sigma2)
    vals = parallel_chunk_arrays(worker, n, CHUNK if chunk is None else chunk,
                                 threads)
    return vals[:, 0], vals[:, 1]


def imperfect_capacity(scheme: Scheme, means: MeanGains,
                       activity: ActivityModel, rho: float, t_c: float,
                       n: int, seed: int, sigma2: float,
                       d1: int = 1, d2: int = 1, threads: int = 1,
                       chunk: int | None = None) -> CapacityEstimate:
    """Ergodic capacity bounds with noisy relay-selection metrics.

    Noise draws come from a dedicated substream, so sigma2 = 0 reproduces
    the noiseless estimate bit for bit.
    """
    worker = _capacity_worker(scheme, means, activity, rho, t_c, seed,
                              d1, d2, sigma2)
    mean, se, n_done = parallel_chunk_stats(
        worker, n, CHUNK if chunk is None else chunk, threads
    )
    return CapacityEstimate(
        upper_mean=float(mean[0]),
        upper_se=float(se[0]),
        lower_mean=float(mean[1]),
        lower_se=float(se[1]),
        n_trials=n_done,
    )


def ergodic_capacity(scheme: Scheme, means: MeanGains,
                     activity: ActivityModel, rho: float, t_c: float,
                     n: int, seed: int, d1: int = 1, d2: int = 1,
                     threads: int = 1,
                     chunk: int | None = None) -> CapacityEstimate:
    """Ergodic capacity bounds with perfect metric knowledge."""
    return imperfect_capacity(scheme, means, activity, rho, t_c, n, seed,
                              sigma2=0.0, d1=d1, d2=d2, threads=threads,
                              chunk=chunk)


def outage_capacity(scheme: Scheme, means: MeanGains,
                    activity: ActivityModel, rho: float, t_c: float,
                    epsilons, n: int, seed: int, d1: int = 1, d2: int = 1,
                    sigma2: float = 0.0, threads: int = 1,
                    chunk: int | None = None) -> OutageResult:
    """Empirical epsilon-outage capacity bounds.

    For each epsilon the reported value is the floor(epsilon * n)-th order
    statistic of the sampled bound, i.e. the level exceeded with empirical
    probability at least 1 - epsilon.
    """
    eps = tuple(float(e) for e in epsilons)
    if not eps:
        raise ValueError("outage_capacity: need at least one epsilon")
    for e in eps:
        if not 0.0 < e < 1.0:
            raise ValueError("outage_capacity: epsilons must lie in (0, 1)")
    upper, lower = capacity_draws(scheme, means, activity, rho, t_c, n, seed,
                                  d1=d1, d2=d2, sigma2=sigma2,
                                  threads=threads, chunk=chunk)
    upper.sort()
    lower.sort()
    idx = [int(math.floor(e * n)) for e in eps]
    return OutageResult(
        epsilons=eps,
        upper=upper[idx],
        lower=lower[idx],
        n_trials=n,
    )


def relative_capacity_loss(base: CapacityEstimate,
                           degraded: CapacityEstimate) -> float:
    """Relative drop of the upper-bound mean caused by estimation noise."""
    if base.upper_mean <= 0:
        raise ValueError("relative_capacity_loss: base estimate must be positive")
    return (base.upper_mean - degraded.upper_mean) / base.upper_mean


# ---------------------------------------------------------------------------
# Wrong-relay selection probability under noisy metrics
# ---------------------------------------------------------------------------


def wrong_relay_bound(sigma2: float, means: MeanGains) -> float:
    """Closed-form upper bound on the wrong-relay probability.

    A selection error requires the noise to flip a pairwise metric
    comparison whose true margin is the absolute difference of two
    independent exponential gains; the two relevant comparisons pit the
    helper link against each primary link, and the relevant status
    branches carry total probability bounded by 1/3 each.
    """
    if sigma2 < 0:
        raise ValueError("wrong_relay_bound: sigma2 must be nonnegative")
    s = math.sqrt(2.0 * sigma2)
    return (
        abs_diff_q_mean(s, means.pr, means.tr)
        + abs_diff_q_mean(s, means.pt, means.tr)
    ) / 3.0


def wrong_relay_probability_mc(sigma2: float, means: MeanGains, rho: float,
                               n: int, seed: int, d1: int = 1, d2: int = 1,
                               threads: int = 1,
                               chunk: int | None = None) -> tuple[float, float]:
    """Monte Carlo probability that metric noise changes the relay choice
    in a status where the choice affects the outcome.

    The outcome-relevant statuses are those with exactly one successful
    secondary node: with both successful nothing remains to recover, and
    with both failed the primary transmits regardless.  Returns (estimate,
    standard error).
    """
    if sigma2 < 0:
        raise ValueError("wrong_relay_probability_mc: sigma2 must be nonnegative")
    cfg = ProtocolConfig(rho=rho, d1=d1, d2=d2)

    def worker(idx: int, start: int, size: int) -> np.ndarray:
        rng = substream(seed, TAG_GAINS, idx)
        g = rng.exponential([means.pt, means.pr, means.tr], (size, 3))
        g_pt, g_pr, g_tr = g[:, 0], g[:, 1], g[:, 2]
        metrics = MetricTriple(g_pt + g_pr, g_pt + g_tr, g_pr + g_tr)
        srng = substream(seed, TAG_STATUS, idx)
        u = srng.random((size, 2))
        t_ok = u[:, 0] < 1.0 - phase1_failure(cfg, g_pt)
        r_ok = u[:, 1] < 1.0 - phase1_failure(cfg, g_pr)
        sel_true = ocsa_select_relay(metrics, t_ok, r_ok)
        noise_rng = substream(seed, TAG_METRIC_NOISE, idx)
        noisy = perturb_metrics(metrics, sigma2, noise_rng)
        sel_noisy = ocsa_select_relay(noisy, t_ok, r_ok)
        event = (sel_true != sel_noisy) & (t_ok != r_ok)
        return event.astype(float)

    mean, se, _ = parallel_chunk_stats(worker, n,
                                       CHUNK if chunk is None else chunk,
                                       threads)
    return float(mean), float(se)


# ---------------------------------------------------------------------------
# Throughput with beaconing overhead
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OverheadParams:
    """Frame-overhead description: data-phase length t_cr, feedback length
    t_fb, and beaconing cost beta / t_i where t_i is the selected relay's
    metric.  lambda_pt is the transmitter-side primary mean gain used in
    the closed-form loss bound."""

    t_cr: float
    t_fb: float
    beta: float
    lambda_pt: float = 1.0

    def __post_init__(self):
        if self.t_cr <= 0:
            raise ValueError("OverheadParams: t_cr must be positive")
        if self.t_fb < 0:
            raise ValueError("OverheadParams: t_fb must be nonnegative")
        if self.beta < 0:
            raise ValueError("OverheadParams: beta must be nonnegative")
        if self.lambda_pt <= 0:
            raise ValueError("OverheadParams: lambda_pt must be positive")

    @property
    def w1(self) -> float:
        return self.t_fb / self.t_cr

    @property
    def w2(self) -> float:
        return self.beta / (self.t_cr * self.lambda_pt)


def _frame_share(ov: OverheadParams, t_i):
    t = np.asarray(t_i, dtype=float)
    if ov.beta == 0:
        share = np.full(t.shape, ov.t_cr / (ov.t_cr + ov.t_fb))
    else:
        beacon = np.where(t > 0, ov.beta / np.where(t > 0, t, 1.0), np.inf)
        share = ov.t_cr / (ov.t_cr + ov.t_fb + beacon)
    return share


def throughput(capacity_value, ov: OverheadParams, t_i):
    """Rate after overhead: the data phase occupies t_cr out of
    t_cr + t_fb + beta / t_i frame units."""
    t = np.asarray(t_i, dtype=float)
    if ov.beta > 0 and np.any(t <= 0):
        raise ValueError("throughput: t_i must be positive when beta > 0")
    out = np.asarray(capacity_value, dtype=float) * _frame_share(ov, t)
    return float(out) if out.ndim == 0 else out


def throughput_loss_bound(ov: OverheadParams) -> float:
    """Closed-form bound on the expected relative throughput loss.

    In terms of w1 = t_fb / t_cr and w2 = beta / (t_cr * lambda_pt):
    w1 / (1 + w1) + (1 + w1) * (exp(w2 / (1 + w1)) - 1), exact (zero) when
    both overheads vanish.
    """
    w1, w2 = ov.w1, ov.w2
    return w1 / (1.0 + w1) + (1.0 + w1) * math.expm1(w2 / (1.0 + w1))


def throughput_loss_mc(ov: OverheadParams, means: MeanGains, rho: float,
                       n: int, seed: int, d1: int = 1, d2: int = 1,
                       threads: int = 1,
                       chunk: int | None = None) -> tuple[float, float]:
    """Monte Carlo mean of the per-frame relative throughput loss.

    Each trial samples channel gains and first-phase outcomes, runs the
    relay selection, and charges the beaconing overhead against the
    selected relay's metric.  Returns (estimate, standard error).
    """
    cfg = ProtocolConfig(rho=rho, d1=d1, d2=d2)

    def worker(idx: int, start: int, size: int) -> np.ndarray:
        rng = substream(seed, TAG_GAINS, idx)
        g = rng.exponential([means.pt, means.pr, means.tr], (size, 3))
        g_pt, g_pr, g_tr = g[:, 0], g[:, 1], g[:, 2]
        metrics = MetricTriple(g_pt + g_pr, g_pt + g_tr, g_pr + g_tr)
        srng = substream(seed, TAG_STATUS, idx)
        u = srng.random((size, 2))
        t_ok = u[:, 0] < 1.0 - phase1_failure(cfg, g_pt)
        r_ok = u[:, 1] < 1.0 - phase1_failure(cfg, g_pr)
        sel = ocsa_select_relay(metrics, t_ok, r_ok)
        t_i = np.where(sel == 1, metrics.t_t,
                       np.where(sel == 2, metrics.t_r, metrics.t_p))
        return 1.0 - _frame_share(ov, t_i)

    mean, se, _ = parallel_chunk_stats(worker, n,
                                       CHUNK if chunk is None else chunk,
                                       threads)
    return float(mean), float(se)
