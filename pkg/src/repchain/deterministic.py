"""Exact computation of waiting-time distributions and Werner profiles.

The chain is built level by level. Level 0 is elementary generation with a
geometric waiting time. One level up, two adjacent links must both be
present (the maximum of two i.i.d. copies of the lower level) and the swap
must succeed; failures restart both halves, so the waiting time is a
geometric compound of the per-attempt duration. Everything is carried as
truncated arrays, exact below the truncation time.

The average Werner parameter conditioned on the delivery time rides on the
same recursion. Internally the profile is kept relative to its decay-free
ceiling (the value it would take with infinite coherence time), which makes
the decay-free case exact by construction instead of exact up to FFT noise.

Truncation to t_trunc never renormalizes, so late-time mass is simply
missing; captured_mass says how much survived, and choose_truncation sizes
t_trunc so that a requested share of the mass is kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.signal

from .pmf import (
    TruncatedCDF,
    TruncatedPMF,
    cdf_from_pmf,
    clamp_roundoff,
    convolve,
    empirical_mean,
    geometric_cdf,
    geometric_compound,
    max_of_two_iid,
    pmf_from_cdf,
    reciprocal_series,
    _pow2_fft_convolve,
)
from .werner import ProtocolParams

# Entries of the time-conditioned normalization below this are smaller than
# the FFT noise floor and are reported as undefined rather than divided.
PROB_FLOOR = 1e-13


@dataclass(frozen=True)
class LevelDistributions:
    """Waiting-time PMF and CDF for every level 0..n of one parameter set."""

    params: ProtocolParams
    pmfs: tuple
    cdfs: tuple

    @property
    def final_pmf(self) -> TruncatedPMF:
        return self.pmfs[-1]

    @property
    def final_cdf(self) -> TruncatedCDF:
        return self.cdfs[-1]


@dataclass(frozen=True)
class WernerProfile:
    """values[level][t] = average Werner parameter given delivery at t.

    Entries are NaN where the delivery probability is zero (or below the
    double-precision noise floor), since no state is ever delivered there.
    """

    params: ProtocolParams
    values: np.ndarray

    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def fidelity(self) -> np.ndarray:
        return (1.0 + 3.0 * self.values) / 4.0


class MeanBounds(NamedTuple):
    """Bracket on the expected end-to-end waiting time."""

    lower: float
    upper: float


def _check_engine_params(params: ProtocolParams) -> int:
    if params.d != 0:
        raise ValueError(
            "deterministic computation covers the swap-only protocol; "
            f"distillation rounds d={params.d} require the Monte Carlo engine"
        )
    if params.t_trunc is None or params.t_trunc < 1:
        raise ValueError("params.t_trunc must be a positive integer")
    return params.t_trunc


def _delayed(probs: np.ndarray, steps: int) -> np.ndarray:
    """Shift right by `steps`, dropping mass past the end of the window."""
    if steps == 0:
        return probs
    out = np.zeros_like(probs)
    if steps < len(probs):
        out[steps:] = probs[: len(probs) - steps]
    return out


def compute_waiting_time(
    params: ProtocolParams, method: str = "series"
) -> LevelDistributions:
    """Per-level waiting-time distributions of the swap-only chain.

    Each level's distribution is exact (up to rounding) for every t up to
    t_trunc. `method` selects how the geometric compound is evaluated; see
    geometric_compound.
    """
    t_trunc = _check_engine_params(params)
    cdf = geometric_cdf(params.p_gen, t_trunc)
    pmfs = [pmf_from_cdf(cdf)]
    cdfs = [cdf]
    for level in range(params.n):
        attempt = max_of_two_iid(cdfs[-1])
        if params.include_comm_time:
            attempt = TruncatedPMF(_delayed(attempt.probs, 1 << level))
        nxt = geometric_compound(attempt, params.p_swap, method=method)
        pmfs.append(nxt)
        cdfs.append(cdf_from_pmf(nxt))
    return LevelDistributions(params, tuple(pmfs), tuple(cdfs))


def compute_upper_bound_distribution(params: ProtocolParams) -> LevelDistributions:
    """The dominating chain: per-level maximum replaced by a sum.

    Waiting for both halves is counted as waiting for one, then the other,
    which can only be slower. The payoff is an analytic mean (see
    mean_bounds); the distribution itself dominates the true one level by
    level.
    """
    t_trunc = _check_engine_params(params)
    if params.include_comm_time:
        raise ValueError(
            "the dominating chain is defined without communication time"
        )
    cdf = geometric_cdf(params.p_gen, t_trunc)
    pmfs = [pmf_from_cdf(cdf)]
    cdfs = [cdf]
    for _ in range(params.n):
        attempt = convolve(pmfs[-1], pmfs[-1]).probs.copy()
        support = np.flatnonzero(pmfs[-1].probs)
        if support.size:
            # The sum of two copies cannot finish before twice the earliest
            # possible single finish; below that the entries are exact zeros.
            attempt[: min(2 * int(support[0]), len(attempt))] = 0.0
        nxt = geometric_compound(TruncatedPMF(attempt), params.p_swap)
        pmfs.append(nxt)
        cdfs.append(cdf_from_pmf(nxt))
    return LevelDistributions(params, tuple(pmfs), tuple(cdfs))


def _retry_sum_fast(
    num_attempt: np.ndarray, den_attempt: np.ndarray, p_swap: float
) -> tuple:
    """Apply the same retry-weighting to a numerator/denominator pair.

    Summing over the number of failed attempts before the success weights
    both arrays with the series G = p * (1 - (1-p) * attempt)^(-1); the
    same G convolves both, so wherever the inputs are equal the outputs are
    equal bitwise.
    """
    q = 1.0 - p_swap
    if q == 0.0:
        return num_attempt.copy(), den_attempt.copy()
    length = len(den_attempt)
    f = -q * den_attempt
    f[0] = 1.0
    weights = p_swap * reciprocal_series(f, length)
    num = _pow2_fft_convolve(num_attempt, weights, length)
    den = _pow2_fft_convolve(den_attempt, weights, length)
    return num, den


def _retry_sum_direct(
    num_attempt: np.ndarray, den_attempt: np.ndarray, p_swap: float
) -> tuple:
    """Reference k-summation over the number of swap attempts.

    The k-th attempt succeeds with weight p (1-p)^(k-1); the k-1 failures
    contribute their duration distribution (k-1 fold self-convolution of
    the attempt) and no Werner content.
    """
    q = 1.0 - p_swap
    length = len(den_attempt)
    num = np.zeros(length)
    den = np.zeros(length)
    failed = np.zeros(length)
    failed[0] = 1.0
    coeff = p_swap
    for _ in range(1, length):
        num += coeff * np.convolve(failed, num_attempt)[:length]
        den += coeff * np.convolve(failed, den_attempt)[:length]
        coeff *= q
        failed = np.convolve(failed, den_attempt)[:length]
        if coeff == 0.0 or not failed.any():
            break
    return num, den


def compute_werner_profile(
    params: ProtocolParams, dists: LevelDistributions, method: str = "fast"
) -> WernerProfile:
    """Average Werner parameter of each level's link, given its delivery time.

    A link delivered at t can have been produced along many histories with
    different idle intervals; the profile averages the resulting Werner
    parameters with the histories' probabilities, per level and delivery
    time. Level 0 is constant w0. Undefined entries (no delivery mass, or
    mass below the noise floor) are NaN.

    The numerator (Werner-weighted mass) and its normalization run through
    identical operations on a shared probability array, so the profile is a
    ratio of like-rounded quantities; with infinite coherence time the two
    are equal bitwise and the profile hits its decay-free ceiling exactly.

    method "fast" accumulates pairwise Werner mass into per-time arrays and
    reuses the waiting-time convolution machinery, costing about as much as
    the time distributions themselves. "direct" follows the definition with
    explicit loops over retry counts and delivery-time pairs; it is far
    more expensive and exists as a cross-check for small instances.
    """
    if dists.params != params:
        raise ValueError("profile parameters differ from the distributions'")
    if method not in ("fast", "direct"):
        raise ValueError(f"unknown method {method!r}")
    t_trunc = _check_engine_params(params)
    r = math.exp(-1.0 / params.T_coh)
    values = np.full((params.n + 1, t_trunc + 1), np.nan)

    # Scaled profile: v = W / w_ceiling with w_ceiling = w0^(2^level), the
    # decay-free value; v is exactly 1 everywhere when T_coh is infinite.
    probs = dists.pmfs[0].probs
    mask = probs > 0.0
    v = np.where(mask, 1.0, 0.0)
    values[0, mask] = params.w0

    for level in range(params.n):
        if method == "fast":
            num_att, den_att = _attempt_masses_fast(probs, v, r)
        else:
            num_att, den_att = _attempt_masses_direct(probs, v, r)
        if params.include_comm_time:
            delay = 1 << level
            num_att = _delayed(num_att, delay) * math.exp(-delay / params.T_coh)
            den_att = _delayed(den_att, delay)
        if method == "fast":
            num, den = _retry_sum_fast(num_att, den_att, params.p_swap)
        else:
            num, den = _retry_sum_direct(num_att, den_att, params.p_swap)
        support = np.flatnonzero(den_att)
        start = int(support[0]) if support.size else t_trunc + 1
        num[:start] = 0.0
        den[:start] = 0.0
        clamp_roundoff(num)
        clamp_roundoff(den)
        # The chain's own normalization becomes the next level's probability
        # array: numerator and denominator must share rounding history, so
        # the externally computed PMF is not reused here.
        positive = den > 0.0
        v = np.zeros(t_trunc + 1)
        np.divide(num, den, out=v, where=positive)
        # True conditional averages lie in [0,1] of the ceiling; entries in
        # the sub-noise tail may not, and are clipped before they propagate.
        np.clip(v, 0.0, 1.0, out=v)
        probs = den
        w_ceiling = params.w0 ** (1 << (level + 1))
        reported = den >= PROB_FLOOR
        values[level + 1, reported] = v[reported] * w_ceiling
    return WernerProfile(params, values)


def _attempt_masses_fast(P: np.ndarray, v: np.ndarray, r: float) -> tuple:
    """Werner and probability mass of one successful attempt, per duration.

    An attempt delivers its halves at (tA, tB); the pair contributes
    probability P[tA]P[tB] and Werner weight v[tA]v[tB] r^|tA-tB| at
    duration max(tA, tB). Summing with b = v*P:

        num[u] = b[u]^2 + 2 b[u] * sum_{s<u} b[s] r^(u-s)

    and the probability mass is the same expression with v = 1, r = 1. The
    inner sums are one first-order recurrence each. Both outputs flow
    through identical operations so they agree bitwise where v is 1 and r
    is 1.
    """
    b = v * P
    tail_num = scipy.signal.lfilter([0.0, r], [1.0, -r], b)
    tail_den = scipy.signal.lfilter([0.0, 1.0], [1.0, -1.0], P)
    num = b * (b + 2.0 * tail_num)
    den = P * (P + 2.0 * tail_den)
    return num, den


def _attempt_masses_direct(P: np.ndarray, v: np.ndarray, r: float) -> tuple:
    """Reference double loop over delivery-time pairs."""
    t_trunc = len(P) - 1
    num = np.zeros(t_trunc + 1)
    den = np.zeros(t_trunc + 1)
    for ta in range(t_trunc + 1):
        if P[ta] == 0.0:
            continue
        for tb in range(t_trunc + 1):
            if P[tb] == 0.0:
                continue
            u = max(ta, tb)
            pair = P[ta] * P[tb]
            den[u] += pair
            num[u] += pair * v[ta] * v[tb] * r ** abs(ta - tb)
    return num, den


def mean_bounds(params: ProtocolParams) -> MeanBounds:
    """Bracket the expected end-to-end waiting time.

    The lower bound is the mean restricted to the truncated window, which
    can only undershoot. The dominating chain's mean is known in closed
    form, (2/p_swap)^n / p_gen, so its own truncated mean tells how much a
    window this size can hide; adding that slack to the lower bound gives a
    certified upper bound. With t_trunc = 0 the bracket degenerates to
    [0, analytic mean].
    """
    if params.d != 0:
        raise ValueError("mean bounds are defined for the swap-only protocol")
    if params.include_comm_time:
        raise ValueError("mean bounds are defined without communication time")
    analytic = (2.0 / params.p_swap) ** params.n / params.p_gen
    if params.t_trunc == 0:
        return MeanBounds(0.0, analytic)
    lower = empirical_mean(compute_waiting_time(params).final_cdf)
    upper_partial = empirical_mean(
        compute_upper_bound_distribution(params).final_cdf
    )
    slack = max(analytic - upper_partial, 0.0)
    return MeanBounds(lower, lower + slack)


def three_over_two_estimate(params: ProtocolParams) -> float:
    """Closed-form mean estimate (3/(2 p_swap))^n / p_gen.

    Replaces the per-level maximum's mean by 3/2 times the single-link
    mean, which is exact for two i.i.d. geometrics in the small-p_gen
    limit; widely used as a back-of-envelope rate estimate.
    """
    return (3.0 / (2.0 * params.p_swap)) ** params.n / params.p_gen


def choose_truncation(params: ProtocolParams, coverage: float) -> int:
    """Truncation time guaranteeing the window keeps `coverage` of the mass.

    The dominating chain's analytic mean with the one-sided fraction bound
    Pr(T > t) <= E[T]/t sizes the window: t = mean/(1-coverage). Values
    within 1e-9 relative of an integer round to it before the ceiling, so
    a mathematically integral bound is not inflated by float dust.
    """
    if not 0.0 < coverage < 1.0:
        raise ValueError(f"coverage must be in (0, 1), got {coverage}")
    raw = (2.0 / params.p_swap) ** params.n / params.p_gen / (1.0 - coverage)
    nearest = round(raw)
    if abs(raw - nearest) <= 1e-9 * max(1.0, abs(raw)):
        return int(nearest)
    return int(math.ceil(raw))
