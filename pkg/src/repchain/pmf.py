"""Finite-support distributions of nonnegative-integer random variables.

Waiting times in a repeater chain are nonnegative-integer random variables
measured in time steps of L0/c. This module provides truncated PMF/CDF
containers on the domain {0, ..., t_trunc} together with the composition
primitives the level recursion is built from: the maximum of two i.i.d.
copies, the sum of independent variables (convolution), and the compound sum
of a geometrically distributed number of i.i.d. terms. Probability mass
beyond the truncation time is deliberately dropped, never renormalized, so
every stored entry is exact (up to floating-point rounding) for its time
index.

All arithmetic is 64-bit floating point. Negative entries produced by FFT
round-off are clamped to zero if they are larger than ``-NEG_TOL``; anything
more negative signals a real bug and raises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.fft

# Tolerances for floating-point artifacts. NEG_TOL bounds the FFT round-off
# we are willing to clamp; MASS_TOL bounds the excess over total mass 1 that
# accumulated rounding may produce.
NEG_TOL = 1e-12
MASS_TOL = 1e-9


def _as_clean_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a nonempty 1-d array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def clamp_roundoff(arr: np.ndarray) -> np.ndarray:
    """Clamp tiny negative round-off to zero; reject real negatives.

    Entries in (-NEG_TOL, 0) are set to 0 in place. An entry below -NEG_TOL
    is not round-off and raises ValueError.
    """
    low = arr.min(initial=0.0)
    if low < -NEG_TOL:
        raise ValueError(
            f"negative probability {low} below round-off tolerance {-NEG_TOL}"
        )
    if low < 0.0:
        np.clip(arr, 0.0, None, out=arr)
    return arr


@dataclass(frozen=True)
class TruncatedPMF:
    """Probability mass on {0, ..., t_trunc}; entries sum to at most 1."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _as_clean_array(self.probs, "probs")
        if probs.min(initial=0.0) < 0.0:
            raise ValueError("probabilities must be nonnegative")
        total = probs.sum()
        if total > 1.0 + MASS_TOL:
            raise ValueError(f"total mass {total} exceeds 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def t_trunc(self) -> int:
        return len(self.probs) - 1

    def __getitem__(self, t: int) -> float:
        return float(self.probs[t])


@dataclass(frozen=True)
class TruncatedCDF:
    """Cumulative probabilities on {0, ..., t_trunc}; monotone, in [0, 1]."""

    cum: np.ndarray

    def __post_init__(self):
        cum = _as_clean_array(self.cum, "cum")
        if cum.min(initial=0.0) < -NEG_TOL or cum.max(initial=0.0) > 1.0 + MASS_TOL:
            raise ValueError("cumulative probabilities must lie in [0, 1]")
        np.clip(cum, 0.0, 1.0, out=cum)
        if np.diff(cum).min(initial=0.0) < -NEG_TOL:
            raise ValueError("cumulative probabilities must be nondecreasing")
        cum.setflags(write=False)
        object.__setattr__(self, "cum", cum)

    @property
    def t_trunc(self) -> int:
        return len(self.cum) - 1

    def __getitem__(self, t: int) -> float:
        return float(self.cum[t])


def geometric_cdf(p: float, t_trunc: int) -> TruncatedCDF:
    """CDF of the number of attempts until first success, 1 - (1-p)^t.

    Parameters
    ----------
    p : success probability per attempt, in (0, 1].
    t_trunc : truncation time, at least 1.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"success probability must be in (0, 1], got {p}")
    if t_trunc < 1:
        raise ValueError(f"t_trunc must be at least 1, got {t_trunc}")
    t = np.arange(t_trunc + 1, dtype=np.float64)
    if p == 1.0:
        cum = (t >= 1.0).astype(np.float64)
    else:
        cum = -np.expm1(t * np.log1p(-p))
    return TruncatedCDF(cum)


def pmf_from_cdf(cdf: TruncatedCDF) -> TruncatedPMF:
    """Consecutive differences of the CDF; probs[0] = cum[0]."""
    probs = np.diff(cdf.cum, prepend=0.0)
    return TruncatedPMF(clamp_roundoff(probs))


def cdf_from_pmf(pmf: TruncatedPMF) -> TruncatedCDF:
    """Cumulative sums of the PMF; inverse of pmf_from_cdf."""
    return TruncatedCDF(np.cumsum(pmf.probs))


def max_of_two_iid(cdf: TruncatedCDF) -> TruncatedPMF:
    """PMF of the maximum of two i.i.d. variables with the given CDF.

    The mass at t is cum[t]^2 - cum[t-1]^2, evaluated in the factored form
    (cum[t] - cum[t-1]) * (cum[t] + cum[t-1]). The factored form shares the
    rounding of the plain CDF difference, which keeps the maximum consistent
    with the PMF to a few ulps even deep in the tail where the squared CDFs
    agree to within rounding.
    """
    cum = cdf.cum
    prev = np.concatenate(([0.0], cum[:-1]))
    probs = (cum - prev) * (cum + prev)
    return TruncatedPMF(clamp_roundoff(probs))


def _pow2_fft_convolve(x: np.ndarray, y: np.ndarray, out_len: int) -> np.ndarray:
    """Linear convolution via real FFTs at the next power-of-two size."""
    full = len(x) + len(y) - 1
    size = 1 << (full - 1).bit_length() if full > 1 else 1
    fx = scipy.fft.rfft(x, size)
    fx *= scipy.fft.rfft(y, size)
    out = scipy.fft.irfft(fx, size)[:out_len]
    if out_len > full:
        out = np.concatenate((out, np.zeros(out_len - full)))
    return out


def convolve(a: TruncatedPMF, b: TruncatedPMF) -> TruncatedPMF:
    """PMF of the sum of two independent variables, truncated to t_trunc."""
    if a.t_trunc != b.t_trunc:
        raise ValueError(
            f"truncation times differ: {a.t_trunc} versus {b.t_trunc}"
        )
    out = _pow2_fft_convolve(a.probs, b.probs, a.t_trunc + 1)
    return TruncatedPMF(clamp_roundoff(out))


def convolution_powers(pmf: TruncatedPMF) -> Iterator[TruncatedPMF]:
    """Yield the k-fold self-convolutions of ``pmf`` for k = 1, 2, ...

    The k-th yielded distribution is the sum of k i.i.d. copies, truncated to
    the input domain. Entries below k times the smallest support point are
    exact zeros by support arithmetic and are stored as such rather than as
    FFT round-off noise. The iterator is infinite; consume as many powers as
    needed.
    """
    probs = pmf.probs
    support = np.flatnonzero(probs)
    s_min = int(support[0]) if support.size else pmf.t_trunc + 1
    power = probs.copy()
    k = 1
    yield pmf
    while True:
        k += 1
        power = clamp_roundoff(_pow2_fft_convolve(power, probs, len(probs)))
        power[: min(k * s_min, len(power))] = 0.0
        yield TruncatedPMF(power)


def reciprocal_series(f: np.ndarray, length: int) -> np.ndarray:
    """Truncated power-series reciprocal: r with (f * r)[t] = [t == 0].

    Newton doubling: r <- r * (2 - f * r), doubling the number of correct
    coefficients per step, so the total cost is O(length log length).
    Requires f[0] != 0.
    """
    if f[0] == 0.0:
        raise ValueError("series with zero constant term has no reciprocal")
    r = np.array([1.0 / f[0]])
    m = 1
    while m < length:
        m2 = min(2 * m, length)
        prod = _pow2_fft_convolve(f[:m2], r, m2)
        prod *= -1.0
        prod[0] += 2.0
        r = _pow2_fft_convolve(r, prod, m2)
        m = m2
    return r


def geometric_compound(
    summand: TruncatedPMF,
    p: float,
    t_trunc: int | None = None,
    method: str = "series",
) -> TruncatedPMF:
    """PMF of the sum of a geometric(p) number of i.i.d. copies of ``summand``.

    The result at t sums p*(1-p)^(k-1) times the k-fold convolution of the
    summand over k >= 1. Because the summand has no mass at 0, terms with
    k > t contribute nothing at or below t, so the result is exact for every
    t <= t_trunc despite the finite sum.

    Parameters
    ----------
    summand : per-attempt duration distribution; must have no mass at 0.
    p : success probability of the geometric counter, in (0, 1].
    t_trunc : truncation time of the result, at most summand.t_trunc;
        defaults to summand.t_trunc.
    method : "series" evaluates the closed form p*s / (1 - (1-p)*s) of the
        generating function by a truncated power-series reciprocal in
        O(t log t); "direct" accumulates the k-fold convolutions one by one
        in O(t^2 log t). Both give the same result to within rounding.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"success probability must be in (0, 1], got {p}")
    if summand.probs[0] > 0.0:
        raise ValueError("summand must have no mass at 0")
    if t_trunc is None:
        t_trunc = summand.t_trunc
    if not 1 <= t_trunc <= summand.t_trunc:
        raise ValueError(
            f"t_trunc must be in [1, {summand.t_trunc}], got {t_trunc}"
        )
    q = 1.0 - p
    length = t_trunc + 1
    if q == 0.0:
        # One attempt almost surely; scaling by p = 1 keeps entries exact.
        return TruncatedPMF(summand.probs[:length] * p)
    if method == "series":
        f = -q * summand.probs[:length]
        f[0] = 1.0
        weights = p * reciprocal_series(f, length)
        out = _pow2_fft_convolve(summand.probs[:length], weights, length)
    elif method == "direct":
        out = np.zeros(length)
        coeff = p
        for k, power in zip(range(1, length), convolution_powers(summand)):
            out += coeff * power.probs[:length]
            coeff *= q
    else:
        raise ValueError(f"unknown method {method!r}")
    support = np.flatnonzero(summand.probs)
    if support.size:
        out[: min(int(support[0]), length)] = 0.0
    return TruncatedPMF(clamp_roundoff(out))


def empirical_mean(cdf: TruncatedCDF) -> float:
    """Mean restricted to the truncated domain: sum of Pr(X >= t) for t <= t_trunc.

    Converges to the true mean from below as t_trunc grows.
    """
    return float(cdf.t_trunc - cdf.cum[:-1].sum())


def captured_mass(pmf: TruncatedPMF) -> float:
    """Total probability mass inside the truncation window."""
    return float(pmf.probs.sum())
