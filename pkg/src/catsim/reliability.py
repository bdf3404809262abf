"""Analytic unsurvivability of probabilistic refresh and its Monte-Carlo twin.

A hammering window of T activations goes unprotected with probability
(1-p)^T when each activation independently triggers a two-victim refresh
with probability p. Over Q0 windows per auto-refresh interval and Q1
intervals in the horizon, the chance of at least one unprotected window is
bounded by (1-p)^T * Q0 * Q1 (union bound, capped at 1).

The Monte-Carlo side replays windows against an actual bit generator, which
is the whole point: a too-weak generator (narrow LFSR) can be dramatically
worse than the analytic value because low-probability decisions need long
zero-bit runs the register cannot produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels
from .schemes import PRNG_LFSR, PRNG_QUALITY, pra_draw_params

SECONDS_PER_YEAR = 31_557_600.0  # 365.25-day years
INTERVAL_SECONDS = 0.064


@dataclass(frozen=True)
class ReliabilityQuery:
    p: float  # per-access probability of refreshing both victims
    t: int  # refresh threshold (window length)
    q0: float  # refresh-threshold windows per refresh interval
    q1: float  # number of 64 ms intervals in the horizon

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        if self.t <= 0 or self.q0 <= 0 or self.q1 <= 0:
            raise ValueError("t, q0 and q1 must be positive")


def intervals_for_years(years: float) -> float:
    return years * SECONDS_PER_YEAR / INTERVAL_SECONDS


def unsurvivability(q: ReliabilityQuery) -> float:
    """min(1, (1-p)^T * Q0 * Q1), evaluated in log space so tiny window
    probabilities do not underflow before the Q0*Q1 scaling."""
    if q.p >= 1.0:
        return 0.0
    log_val = q.t * math.log1p(-q.p) + math.log(q.q0) + math.log(q.q1)
    if log_val >= 0.0:
        return 1.0
    return math.exp(log_val)


def per_window_rate(p: float, t: int) -> float:
    """(1-p)^T in log space."""
    if p >= 1.0:
        return 0.0
    return math.exp(t * math.log1p(-p))


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class MonteCarloResult:
    windows: int
    failures: int
    rate: float
    ci_low: float
    ci_high: float
    analytic_rate: float  # (1 - p_effective)^T
    p_effective: float
    prng_kind: str
    lfsr_width: int
    seed: int

    def unsurvivability_after(self, intervals: float, q0: float) -> float:
        """Estimated probability of at least one unprotected window after the
        given number of refresh intervals."""
        if self.rate <= 0.0:
            return 0.0
        if self.rate >= 1.0:
            return 1.0
        return 1.0 - math.exp(intervals * q0 * math.log1p(-self.rate))

    def intervals_to_reach(self, target: float, q0: float) -> float | None:
        """Refresh intervals until the failure estimate crosses target, or
        None when no failures were observed."""
        if self.rate <= 0.0:
            return None
        if self.rate >= 1.0:
            return 1.0 / q0
        return math.log1p(-target) / (q0 * math.log1p(-self.rate))


def monte_carlo_unsurvivability(
    p: float,
    t: int,
    windows: int,
    prng_kind: str = PRNG_QUALITY,
    seed: int = 0,
    lfsr_width: int = 32,
    compiled: bool | None = None,
) -> MonteCarloResult:
    """Replay `windows` independent hammering windows of t draws each and
    count the ones that pass with no refresh decision."""
    if windows < 1:
        raise ValueError("windows must be >= 1")
    bits, cut = pra_draw_params(p)
    kind_code = 0 if prng_kind == PRNG_QUALITY else 1
    if prng_kind not in (PRNG_QUALITY, PRNG_LFSR):
        raise ValueError(f"unknown prng kind {prng_kind!r}")
    failures = int(
        kernels.pra_windows(
            kind_code, seed, lfsr_width, bits, cut, t, windows, compiled=compiled
        )
    )
    rate = failures / windows
    lo, hi = wilson_interval(failures, windows)
    p_eff = cut / (1 << bits) if bits else float(cut >= 1)
    return MonteCarloResult(
        windows=windows,
        failures=failures,
        rate=rate,
        ci_low=lo,
        ci_high=hi,
        analytic_rate=per_window_rate(p_eff, t),
        p_effective=p_eff,
        prng_kind=prng_kind,
        lfsr_width=lfsr_width,
        seed=seed,
    )
