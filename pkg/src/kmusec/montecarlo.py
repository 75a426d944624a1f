"""Empirical oracle: simulate wiretap SNR pairs and estimate the
secrecy metrics with binomial confidence intervals.

Streams come from the counter-based Philox generator keyed by the
caller's seed, so every estimate is bit-reproducible for a fixed
(pair, n, seed) within one build. The draw order per chunk is fixed:
main Poisson, main gamma, eavesdropper Poisson, eavesdropper gamma.
"""
import math
from dataclasses import dataclass

import numpy as np

from kmusec.fading import _sample_snr_with

_CHUNK = 1_000_000


@dataclass(frozen=True)
class McEstimate:
    """A probability estimate with its binomial standard error."""

    estimate: float
    std_error: float
    n: int
    seed: int


def _pair_chunks(pair, n, seed):
    rng = np.random.Generator(np.random.Philox(key=seed))
    left = n
    while left > 0:
        m = min(left, _CHUNK)
        gm = _sample_snr_with(rng, pair.main, m)
        ge = _sample_snr_with(rng, pair.eve, m)
        yield gm, ge
        left -= m


def _estimate(count, n, seed):
    p = count / n
    return McEstimate(estimate=p, std_error=math.sqrt(p * (1.0 - p) / n),
                      n=n, seed=seed)


def mc_spsc(pair, n, seed=0):
    """Fraction of draws with gamma_M > gamma_E."""
    if n < 1000:
        raise ValueError("n must be at least 1000")
    count = 0
    for gm, ge in _pair_chunks(pair, n, seed):
        count += int(np.count_nonzero(gm > ge))
    return _estimate(count, n, seed)


def mc_sop_both(pair, n, seed=0):
    """Exact and lower-bound outage estimates on one shared draw stream.

    Sharing the stream makes the event inclusion (the lower-bound event
    implies the exact one for R_S >= 0) hold realization by realization,
    so the ordering of the two estimates is exact, not statistical.
    """
    if n < 1000:
        raise ValueError("n must be at least 1000")
    ers = math.exp(pair.rate)
    count_exact = 0
    count_lower = 0
    for gm, ge in _pair_chunks(pair, n, seed):
        lower = gm <= ers * ge
        exact = gm <= ers * (1.0 + ge) - 1.0
        if bool(np.any(lower & ~exact)):
            raise AssertionError("lower-bound event escaped the exact event")
        count_lower += int(np.count_nonzero(lower))
        count_exact += int(np.count_nonzero(exact))
    return _estimate(count_exact, n, seed), _estimate(count_lower, n, seed)


def mc_sop(pair, n, seed=0, lower=False):
    """Fraction of draws in secrecy outage at rate R_S; ``lower``
    selects the bound event gamma_M <= e^{R_S} gamma_E."""
    exact, low = mc_sop_both(pair, n, seed)
    return low if lower else exact
