"""Uniform-convergence rates, deviation bounds, Monte Carlo error and sample sizes.

All logarithms are natural.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from .dist import DistributionSpec, sample
from .hypothesis import Hypothesis

log = logging.getLogger(__name__)

HOEFFDING_95 = math.sqrt(math.log(2 / 0.05) / 2)  # 1.3582...
SAMPLE_SIZE_CAP = 1_000_000


def uc_rate(vc: int, n: int, delta: float) -> float:
    """s = (2 vc ln(n+1) + ln(4/delta)) / n."""
    if vc < 0 or n < 1 or not 0.0 < delta < 1.0:
        raise ValueError(f"need vc >= 0, n >= 1, delta in (0,1); got {vc}, {n}, {delta}")
    return (2.0 * vc * math.log(n + 1) + math.log(4.0 / delta)) / n


def second_order_bound(empirical: float, s: float) -> float:
    """Population-level upper bound from an empirical frequency: e + sqrt(e s) + 4 s."""
    return empirical + math.sqrt(empirical * s) + 4.0 * s


def hoeffding_halfwidth(m: int, confidence: float = 0.95) -> float:
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * m))


def mc_error(
    h: Hypothesis,
    h_star: Hypothesis,
    d_star: DistributionSpec,
    m: int = 100_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Estimate Pr_{x ~ d_star}[h(x) != h_star(x)] and its 95% Hoeffding half-width."""
    if h.dim != h_star.dim or h.dim != d_star.dim:
        raise ValueError("hypotheses and distribution disagree on dimension")
    if m < 1:
        raise ValueError("m must be positive")
    X = sample(d_star, seed, m)
    est = float(np.mean(h.contains(X) != h_star.contains(X)))
    return est, HOEFFDING_95 / math.sqrt(m)


def constreg_sample_size(zeta: float, n_mono: int, delta: float, cN: float = 4.0) -> int:
    """Per-repetition sample size of boosted constrained regression (uncapped)."""
    if not 0.0 < zeta < 1.0 or not 0.0 < delta < 1.0:
        raise ValueError("zeta and delta must lie in (0, 1)")
    return math.ceil(cN * zeta**-2 * (n_mono * math.log(1.0 / zeta) + math.log(1.0 / delta)))


def sample_size(
    mode: str,
    eps: float,
    sigma: float = 1.0,
    q: float = 1.0,
    vc: int = 1,
    delta: float = 0.1,
    c: float = 4.0,
    cap: int = SAMPLE_SIZE_CAP,
) -> int:
    """Sample size for one of the learners, with the log factor made explicit.

    piu-general:    c (eps sigma)^(-2q) (vc ln(1/(eps sigma)) + ln(1/delta))
    piu-optimal-q1: c (eps sigma)^(-1)  (vc ln(1/(eps sigma)) + ln(1/delta))
    perm-constreg:  the boosted-regression size with zeta = eps and vc monomials
    """
    if not 0.0 < eps < 0.5 or not 0.0 < delta < 0.5:
        raise ValueError("eps and delta must lie in (0, 1/2)")
    if not 0.0 < sigma <= 1.0 or q < 1.0:
        raise ValueError("need sigma in (0, 1] and q >= 1")
    if vc < 0:
        raise ValueError("vc must be non-negative")
    es = eps * sigma
    body = vc * math.log(1.0 / es) + math.log(1.0 / delta)
    if mode == "piu-general":
        n = math.ceil(c * es ** (-2.0 * q) * body)
    elif mode == "piu-optimal-q1":
        n = math.ceil(c * body / es)
    elif mode == "perm-constreg":
        n = constreg_sample_size(eps, vc, delta, c)
    else:
        raise ValueError(f"unknown sample-size mode {mode!r}")
    if n > cap:
        log.warning("sample size %d exceeds the cap; using %d", n, cap)
        n = cap
    return n
