"""Learners built on the iterative PIU learner: list decoding over candidate
unlabeled distributions, truncation detection, and learning from positives
under a smooth reference distribution."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dist import DistributionSpec, Empirical, SmoothnessParams, mass, sample, weighted_mass
from .hypothesis import ClassDescriptor, Hypothesis, everything, intersect, vc_upper_bound
from .iterative import IterativeConfig, IterativeResult, LearnerAbort, iterative_constreg
from .seeding import child_seed

log = logging.getLogger(__name__)


@dataclass
class ListInstance:
    p_sampler: DistributionSpec
    candidates: list
    params: SmoothnessParams
    true_index: int | None = None  # generator side only

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("a list instance needs at least one candidate")


@dataclass
class ListDecodeResult:
    hypothesis: Hypothesis
    admitted: list[int]
    fractions: list[float | None]  # |H_i ∩ P| / |P| per candidate, None if skipped
    results: list[IterativeResult | None]
    validation_size: int
    warnings: list[str] = field(default_factory=list)


def validation_size(eps: float, delta: float, vc: int, cN: float = 4.0, cap: int = 200_000) -> int:
    """ceil(cN eps^-2 (vc / eps + ln(1/delta))), capped."""
    m = math.ceil(cN / eps**2 * (vc / eps + math.log(1.0 / delta)))
    return min(m, cap)


def list_decode_learn(
    inst: ListInstance,
    eps: float,
    delta: float,
    k: int,
    seed: int = 0,
    base: IterativeConfig | None = None,
    val_cap: int = 200_000,
) -> ListDecodeResult:
    """Run the iterative learner against every candidate and intersect the
    outputs that keep at least 1 - eps/(2 l) of a fresh positive set."""
    if not (0.0 < eps < 0.5 and 0.0 < delta < 0.5):
        raise ValueError("eps and delta must lie in (0, 1/2)")
    ell = len(inst.candidates)
    p = inst.params
    if p.alpha is None:
        raise ValueError("list decoding needs alpha")
    cfg = IterativeConfig(eps / ell, delta / ell, p.sigma, p.q, p.alpha, k)
    if base is not None:
        cfg = replace(base, eps=eps / ell, delta=delta / ell, sigma=p.sigma, q=p.q, alpha=p.alpha, k=k)
    d = inst.p_sampler.dim
    ptf_class = ClassDescriptor("ptf", d=d, k=k)
    vc = vc_upper_bound(ClassDescriptor.intersection_of(cfg.iterations, ptf_class))
    m = validation_size(eps, delta, vc, cfg.cN, val_cap)
    P = sample(inst.p_sampler, child_seed(seed, 0), m)

    hs, fracs, results, warnings = [], [], [], []
    admitted = []
    for i, cand in enumerate(inst.candidates):
        try:
            res = iterative_constreg(inst.p_sampler, cand, cfg, child_seed(seed, 1, i))
        except (LearnerAbort, ValueError) as e:
            msg = f"candidate {i} skipped: {e}"
            log.warning(msg)
            warnings.append(msg)
            fracs.append(None)
            results.append(None)
            continue
        frac = float(np.mean(res.hypothesis.contains(P)))
        fracs.append(frac)
        results.append(res)
        if frac >= 1.0 - eps / (2 * ell):
            admitted.append(i)
            hs.append(res.hypothesis)
    if hs:
        H = intersect(hs)
    else:
        msg = "no candidate admitted; returning the all-ones hypothesis"
        log.warning(msg)
        warnings.append(msg)
        H = everything(d)
    return ListDecodeResult(H, admitted, fracs, results, m, warnings)


TRUNCATED = "Truncated"
NOT_TRUNCATED = "NotTruncated"


@dataclass
class DetectConfig:
    """Settings for truncation detection.

    alpha is a lower bound on the reference mass of the truncation set;
    (sigma, q) describe how smooth the true distribution is relative to the
    reference. When the reference is only an approximate sampler for a known
    distribution, pass that distribution as ``target``: the verdict mass is
    then its mass, estimated from reference draws weighted by the density
    ratio. The remaining fields are passed to the iterative learner.
    """

    alpha: float = 0.5
    sigma: float = 1.0
    q: float = 1.0
    k: int = 8
    delta: float = 0.1
    mc_budget: int = 100_000
    target: DistributionSpec | None = None
    learner: dict = field(default_factory=dict)


@dataclass
class DetectionVerdict:
    verdict: str
    learned_region: Hypothesis
    reference_mass: float
    threshold: float
    report: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "mass": self.reference_mass,
            "threshold": self.threshold,
            "regionSummary": self.learned_region.to_dict(),
        }


def detect_truncation(
    observed,
    reference: DistributionSpec,
    beta: float,
    cfg: DetectConfig | None = None,
    seed: int = 0,
) -> DetectionVerdict:
    """Decide whether ``observed`` was truncated relative to ``reference``.

    Learns the support region of the observations at accuracy beta/4 (the
    observations act as positives, reference draws as unlabeled points) and
    reports NotTruncated iff the region's mass exceeds 1 - beta/2. The mass is
    taken under the reference, or under ``cfg.target`` when one is given.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    cfg = cfg or DetectConfig()
    X = np.asarray(observed, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] == 0:
        raise ValueError("need at least one observed sample")
    if X.shape[1] != reference.dim:
        raise ValueError("observations and reference disagree on dimension")
    icfg = IterativeConfig(
        eps=beta / 4, delta=cfg.delta, sigma=cfg.sigma, q=cfg.q, alpha=cfg.alpha, k=cfg.k, **cfg.learner
    )
    res = iterative_constreg(Empirical(X), reference, icfg, child_seed(seed, 0))
    if cfg.target is None:
        m = mass(reference, res.hypothesis, cfg.mc_budget, child_seed(seed, 1))
    else:
        m = weighted_mass(cfg.target, reference, res.hypothesis, cfg.mc_budget, child_seed(seed, 1))
    threshold = 1.0 - beta / 2
    verdict = NOT_TRUNCATED if m > threshold else TRUNCATED
    return DetectionVerdict(verdict, res.hypothesis, m, threshold, res.report.to_dict())


def learn_from_positives_smooth(
    p_sampler: DistributionSpec,
    reference: DistributionSpec,
    cfg: IterativeConfig,
    seed: int = 0,
) -> IterativeResult:
    """Learn from positives alone, using draws from a reference distribution
    that the true feature distribution is smooth with respect to."""
    return iterative_constreg(p_sampler, reference, cfg, seed)
