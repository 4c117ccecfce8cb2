"""Iterative constrained regression: the computationally efficient PIU learner.

Each round restricts both sample streams to the survival set (the
intersection of all earlier PTFs), checks that the set still carries enough
unlabeled and positive mass, and learns a new PTF on the restricted streams
with boosted constrained regression.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .constreg import BoostResult, ConstRegConfig, SolverFailure, boosted_constreg
from .dist import AttemptsExhausted, DistributionSpec, Truncated, sample
from .hypothesis import Hypothesis, intersect
from .metrics import HOEFFDING_95
from .poly import n_monomials
from .report import RunReport
from .seeding import child_seed

log = logging.getLogger(__name__)


class LearnerAbort(RuntimeError):
    """A learner stopped early; ``report`` carries the diagnostics."""

    def __init__(self, msg: str, report: RunReport | None = None):
        super().__init__(msg)
        self.report = report


@dataclass
class IterativeConfig:
    eps: float
    delta: float
    sigma: float
    q: float
    alpha: float
    k: int
    cZeta: float = 1.0
    cM: float = 4.0
    cN: float = 4.0
    cT: float = 2.0
    max_iterations: int | None = None
    zeta_floor: float = 1e-6
    m_cap: int = 200_000
    n_cap: int = 200_000
    reps_cap: int | None = None
    check_m: int = 20_000
    lp_method: str = "auto"

    def __post_init__(self):
        if not (0.0 < self.eps < 0.5 and 0.0 < self.delta < 0.5):
            raise ValueError("eps and delta must lie in (0, 1/2)")
        if not 0.0 < self.sigma <= 1.0 or self.q < 1.0 or not 0.0 < self.alpha <= 1.0:
            raise ValueError("need sigma, alpha in (0, 1] and q >= 1")
        if self.k < 0:
            raise ValueError("degree must be non-negative")
        if min(self.cZeta, self.cM, self.cN, self.cT) <= 0:
            raise ValueError("constants must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    # rescaled accuracy and confidence
    @property
    def eps_eff(self) -> float:
        return self.alpha / 6.0 if self.eps >= self.alpha else self.eps

    @property
    def delta_eff(self) -> float:
        return min(self.delta, self.sigma**2 * self.eps_eff ** (2.0 * self.q))

    @property
    def gamma(self) -> float:
        return self.sigma * self.eps_eff**self.q

    @property
    def iterations(self) -> int:
        T = math.ceil(1.0 / self.gamma - 1e-12)
        return T if self.max_iterations is None else min(T, self.max_iterations)

    @property
    def zeta_cap(self) -> float:
        # keeps rho = (2 / (alpha sigma)) zeta^(1/2q) <= 1/4
        return (self.alpha * self.sigma / 8.0) ** (2.0 * self.q)

    @property
    def zeta_raw(self) -> float:
        e, q = self.eps_eff, self.q
        return self.cZeta * (self.sigma * e) ** (5.0 * q * q) * self.alpha ** (8.0 * q)

    @property
    def zeta(self) -> float:
        return min(max(self.zeta_raw, self.zeta_floor), self.zeta_cap)

    def samples_per_round(self, d: int) -> int:
        m = math.ceil(
            self.cM * self.gamma**-3 * (n_monomials(d, self.k) + math.log(1.0 / self.delta_eff))
        )
        return min(m, self.m_cap)

    def constreg_config(self) -> ConstRegConfig:
        return ConstRegConfig(
            zeta=self.zeta, delta=self.delta_eff, sigma=self.sigma, q=self.q, alpha=self.alpha,
            k=self.k, cN=self.cN, cT=self.cT, n_cap=self.n_cap, reps_cap=self.reps_cap,
            lp_method=self.lp_method,
        )

    def to_dict(self) -> dict:
        return {
            "eps": self.eps, "delta": self.delta, "sigma": self.sigma, "q": self.q,
            "alpha": self.alpha, "k": self.k, "cZeta": self.cZeta, "cM": self.cM,
            "cN": self.cN, "cT": self.cT, "epsEffective": self.eps_eff,
            "deltaEffective": self.delta_eff, "gamma": self.gamma, "T": self.iterations,
            "zetaRaw": self.zeta_raw, "zeta": self.zeta, "zetaFloor": self.zeta_floor,
            "zetaCap": self.zeta_cap, "nCap": self.n_cap, "repsCap": self.reps_cap,
            "mCap": self.m_cap,
        }


@dataclass
class IterativeResult:
    hypothesis: Hypothesis
    components: list[Hypothesis]
    boosts: list[BoostResult]
    report: RunReport
    break_reason: str | None = None
    self_check_passed: bool = True
    details: dict = field(default_factory=dict)


def _inside(S: Hypothesis | None, X: np.ndarray) -> np.ndarray:
    return np.ones(X.shape[0], dtype=bool) if S is None else S.contains(X)


def iterative_constreg(
    p_sampler: DistributionSpec,
    u_sampler: DistributionSpec,
    cfg: IterativeConfig,
    seed: int = 0,
) -> IterativeResult:
    """Learn an intersection of degree-k PTFs from positive and unlabeled streams."""
    d = p_sampler.dim
    if u_sampler.dim != d:
        raise ValueError("positive and unlabeled streams disagree on dimension")
    gamma, alpha, T = cfg.gamma, cfg.alpha, cfg.iterations
    m = cfg.samples_per_round(d)
    creg = cfg.constreg_config()
    reps = creg.repetitions()
    n_inner = creg.sample_size(d)
    scheduled = T * reps * 2 * n_inner + T * creg.validation_size(reps)
    fail_prob = min(0.5, cfg.delta_eff / max(1, scheduled))

    report = RunReport("alg2", params={**cfg.to_dict(), "m": m, "seed": seed, "rho": creg.rho})
    if cfg.zeta_raw < cfg.zeta_floor:
        report.note(f"zeta raised from {cfg.zeta_raw:.3g} to the floor {cfg.zeta_floor:g}")
    if cfg.zeta_raw > cfg.zeta_cap:
        report.note(f"zeta lowered from {cfg.zeta_raw:.3g} to the cap {cfg.zeta_cap:.3g}")

    hs: list[Hypothesis] = []
    boosts: list[BoostResult] = []
    truncation_ok = True
    break_reason = None
    for i in range(1, T + 1):
        S = intersect(hs) if hs else None
        U = sample(u_sampler, child_seed(seed, i, 0), m)
        P = sample(p_sampler, child_seed(seed, i, 1), m)
        u_in, p_in = int(_inside(S, U).sum()), int(_inside(S, P).sum())
        entry = {"i": i, "uMassFrac": u_in / m, "pMassFrac": p_in / m}
        if i > 1 and u_in <= gamma * m:
            break_reason = f"unlabeled mass of the survival set {u_in / m:.4f} <= gamma = {gamma:.4f} at iteration {i}"
        elif i > 1 and p_in <= alpha / 2 * m:
            break_reason = f"positive mass of the survival set {p_in / m:.4f} <= alpha/2 = {alpha / 2:.4f} at iteration {i}"
        if break_reason:
            report.iterations.append({**entry, "status": "break"})
            break

        if S is None:
            D_i, P_i = u_sampler, p_sampler
        else:
            D_i = Truncated(u_sampler, S, mass_floor=gamma / 2, fail_prob=fail_prob)
            P_i = Truncated(p_sampler, S, mass_floor=gamma * alpha / 4, fail_prob=fail_prob)
        try:
            res = boosted_constreg(P_i, D_i, creg, child_seed(seed, i, 2))
            if S is not None:
                # spot-check that the restricted streams stay inside S
                probe_d = sample(D_i, child_seed(seed, i, 3), 200)
                probe_p = sample(P_i, child_seed(seed, i, 4), 200)
                ok = bool(S.contains(probe_d).all() and S.contains(probe_p).all())
                truncation_ok &= ok
        except AttemptsExhausted as e:
            report.iterations.append({**entry, "status": "aborted", "error": str(e)})
            report.break_reason = f"rejection sampling exhausted at iteration {i}"
            raise LearnerAbort(f"iteration {i}: {e}", report) from e
        except SolverFailure as e:
            report.iterations.append({**entry, "status": "aborted", "error": str(e)})
            report.break_reason = f"solver failure at iteration {i}"
            raise LearnerAbort(f"iteration {i}: {e}", report) from e
        chosen = res.outcomes[res.chosen]
        report.iterations.append(
            {
                **entry,
                "status": "completed",
                "zeta": creg.zeta,
                "rho": creg.rho,
                "objective": chosen.objective,
                "feasValue": chosen.p_fraction,
                "threshold": chosen.threshold,
            }
        )
        hs.append(res.hypothesis)
        boosts.append(res)

    H = intersect(hs)
    report.break_reason = break_reason

    # chaining self-check on a fresh unlabeled draw: D(S_i \ H_i) may grow by
    # at most gamma^2 (plus sampling slack) from one round to the next
    V = sample(u_sampler, child_seed(seed, 0, 9), cfg.check_m)
    alive = np.ones(V.shape[0], dtype=bool)
    removed = []
    for h in hs:
        inside = alive & h.contains(V)
        removed.append(float((alive & ~inside).sum()) / V.shape[0])
        alive = inside
    slack = gamma**2 + 2 * HOEFFDING_95 / math.sqrt(cfg.check_m)
    chaining_ok = all(b <= a + slack for a, b in zip(removed, removed[1:]))
    report.self_check = {
        "removedMass": removed,
        "chainingSlack": slack,
        "chainingOk": chaining_ok,
        "truncationOk": truncation_ok,
        "massChecksOk": all(
            it["status"] != "completed" or it["i"] == 1 or (it["uMassFrac"] > gamma and it["pMassFrac"] > alpha / 2)
            for it in report.iterations
        ),
    }
    if not chaining_ok:
        log.warning("chaining self-check failed: removed masses %s", removed)
    return IterativeResult(
        H, hs, boosts, report, break_reason, chaining_ok and truncation_ok,
    )
