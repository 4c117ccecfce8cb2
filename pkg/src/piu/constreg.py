"""Constrained L1 polynomial regression and its boosted PTF learner, plus an
unconstrained L1-regression baseline for fully labeled data.

The constrained program is

    minimise   (1/|U|) sum_{x in U} |p(x)|
    subject to (1/|P|) sum_{x in P} min(p(x), 1) >= 1 - rho

over polynomials of degree <= k, linearised with z(x) >= +-p(x) on U and
w(x) <= p(x), w(x) <= 1 on P.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .dist import DistributionSpec, sample
from .hypothesis import Ptf
from .lp import OPTIMAL, LPProblem, solve_lp
from .metrics import constreg_sample_size
from .poly import BoxScaling, Polynomial, n_monomials
from .report import RunReport
from .seeding import child_seed

log = logging.getLogger(__name__)

# small, well-conditioned LPs go to the dense simplex; monomial features of
# higher degree are too ill-conditioned for an unfactorised Bland simplex
DENSE_LP_ROWS = 200
DENSE_LP_MONOMIALS = 6
SPARSE_DS_ROWS = 3000
# the coverage row is tightened by this much (per positive) so the solver's
# feasibility tolerance can never break the exact Markov-type guarantee
COVERAGE_MARGIN = 1e-7


class SolverFailure(RuntimeError):
    pass


def _points(X, d: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if d in (None, 1) else X.reshape(1, -1)
    if d is not None and X.shape[0] and X.shape[1] != d:
        raise ValueError(f"expected points in R^{d}, got shape {X.shape}")
    return X


def _lp_method(method: str, rows: int, monomials: int) -> str:
    if method == "auto":
        if rows <= DENSE_LP_ROWS and monomials <= DENSE_LP_MONOMIALS:
            return "simplex"
        # dual simplex wins on mid-sized programs, interior point beyond
        return "highs-ds" if rows <= SPARSE_DS_ROWS else "highs-ipm"
    return method


def _orthonormal_basis(F: np.ndarray) -> np.ndarray:
    """Matrix B with F @ B orthonormal on the numerical column space of F.

    LPs are solved over a = B^+ c instead of the monomial coefficients c:
    monomial columns are nearly collinear at high degree, which wrecks the
    pivoting of any simplex. Coefficients are recovered as c = B a.
    """
    _, sv, Vt = np.linalg.svd(F, full_matrices=False)
    r = max(1, int(np.sum(sv > sv[0] * 1e-12)))
    return Vt[:r].T / sv[:r]


@dataclass
class RegressionFit:
    polynomial: Polynomial
    objective: float  # mean |p| on U
    constraint_value: float  # mean min(p, 1) on P
    lp_status: str


def fit_constrained_regression(
    P,
    U,
    k: int,
    rho: float,
    scaling: BoxScaling | None = None,
    method: str = "auto",
    margin: float = COVERAGE_MARGIN,
) -> RegressionFit:
    """Solve the constrained L1 regression LP; see the module docstring."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    P = _points(P)
    if P.shape[0] == 0:
        raise ValueError("constrained regression needs at least one positive")
    d = P.shape[1]
    U = _points(U, d)
    if U.shape[0] == 0:
        p = Polynomial.constant(d, k, 1.0)
        return RegressionFit(p, 0.0, 1.0, OPTIMAL)

    shell = Polynomial(d, k, np.zeros(n_monomials(d, k)), scaling)
    FP, FU = shell.features(P), shell.features(U)
    back = _orthonormal_basis(np.vstack([FU, FP]))
    GP, GU = FP @ back, FU @ back
    nP, nU, M = GP.shape[0], GU.shape[0], back.shape[1]
    # variables: c (M, free) | z (nU, >= 0) | w (nP, <= 1)
    IU, IP = sp.identity(nU, format="csr"), sp.identity(nP, format="csr")
    A = sp.vstack(
        [
            sp.hstack([sp.csr_matrix(GU), -IU, sp.csr_matrix((nU, nP))]),
            sp.hstack([sp.csr_matrix(-GU), -IU, sp.csr_matrix((nU, nP))]),
            sp.hstack([sp.csr_matrix(-GP), sp.csr_matrix((nP, nU)), IP]),
            sp.hstack([sp.csr_matrix((1, M + nU)), -np.ones((1, nP))]),
        ],
        format="csr",
    )
    # w <= 1 caps the coverage at 1, so the margin never pushes past it
    b = np.concatenate([np.zeros(2 * nU + nP), [-min(1.0, 1.0 - rho + margin) * nP]])
    c = np.concatenate([np.zeros(M), np.full(nU, 1.0 / nU), np.zeros(nP)])
    lb = np.concatenate([np.full(M, -np.inf), np.zeros(nU), np.full(nP, -np.inf)])
    ub = np.concatenate([np.full(M, np.inf), np.full(nU, np.inf), np.ones(nP)])
    meth = _lp_method(method, A.shape[0], M)
    sol = solve_lp(LPProblem(c, A, b, lb, ub), method=meth)
    if sol.status != OPTIMAL:
        raise SolverFailure(f"constrained regression LP ended with status {sol.status}")
    p = Polynomial(d, k, back @ sol.x[:M], scaling)
    vals_P, vals_U = FP @ p.coefficients, FU @ p.coefficients
    return RegressionFit(
        p,
        float(np.mean(np.abs(vals_U))),
        float(np.mean(np.minimum(vals_P, 1.0))),
        sol.status,
    )


def solve_constrained_regression(P, U, k: int, rho: float, scaling: BoxScaling | None = None) -> Polynomial:
    return fit_constrained_regression(P, U, k, rho, scaling).polynomial


def pick_threshold(p: Polynomial, U, rho: float) -> tuple[float, int]:
    """Threshold in [0, 1 - sqrt(rho)] capturing the fewest U points.

    The count only changes at U's p-values, so the candidates are the two
    endpoints and the p-values inside the range; the largest minimiser wins.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    top = 1.0 - math.sqrt(rho)
    U = _points(U, p.d)
    if U.shape[0] == 0:
        return top, 0
    vals = np.sort(p(U))
    inside = vals[(vals >= 0.0) & (vals <= top)]
    cands = np.unique(np.concatenate([[0.0, top], inside]))
    counts = vals.size - np.searchsorted(vals, cands, side="left")
    best = np.flatnonzero(counts == counts.min())[-1]
    return float(cands[best]), int(counts[best])


@dataclass
class ConstRegConfig:
    zeta: float
    delta: float
    sigma: float
    q: float
    alpha: float
    k: int
    cN: float = 4.0
    cT: float = 2.0
    n_cap: int = 200_000
    reps_cap: int | None = None
    lp_method: str = "auto"
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.zeta < 1.0:
            raise ValueError("zeta must lie in (0, 1)")
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if not 0.0 < self.sigma <= 1.0 or self.q < 1.0 or not 0.0 < self.alpha <= 1.0:
            raise ValueError("need sigma, alpha in (0, 1] and q >= 1")
        if self.k < 0:
            raise ValueError("degree must be non-negative")
        if self.cN <= 0 or self.cT <= 0:
            raise ValueError("constants must be positive")
        if self.rho >= 1.0:
            raise ValueError(f"zeta={self.zeta} gives rho={self.rho:.3g} >= 1; decrease zeta")

    @property
    def rho(self) -> float:
        return 2.0 / (self.alpha * self.sigma) * self.zeta ** (1.0 / (2.0 * self.q))

    def repetitions(self) -> int:
        T = math.ceil(self.cT * self.zeta**-0.5 * math.log(1.0 / self.delta))
        return T if self.reps_cap is None else max(1, min(T, self.reps_cap))

    def sample_size(self, d: int) -> int:
        n = constreg_sample_size(self.zeta, n_monomials(d, self.k), self.delta, self.cN)
        if n > self.n_cap:
            log.warning("per-repetition sample size %d capped at %d", n, self.n_cap)
        return min(n, self.n_cap)

    def validation_size(self, T: int) -> int:
        n = math.ceil(self.cN / self.zeta * math.log(T / self.delta))
        return min(n, self.n_cap)

    def to_dict(self) -> dict:
        return {
            "zeta": self.zeta, "delta": self.delta, "sigma": self.sigma, "q": self.q,
            "alpha": self.alpha, "k": self.k, "cN": self.cN, "cT": self.cT,
            "nCap": self.n_cap, "repsCap": self.reps_cap, "rho": self.rho,
        }


@dataclass
class RegressionOutcome:
    polynomial: Polynomial
    threshold: float
    objective: float
    constraint_value: float
    lp_status: str
    p_fraction: float  # |H ∩ P_i| / |P_i|
    u_fraction: float  # |H ∩ U_i| / |U_i|
    p_count: int
    n_positives: int
    validation_count: int = -1

    @property
    def hypothesis(self) -> Ptf:
        return Ptf(self.polynomial, self.threshold)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "objective": self.objective,
            "constraintValue": self.constraint_value,
            "lpStatus": self.lp_status,
            "pFraction": self.p_fraction,
            "uFraction": self.u_fraction,
            "validationCount": self.validation_count,
            "coefficients": self.polynomial.coefficients.tolist(),
        }


@dataclass
class BoostResult:
    hypothesis: Ptf
    outcomes: list[RegressionOutcome]
    chosen: int
    report: RunReport = field(repr=False)


def _one_repetition(p_sampler, u_sampler, cfg: ConstRegConfig, n: int, seed: int, i: int) -> RegressionOutcome:
    rho = cfg.rho
    last: Exception | None = None
    for attempt in range(2):  # one reseeded retry on solver failure
        P = sample(p_sampler, child_seed(seed, 1, i, attempt, 0), n)
        U = sample(u_sampler, child_seed(seed, 1, i, attempt, 1), n)
        try:
            fit = fit_constrained_regression(P, U, cfg.k, rho, BoxScaling.fit(P, U), cfg.lp_method)
        except SolverFailure as e:
            log.warning("repetition %d attempt %d: %s", i, attempt, e)
            last = e
            continue
        t, _ = pick_threshold(fit.polynomial, U, rho)
        h = Ptf(fit.polynomial, t)
        pc = int(np.count_nonzero(h.contains(P)))
        uc = int(np.count_nonzero(h.contains(U)))
        return RegressionOutcome(
            fit.polynomial, t, fit.objective, fit.constraint_value, fit.lp_status,
            pc / n, uc / n, pc, n,
        )
    raise SolverFailure(f"repetition {i} failed twice: {last}")


def boosted_constreg(
    p_sampler: DistributionSpec,
    u_sampler: DistributionSpec,
    cfg: ConstRegConfig,
    seed: int = 0,
) -> BoostResult:
    """Repeat constrained regression on fresh samples and keep the PTF that
    captures the fewest points of a fresh unlabeled validation set."""
    d = p_sampler.dim
    T = cfg.repetitions()
    n = cfg.sample_size(d)
    report = RunReport("alg3", params={**cfg.to_dict(), "T": T, "n": n, "seed": seed})
    run = lambda i: _one_repetition(p_sampler, u_sampler, cfg, n, seed, i)  # noqa: E731
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            outcomes = list(ex.map(run, range(T)))
    else:
        outcomes = [run(i) for i in range(T)]

    V = sample(u_sampler, child_seed(seed, 2), cfg.validation_size(T))
    for o in outcomes:
        o.validation_count = int(np.count_nonzero(o.hypothesis.contains(V)))
    chosen = min(range(T), key=lambda i: (outcomes[i].validation_count, i))
    report.iterations = [{"repetition": i, **o.to_dict()} for i, o in enumerate(outcomes)]
    report.params["validationSize"] = int(V.shape[0])
    report.params["chosen"] = chosen
    return BoostResult(outcomes[chosen].hypothesis, outcomes, chosen, report)


# -- unconstrained baseline -----------------------------------------------------


def fit_l1_regression(X, y, k: int, scaling: BoxScaling | None = None, method: str = "auto") -> Polynomial:
    """Polynomial minimising (1/n) sum |y_i - p(x_i)|."""
    X = _points(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] == 0 or X.shape[0] != y.shape[0]:
        raise ValueError("need a non-empty labeled set with one label per point")
    d = X.shape[1]
    shell = Polynomial(d, k, np.zeros(n_monomials(d, k)), scaling)
    F0 = shell.features(X)
    back = _orthonormal_basis(F0)
    F = F0 @ back
    n, M = F.shape
    I = sp.identity(n, format="csr")
    # z_i >= y_i - p(x_i) and z_i >= p(x_i) - y_i
    A = sp.vstack([sp.hstack([sp.csr_matrix(-F), -I]), sp.hstack([sp.csr_matrix(F), -I])], format="csr")
    b = np.concatenate([-y, y])
    c = np.concatenate([np.zeros(M), np.full(n, 1.0 / n)])
    lb = np.concatenate([np.full(M, -np.inf), np.zeros(n)])
    sol = solve_lp(LPProblem(c, A, b, lb), method=_lp_method(method, A.shape[0], M))
    if sol.status != OPTIMAL:
        raise SolverFailure(f"L1 regression LP ended with status {sol.status}")
    return Polynomial(d, k, back @ sol.x[:M], scaling)


def best_threshold(p: Polynomial, X, y) -> tuple[float, int]:
    """t in [0, 1] minimising misclassifications of 1{p(x) >= t}; largest minimiser."""
    vals = p(_points(X, p.d))
    y = np.asarray(y).reshape(-1).astype(bool)
    cands = np.unique(np.concatenate([[0.0, 1.0], vals[(vals >= 0.0) & (vals <= 1.0)]]))
    pos, neg = np.sort(vals[y]), np.sort(vals[~y])
    # errors(t) = #{positives with p < t} + #{negatives with p >= t}
    errs = np.searchsorted(pos, cands, side="left") + (neg.size - np.searchsorted(neg, cands, side="left"))
    best = np.flatnonzero(errs == errs.min())[-1]
    return float(cands[best]), int(errs[best])


LabeledSampler = Callable[[int, np.random.Generator], tuple]


def l1_regression_baseline(
    X,
    y,
    k: int,
    eps: float = 0.1,
    delta: float = 0.1,
    seed: int = 0,
    sampler: LabeledSampler | None = None,
    cN: float = 4.0,
    reps_cap: int | None = None,
    val_cap: int = 200_000,
) -> Ptf:
    """Unconstrained L1 polynomial regression followed by the best threshold.

    Single-shot on (X, y) unless ``sampler(n, rng) -> (X, y)`` is given; then
    ceil((1/eps) ln(1/delta)) repetitions of size len(X) are drawn and the
    one with the fewest errors on a fresh validation draw is returned.
    """
    X = _points(X)
    y = np.asarray(y).reshape(-1)
    if X.shape[0] == 0:
        raise ValueError("need at least one labeled point")

    def fit(Xs, ys):
        p = fit_l1_regression(Xs, ys, k, BoxScaling.fit(Xs))
        t, _ = best_threshold(p, Xs, ys)
        return Ptf(p, t)

    if sampler is None:
        return fit(X, y)
    from .seeding import rng as make_rng

    reps = math.ceil(math.log(1.0 / delta) / eps)
    if reps_cap is not None:
        reps = max(1, min(reps, reps_cap))
    hs = [fit(X, y)]
    for i in range(1, reps):
        Xi, yi = sampler(X.shape[0], make_rng(seed, 1, i))
        hs.append(fit(_points(Xi), np.asarray(yi)))
    m = min(val_cap, math.ceil(cN / eps * math.log(reps / delta)))
    Xv, yv = sampler(m, make_rng(seed, 2))
    yv = np.asarray(yv).reshape(-1).astype(bool)
    errs = [int(np.count_nonzero(h.contains(_points(Xv)) != yv)) for h in hs]
    return hs[int(np.argmin(errs))]
