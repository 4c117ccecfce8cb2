"""Pessimistic-ERM for 1-D thresholds and intervals.

Pessimistic-ERM picks the hypothesis capturing the fewest unlabeled points
among those covering at least a (1 - rho) fraction of the positives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .dist import DistributionSpec, sample
from .hypothesis import (
    ClassDescriptor,
    Hypothesis,
    Interval1D,
    Threshold1D,
    intersect,
)
from .report import RunReport
from .seeding import child_seed


class PermInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class PermSolution:
    hypothesis: Hypothesis
    objective: float  # |H ∩ U| / |U|, 0 for empty U
    feas_margin: float  # |H ∩ P| / |P| - (1 - rho)
    u_count: int
    p_count: int


def _coords(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError("exact Pessimistic-ERM is only available in one dimension")
        X = X[:, 0]
    X = X.reshape(-1)
    if not np.isfinite(X).all():
        raise ValueError("sample coordinates must be finite")
    return X


@lru_cache(maxsize=4096)
def required_count(n_pos: int, rho: float) -> int:
    """Smallest integer count c with c / n_pos >= 1 - rho, in exact arithmetic.

    rho is read as the nearest fraction with denominator <= 10^12, so a float
    such as 1/3 means exactly one third.
    """
    r = rho if isinstance(rho, Fraction) else Fraction(rho).limit_denominator(10**12)
    return max(0, math.ceil((1 - r) * n_pos))


def _threshold_family(cls: ClassDescriptor) -> tuple | None:
    if cls.family == "threshold1d":
        return tuple(cls.directions)
    if cls.family == "halfspace" and cls.d == 1:
        return ("le", "ge")
    return None


def perm_exact(P, U, rho: float, cls: ClassDescriptor) -> PermSolution:
    """Exact Pessimistic-ERM over 1-D thresholds or closed intervals.

    Counts change only at sample coordinates, so the optimum is attained
    with cut points on positive samples (or at -inf when no positive needs
    covering). Ties go to the smaller unlabeled count, then the smaller cut.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    p = np.sort(_coords(P))
    u = np.sort(_coords(U))
    if p.size == 0:
        raise ValueError("Pessimistic-ERM needs at least one positive sample")
    need = required_count(p.size, rho)
    dirs = _threshold_family(cls)

    cands: list[tuple[int, float, int, Hypothesis]] = []
    if dirs is not None:
        for order, direction in enumerate(("le", "ge")):
            if direction not in dirs:
                continue
            if direction == "le":
                cut = -math.inf if need == 0 else p[need - 1]
                uc = int(u.searchsorted(cut, side="right"))
            else:
                cut = math.inf if need == 0 else p[p.size - need]
                uc = int(u.size - u.searchsorted(cut, side="left"))
            cands.append((uc, cut, order, Threshold1D(direction, cut)))
    elif cls.family == "interval1d":
        if need == 0:
            cands.append((0, -math.inf, 0, Interval1D(-math.inf, -math.inf)))
        else:
            lo = p[: p.size - need + 1]
            hi = p[need - 1 :]
            uc = u.searchsorted(hi, side="right") - u.searchsorted(lo, side="left")
            best = np.lexsort((hi, lo, uc))[0]
            cands.append((int(uc[best]), float(lo[best]), 0, Interval1D(lo[best], hi[best])))
    else:
        raise ValueError(f"exact Pessimistic-ERM does not support the {cls.family!r} class")
    if not cands:
        raise PermInfeasible("no hypothesis in the class covers the required positives")

    uc, _, _, h = min(cands, key=lambda c: c[:3])
    pc = int(np.count_nonzero(h.contains(p)))
    if pc < need:  # cannot happen: candidates are built to cover `need` positives
        raise PermInfeasible("candidate failed the coverage constraint")
    return PermSolution(
        hypothesis=h,
        objective=uc / u.size if u.size else 0.0,
        feas_margin=pc / p.size - (1.0 - rho),
        u_count=uc,
        p_count=pc,
    )


def _describe(h: Hypothesis):
    if isinstance(h, Threshold1D):
        return {"direction": h.direction, "cut": h.cut}
    if isinstance(h, Interval1D):
        return {"lo": h.lo, "hi": h.hi}
    return h.to_dict()


@dataclass
class IterativePermResult:
    hypothesis: Hypothesis
    rounds: list[PermSolution]
    removed: list[int]  # |U ∩ S_i \ H_i| per round
    survivors: list[int]  # |U ∩ S_i| per round
    report: RunReport


def iterative_perm(
    p_sampler: DistributionSpec,
    u_sampler: DistributionSpec,
    eps: float,
    delta: float,
    cls: ClassDescriptor,
    n: int,
    seed: int = 0,
    params=None,
) -> IterativePermResult:
    """Repeated Pessimistic-ERM on one batch of samples.

    Draws n positives and n unlabeled points once, then for ceil(1/eps)
    rounds solves Pessimistic-ERM with rho = 0 on the unlabeled points that
    survive every earlier round's hypothesis. Returns the intersection.
    """
    if not (0.0 < eps < 0.5 and 0.0 < delta < 0.5):
        raise ValueError("eps and delta must lie in (0, 1/2)")
    if n < 1:
        raise ValueError("n must be positive")
    P = _coords(sample(p_sampler, child_seed(seed, 0), n))
    U = _coords(sample(u_sampler, child_seed(seed, 1), n))
    T = math.ceil(1.0 / eps)

    report = RunReport(
        "alg1",
        params={"eps": eps, "delta": delta, "n": n, "T": T, "seed": seed, "class": cls.family},
    )
    if params is not None:
        report.params.update(params.to_dict())
    alive = np.ones(U.size, dtype=bool)
    hs: list[Hypothesis] = []
    rounds: list[PermSolution] = []
    removed: list[int] = []
    survivors: list[int] = []
    for i in range(1, T + 1):
        sol = perm_exact(P, U[alive], 0.0, cls)
        inside = sol.hypothesis.contains(U) & alive
        survivors.append(int(alive.sum()))
        removed.append(int(alive.sum() - inside.sum()))
        report.iterations.append(
            {
                "round": i,
                "survivors": survivors[-1],
                "removed": removed[-1],
                "objective": sol.objective,
                "feasMargin": sol.feas_margin,
                "cut": _describe(sol.hypothesis),
            }
        )
        hs.append(sol.hypothesis)
        rounds.append(sol)
        alive = inside
    monotone = all(a >= b for a, b in zip(removed, removed[1:]))
    report.self_check["removedNonIncreasing"] = monotone
    return IterativePermResult(intersect(hs), rounds, removed, survivors, report)


CERTIFIED = "certified"
FAILED_FEASIBILITY = "failedFeasibility"
FAILED_OPTIMALITY = "failedOptimality"


def robust_perm_certify(
    h: Hypothesis,
    P,
    U,
    gamma: float,
    eps: float,
    cls: ClassDescriptor,
    feas_tol: float = 1e-9,
) -> str:
    """Two-tolerance check: covers 1 - gamma of P, and captures no more of U
    than the exact optimum at tolerance 5 eps."""
    if gamma > eps:
        raise ValueError("need gamma <= eps")
    p, u = _coords(P), _coords(U)
    pc = int(np.count_nonzero(h.contains(p)))
    if pc < required_count(p.size, gamma):
        return FAILED_FEASIBILITY
    ref = perm_exact(p, u, min(1.0, 5.0 * eps), cls)
    obj = float(np.count_nonzero(h.contains(u))) / u.size if u.size else 0.0
    if obj > ref.objective + feas_tol:
        return FAILED_OPTIMALITY
    return CERTIFIED
