"""Distribution specs, samplers, masses, rejection sampling and synthetic PIU
instances.

A spec is anything with ``dim`` and ``draw(n, rng) -> (n, dim) array``; the
learners only ever see specs through ``draw``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

from .hypothesis import (
    Hypothesis,
    Interval1D,
    Intersection,
    Threshold1D,
    hypothesis_from_dict,
)
from .seeding import rng as make_rng

DEFAULT_MC_BUDGET = 100_000


class AttemptsExhausted(RuntimeError):
    """Rejection sampling hit its attempt cap; the region's mass is below the floor."""


class DistributionSpec:
    dim: int

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def _vec(v) -> np.ndarray:
    a = np.array(v, dtype=float).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Gaussian(DistributionSpec):
    """Axis-aligned Gaussian; ``var`` holds the diagonal of the covariance."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean, var = _vec(self.mean), _vec(self.var)
        if mean.shape != var.shape:
            raise ValueError("mean and variance must have the same length")
        if np.any(var <= 0):
            raise ValueError("variances must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)

    @property
    def dim(self):
        return self.mean.shape[0]

    def draw(self, n, rng):
        return rng.standard_normal((n, self.dim)) * np.sqrt(self.var) + self.mean

    def to_dict(self):
        return {"kind": "gaussian", "mean": self.mean.tolist(), "var": self.var.tolist()}


@dataclass(frozen=True, eq=False)
class UniformBox(DistributionSpec):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lo), _vec(self.hi)
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise ValueError("UniformBox needs lo < hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    def draw(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def to_dict(self):
        return {"kind": "uniform", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True, eq=False)
class Mixture(DistributionSpec):
    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = _vec(self.weights)
        comps = tuple(self.components)
        if len(comps) != w.shape[0] or not comps:
            raise ValueError("need one weight per component")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be a probability vector")
        if len({c.dim for c in comps}) != 1:
            raise ValueError("mixture components disagree on dimension")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def dim(self):
        return self.components[0].dim

    def draw(self, n, rng):
        labels = rng.choice(len(self.components), size=n, p=self.weights)
        out = np.empty((n, self.dim))
        for j, comp in enumerate(self.components):
            idx = np.flatnonzero(labels == j)
            if idx.size:
                out[idx] = comp.draw(idx.size, rng)
        return out

    def to_dict(self):
        return {
            "kind": "mixture",
            "weights": self.weights.tolist(),
            "components": [c.to_dict() for c in self.components],
        }


@dataclass(frozen=True, eq=False)
class Empirical(DistributionSpec):
    """Uniform resampling (with replacement) from a fixed point set."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.shape[0] == 0:
            raise ValueError("an empirical distribution needs at least one point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return self.points.shape[1]

    def draw(self, n, rng):
        if self.points.shape[0] == 1:
            return np.repeat(self.points, n, axis=0)
        return self.points[rng.integers(0, self.points.shape[0], size=n)]

    def to_dict(self):
        return {"kind": "empirical", "points": self.points.tolist()}


@dataclass(frozen=True, eq=False)
class Truncated(DistributionSpec):
    """``base`` conditioned on ``region``, sampled by rejection."""

    base: DistributionSpec
    region: Hypothesis
    mass_floor: float = 1e-4
    fail_prob: float = 1e-9

    def __post_init__(self):
        if self.region.dim != self.base.dim:
            raise ValueError("region and base disagree on dimension")

    @property
    def dim(self):
        return self.base.dim

    def draw(self, n, rng):
        pts, _ = rejection_draws(self.base, self.region, n, self.mass_floor, self.fail_prob, rng)
        return pts

    def to_dict(self):
        return {
            "kind": "truncated",
            "base": self.base.to_dict(),
            "region": self.region.to_dict(),
            "mass_floor": self.mass_floor,
            "fail_prob": self.fail_prob,
        }


@dataclass(frozen=True, eq=False)
class Corrupted(DistributionSpec):
    """With probability ``gamma`` a clean draw, otherwise an adversarial one."""

    clean: DistributionSpec
    gamma: float
    adversary: DistributionSpec

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.clean.dim != self.adversary.dim:
            raise ValueError("clean and adversarial sources disagree on dimension")

    @property
    def dim(self):
        return self.clean.dim

    def draw(self, n, rng):
        keep = rng.random(n) < self.gamma
        out = np.empty((n, self.dim))
        k = int(keep.sum())
        if k:
            out[keep] = self.clean.draw(k, rng)
        if n - k:
            out[~keep] = self.adversary.draw(n - k, rng)
        return out

    def to_dict(self):
        return {
            "kind": "corrupted",
            "clean": self.clean.to_dict(),
            "gamma": self.gamma,
            "adversary": self.adversary.to_dict(),
        }


def spec_from_dict(obj: dict) -> DistributionSpec:
    kind = obj.get("kind")
    if kind == "gaussian":
        return Gaussian(obj["mean"], obj["var"])
    if kind == "uniform":
        return UniformBox(obj["lo"], obj["hi"])
    if kind == "mixture":
        return Mixture(obj["weights"], tuple(spec_from_dict(c) for c in obj["components"]))
    if kind == "empirical":
        return Empirical(np.array(obj["points"], dtype=float))
    if kind == "truncated":
        return Truncated(
            spec_from_dict(obj["base"]),
            hypothesis_from_dict(obj["region"]),
            obj.get("mass_floor", 1e-4),
            obj.get("fail_prob", 1e-9),
        )
    if kind == "corrupted":
        return Corrupted(spec_from_dict(obj["clean"]), obj["gamma"], spec_from_dict(obj["adversary"]))
    raise ValueError(f"unknown distribution kind {kind!r}")


def sample(spec: DistributionSpec, seed: int, n: int) -> np.ndarray:
    """n i.i.d. draws from spec; a pure function of (spec, seed, n)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return np.empty((0, spec.dim))
    return spec.draw(n, make_rng(seed))


# -- rejection sampling ------------------------------------------------------


def attempt_cap(mass_floor: float, fail_prob: float) -> int:
    if not 0.0 < mass_floor <= 1.0:
        raise ValueError("mass_floor must lie in (0, 1]")
    if not 0.0 < fail_prob < 1.0:
        raise ValueError("fail_prob must lie in (0, 1)")
    return math.ceil(math.log(1.0 / fail_prob) / mass_floor)


def rejection_draws(
    base: DistributionSpec,
    region: Hypothesis,
    n: int,
    mass_floor: float,
    fail_prob: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """n draws from ``base`` conditioned on ``region``.

    Returns the accepted points and the number of base draws each one took.
    Raises AttemptsExhausted as soon as any single draw needs more than
    ceil(ln(1/fail_prob) / mass_floor) attempts.
    """
    cap = attempt_cap(mass_floor, fail_prob)
    out = np.empty((n, base.dim))
    attempts = np.empty(n, dtype=np.int64)
    filled = 0
    pending = 0  # rejections since the last acceptance
    seen = accepted_total = 0
    while filled < n:
        need = n - filled
        rate = (accepted_total + 1) / (seen + 2)
        chunk = int(min(max(32, math.ceil(1.25 * need / rate)), 1_000_000))
        cand = base.draw(chunk, rng)
        hit = np.flatnonzero(region.contains(cand))
        seen += chunk
        accepted_total += hit.size
        if hit.size == 0:
            pending += chunk
            if pending >= cap:
                raise AttemptsExhausted(
                    f"no acceptance within {cap} attempts (mass floor {mass_floor:g})"
                )
            continue
        take = hit[:need]
        gaps = np.diff(np.concatenate(([-1], take)))
        gaps[0] += pending
        if gaps.max() > cap:
            raise AttemptsExhausted(
                f"a draw needed more than {cap} attempts (mass floor {mass_floor:g})"
            )
        out[filled : filled + take.size] = cand[take]
        attempts[filled : filled + take.size] = gaps
        filled += take.size
        pending = chunk - 1 - take[-1]
    return out, attempts


def rejection_sample(
    base: DistributionSpec,
    region: Hypothesis,
    mass_floor: float,
    fail_prob: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """One draw of ``base`` conditioned on ``region``."""
    pts, _ = rejection_draws(base, region, 1, mass_floor, fail_prob, rng)
    return pts[0]


# -- masses -------------------------------------------------------------------


def _as_interval(h: Hypothesis) -> tuple[float, float] | None:
    if isinstance(h, Threshold1D):
        return (-math.inf, h.cut) if h.direction == "le" else (h.cut, math.inf)
    if isinstance(h, Interval1D):
        return (h.lo, h.hi)
    if isinstance(h, Intersection):
        lo, hi = -math.inf, math.inf
        for m in h.members:
            iv = _as_interval(m)
            if iv is None:
                return None
            lo, hi = max(lo, iv[0]), min(hi, iv[1])
        return (lo, hi)
    return None


def _analytic_mass(spec: DistributionSpec, iv: tuple[float, float]) -> float | None:
    lo, hi = iv
    if hi < lo:
        return 0.0
    if isinstance(spec, Gaussian):
        s = math.sqrt(spec.var[0])
        return float(ndtr((hi - spec.mean[0]) / s) - ndtr((lo - spec.mean[0]) / s))
    if isinstance(spec, UniformBox):
        a, b = spec.lo[0], spec.hi[0]
        return max(0.0, min(hi, b) - max(lo, a)) / (b - a)
    if isinstance(spec, Mixture):
        parts = [_analytic_mass(c, iv) for c in spec.components]
        if any(p is None for p in parts):
            return None
        return float(np.dot(spec.weights, parts))
    if isinstance(spec, Empirical):
        x = spec.points[:, 0]
        return float(np.mean((x >= lo) & (x <= hi)))
    if isinstance(spec, Truncated):
        riv = _as_interval(spec.region)
        if riv is None:
            return None
        den = _analytic_mass(spec.base, riv)
        num = _analytic_mass(spec.base, (max(lo, riv[0]), min(hi, riv[1])))
        if den is None or num is None or den <= 0:
            return None
        return num / den
    return None


def mass(
    spec: DistributionSpec,
    h: Hypothesis,
    mc_budget: int = DEFAULT_MC_BUDGET,
    seed: int = 0,
) -> float:
    """Probability that a draw from spec lands in h.

    Exact for 1-D Gaussian, uniform, empirical and mixture/truncation
    combinations of these against thresholds, intervals and their
    intersections; Monte Carlo with ``mc_budget`` draws otherwise.
    """
    if h.dim != spec.dim:
        raise ValueError("hypothesis and distribution disagree on dimension")
    if spec.dim == 1:
        iv = _as_interval(h)
        if iv is not None:
            m = _analytic_mass(spec, iv)
            if m is not None:
                return min(1.0, max(0.0, m))
    return float(np.mean(h.contains(sample(spec, seed, mc_budget))))


def density(spec: DistributionSpec, X) -> np.ndarray:
    """Density of spec at each row of X (Gaussian, uniform and their mixtures)."""
    X = np.asarray(X, dtype=float).reshape(-1, spec.dim)
    if isinstance(spec, Gaussian):
        z = (X - spec.mean) ** 2 / spec.var
        norm = np.prod(np.sqrt(2.0 * np.pi * spec.var))
        return np.exp(-0.5 * z.sum(axis=1)) / norm
    if isinstance(spec, UniformBox):
        inside = np.all((X >= spec.lo) & (X <= spec.hi), axis=1)
        return inside / np.prod(spec.hi - spec.lo)
    if isinstance(spec, Mixture):
        return sum(w * density(c, X) for w, c in zip(spec.weights, spec.components))
    raise ValueError(f"no closed-form density for {type(spec).__name__}")


def weighted_mass(
    target: DistributionSpec,
    proposal: DistributionSpec,
    h: Hypothesis,
    mc_budget: int = DEFAULT_MC_BUDGET,
    seed: int = 0,
) -> float:
    """Mass of h under ``target`` from draws of ``proposal``, weighted by the
    density ratio. Target mass outside the proposal's support is not seen."""
    if h.dim != target.dim or target.dim != proposal.dim:
        raise ValueError("hypothesis and distributions disagree on dimension")
    X = sample(proposal, seed, mc_budget)
    w = density(target, X) / density(proposal, X)
    return float(np.mean(w * h.contains(X)))


# -- smoothness parameters ---------------------------------------------------


@dataclass(frozen=True)
class SmoothnessParams:
    sigma: float
    q: float
    alpha: float | None = None

    def __post_init__(self):
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in (0, 1], got {self.sigma}")
        if self.q < 1.0:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")

    def to_dict(self):
        return {"sigma": self.sigma, "q": self.q, "alpha": self.alpha}


def smoothness_from_chi_square(B: float) -> SmoothnessParams:
    """(sigma, q) implied by a chi-square divergence bound B."""
    if B < 0:
        raise ValueError("chi-square bound must be non-negative")
    return SmoothnessParams(sigma=1.0 / math.sqrt(1.0 + B), q=2.0)


def smoothness_from_renyi(r: float, B: float) -> SmoothnessParams:
    """(sigma, q) implied by a Renyi divergence bound of order r > 1."""
    if r <= 1:
        raise ValueError("Renyi order must exceed 1")
    if B < 0:
        raise ValueError("divergence bound must be non-negative")
    q = r / (r - 1.0)
    return SmoothnessParams(sigma=math.exp(-B / q), q=q)


def rate_from_kl(C: float) -> Callable[[float], float]:
    """Rate function m -> exp(-3 max(1, C) / m) implied by KL(D*||D) = C."""
    if C < 0:
        raise ValueError("KL divergence must be non-negative")
    c = 3.0 * max(1.0, C)

    def rate(m: float) -> float:
        if m <= 0:
            return 0.0
        return math.exp(-c / m)

    return rate


# -- PIU instances ------------------------------------------------------------


@dataclass
class PIUInstance:
    name: str
    d_star: DistributionSpec
    h_star: Hypothesis
    p_star: DistributionSpec
    d_imperfect: DistributionSpec
    params: SmoothnessParams
    truth_visible: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.d_star.dim

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "params": self.params.to_dict(),
            "pStar": self.p_star.to_dict(),
            "dImperfect": self.d_imperfect.to_dict(),
            "meta": self.meta,
        }
        if self.truth_visible:
            out["dStar"] = self.d_star.to_dict()
            out["hStar"] = self.h_star.to_dict()
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "PIUInstance":
        p = obj["params"]
        return cls(
            name=obj.get("name", "custom"),
            d_star=spec_from_dict(obj["dStar"]),
            h_star=hypothesis_from_dict(obj["hStar"]),
            p_star=spec_from_dict(obj["pStar"]),
            d_imperfect=spec_from_dict(obj["dImperfect"]),
            params=SmoothnessParams(p["sigma"], p["q"], p.get("alpha")),
            meta=obj.get("meta", {}),
        )


def adversary(kind: str, value=None, positives: DistributionSpec | None = None) -> DistributionSpec:
    """Adversarial source for corrupt_unlabeled.

    kind is "pointmass" (value = x0), "shifted-gaussian" (value = mean, unit
    variance) or "replay-positives" (resamples the positive distribution).
    """
    if kind == "pointmass":
        return Empirical(np.atleast_2d(np.asarray(value, dtype=float)))
    if kind == "shifted-gaussian":
        mu = np.atleast_1d(np.asarray(value, dtype=float))
        return Gaussian(mu, np.ones_like(mu))
    if kind == "replay-positives":
        if positives is None:
            raise ValueError("replay-positives needs the positive distribution")
        return positives
    raise ValueError(f"unknown adversary {kind!r}")


def corrupt_unlabeled(clean: DistributionSpec, gamma: float, adv: DistributionSpec) -> Corrupted:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    return Corrupted(clean, gamma, adv)


NAMED_INSTANCES = ("remark41-a", "remark41-b", "figure2-mixture", "gauss-interval", "corrupted-list")


def _truncate(dstar: DistributionSpec, hstar: Hypothesis, alpha: float) -> Truncated:
    return Truncated(dstar, hstar, mass_floor=min(1.0, alpha / 2))


def make_named_instance(name: str, **params) -> PIUInstance:
    """Synthetic instances with known ground truth and exact (sigma, q, alpha).

    remark41-a / remark41-b share P* = Unif[-1, 1] and D = Unif[-2, 2] but
    have different true distributions and targets, so no proper 1-D
    halfspace can be accurate on both.
    """
    if name == "remark41-a":
        dstar = UniformBox([-2.0], [1.0])
        hstar = Threshold1D("ge", -1.0)
        return PIUInstance(
            name, dstar, hstar, _truncate(dstar, hstar, 2 / 3), UniformBox([-2.0], [2.0]),
            SmoothnessParams(0.75, 1.0, 2.0 / 3.0),
        )
    if name == "remark41-b":
        dstar = UniformBox([-1.0], [2.0])
        hstar = Threshold1D("le", 1.0)
        return PIUInstance(
            name, dstar, hstar, _truncate(dstar, hstar, 2 / 3), UniformBox([-2.0], [2.0]),
            SmoothnessParams(0.75, 1.0, 2.0 / 3.0),
        )
    if name == "figure2-mixture":
        dstar = Gaussian([0.0], [1.0])
        hstar = Interval1D(0.0, 1.0)
        alpha = float(ndtr(1.0) - ndtr(0.0))
        return PIUInstance(
            name, dstar, hstar, _truncate(dstar, hstar, alpha), Gaussian([0.0], [1.0]),
            SmoothnessParams(1.0, 1.0, alpha),
        )
    if name == "gauss-interval":
        dstar = Gaussian([0.0], [1.0])
        hstar = Interval1D(-1.0, 1.0)
        alpha = float(ndtr(1.0) - ndtr(-1.0))
        return PIUInstance(
            name, dstar, hstar, _truncate(dstar, hstar, alpha), Gaussian([0.0], [1.0]),
            SmoothnessParams(1.0, 1.0, alpha),
        )
    if name == "corrupted-list":
        base = make_named_instance(params.get("base", "gauss-interval"))
        gamma = float(params.get("gamma", 0.5))
        if not 0.0 < gamma <= 1.0:
            raise ValueError("corrupted-list needs gamma in (0, 1]")
        adv = params.get("adversary") or adversary("pointmass", [10.0] * base.dim)
        if isinstance(adv, (tuple, list)):
            adv = adversary(adv[0], adv[1] if len(adv) > 1 else None, base.p_star)
        # D >= gamma * D* pointwise, so D*(S) <= D(S) / gamma
        return PIUInstance(
            name, base.d_star, base.h_star, base.p_star,
            corrupt_unlabeled(base.d_imperfect, gamma, adv),
            SmoothnessParams(gamma * base.params.sigma, 1.0, base.params.alpha),
            meta={"base": base.name, "gamma": gamma},
        )
    raise ValueError(f"unknown instance {name!r}; choose from {', '.join(NAMED_INSTANCES)}")


# -- CSV sample files ----------------------------------------------------------


def write_points_csv(path, X: np.ndarray) -> None:
    """One point per row, no header, shortest round-trip decimal, LF endings."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with open(path, "w", newline="") as f:
        for row in X:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def read_points_csv(path, dim: int | None = None) -> np.ndarray:
    with open(path, newline="") as f:
        rows = [[float(v) for v in row] for row in csv.reader(f) if row]
    if not rows:
        return np.empty((0, dim or 1))
    X = np.array(rows, dtype=float)
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"expected {dim} columns, found {X.shape[1]}")
    return X


def stack(samples: Sequence[np.ndarray]) -> np.ndarray:
    return np.vstack([s for s in samples if len(s)]) if any(len(s) for s in samples) else np.empty((0, 1))
