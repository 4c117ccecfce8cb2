"""Dense multivariate polynomials over the graded-lexicographic monomial basis."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb

import numpy as np


def n_monomials(d: int, k: int) -> int:
    return comb(d + k, k)


@lru_cache(maxsize=None)
def _basis(d: int, k: int) -> tuple[tuple[int, ...], ...]:
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], left: int) -> None:
        # lexicographic on exponent vectors: larger leading exponent first
        if len(prefix) == d - 1:
            out.append(tuple(prefix) + (left,))
            return
        for e in range(left, -1, -1):
            rec(prefix + [e], left - e)

    for deg in range(k + 1):
        rec([], deg)
    return tuple(out)


def monomials_up_to(d: int, k: int) -> list[tuple[int, ...]]:
    """Exponent vectors of all monomials of total degree <= k in d variables.

    Ordered by total degree, then lexicographically (x1 before x2), so the
    constant monomial comes first: for d=2, k=2 the order is
    1, x1, x2, x1^2, x1 x2, x2^2.
    """
    if d < 1 or k < 0:
        raise ValueError(f"need d >= 1 and k >= 0, got d={d}, k={k}")
    return list(_basis(d, k))


@dataclass(frozen=True)
class BoxScaling:
    """Per-coordinate affine map sending [lo, hi] onto [-1, 1]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError("lo and hi must have the same length")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def fit(cls, *samples: np.ndarray) -> "BoxScaling":
        pts = np.vstack([np.atleast_2d(s) for s in samples if len(s)])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        # degenerate coordinates get a unit-width box
        flat = hi - lo <= 1e-12 * np.maximum(1.0, np.abs(lo))
        lo = np.where(flat, lo - 0.5, lo)
        hi = np.where(flat, hi + 0.5, hi)
        return cls(lo, hi)

    @classmethod
    def identity(cls, d: int) -> "BoxScaling":
        return cls(-np.ones(d), np.ones(d))

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (2.0 * X - (self.lo + self.hi)) / (self.hi - self.lo)

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "BoxScaling":
        return cls(np.array(obj["lo"], dtype=float), np.array(obj["hi"], dtype=float))


def _as_points(x, d: int) -> np.ndarray:
    X = np.asarray(x, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(1, -1) if d > 1 or X.shape[0] == 1 else X.reshape(-1, 1)
    if X.shape[1] != d:
        raise ValueError(f"dimension mismatch: expected {d} coordinates, got {X.shape[1]}")
    return X


def feature_map(x, k: int) -> np.ndarray:
    """Monomial values of x in basis order.

    A single point (1-D array) gives a vector; an (n, d) array gives an
    (n, binomial(d+k, k)) matrix.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim <= 1
    if single:
        X = X.reshape(1, -1)
    n, d = X.shape
    basis = _basis(d, k)
    # powers[j][e] = x_j ** e, built by repeated multiplication
    powers = np.ones((d, k + 1, n))
    for e in range(1, k + 1):
        powers[:, e, :] = powers[:, e - 1, :] * X.T
    F = np.empty((n, len(basis)))
    for col, exps in enumerate(basis):
        nz = [(j, e) for j, e in enumerate(exps) if e]
        if not nz:
            F[:, col] = 1.0
            continue
        j, e = nz[0]
        F[:, col] = powers[j, e]
        for j, e in nz[1:]:
            F[:, col] *= powers[j, e]
    return F[0] if single else F


@dataclass(frozen=True)
class Polynomial:
    """Degree-<=k polynomial in d variables with optional input rescaling.

    Evaluation first maps inputs through ``scaling`` (identity when None),
    then takes the inner product of ``coefficients`` with the feature map.
    """

    d: int
    k: int
    coefficients: np.ndarray
    scaling: BoxScaling | None = field(default=None)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).reshape(-1)
        if self.d < 1 or self.k < 0:
            raise ValueError("need d >= 1 and k >= 0")
        if c.shape[0] != n_monomials(self.d, self.k):
            raise ValueError(
                f"expected {n_monomials(self.d, self.k)} coefficients, got {c.shape[0]}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        if self.scaling is not None and self.scaling.lo.shape[0] != self.d:
            raise ValueError("scaling dimension does not match d")

    @classmethod
    def constant(cls, d: int, k: int, value: float = 1.0) -> "Polynomial":
        c = np.zeros(n_monomials(d, k))
        c[0] = value
        return cls(d, k, c)

    def features(self, X: np.ndarray) -> np.ndarray:
        X = _as_points(X, self.d)
        if self.scaling is not None:
            X = self.scaling.apply(X)
        return feature_map(X, self.k)

    def __call__(self, x) -> np.ndarray:
        if self.d == 1:
            # Horner's rule; the basis is 1, x, ..., x^k in one variable
            X = _as_points(x, 1)
            if self.scaling is not None:
                X = self.scaling.apply(X)
            return np.polynomial.polynomial.polyval(X[:, 0], self.coefficients)
        return self.features(x) @ self.coefficients

    def scaled(self, c: float) -> "Polynomial":
        return Polynomial(self.d, self.k, c * self.coefficients, self.scaling)


def eval_poly(p: Polynomial, x) -> float | np.ndarray:
    """Evaluate p at a point (returns a float) or at each row of an (n, d) array."""
    X = np.asarray(x, dtype=float)
    vals = p(X)
    if X.ndim <= 1 and (p.d > 1 or X.size == 1):
        return float(vals[0])
    return vals
