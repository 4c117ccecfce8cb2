"""Concepts as point sets: 1-D thresholds and intervals, halfspaces, PTFs and
finite intersections of these, plus VC-dimension upper bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .poly import BoxScaling, Polynomial, n_monomials


def as_points(x, d: int) -> np.ndarray:
    """Coerce a point or a batch of points to an (n, d) float array."""
    X = np.asarray(x, dtype=float)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    elif X.ndim == 1:
        X = X.reshape(-1, 1) if d == 1 else X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != d:
        raise ValueError(f"dimension mismatch: expected points in R^{d}, got shape {np.shape(x)}")
    return X


class Hypothesis:
    """Base class; ``contains`` is the vectorized membership test."""

    dim: int

    def contains(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Threshold1D(Hypothesis):
    direction: str  # "le" -> {x <= cut}, "ge" -> {x >= cut}
    cut: float

    def __post_init__(self):
        if self.direction not in ("le", "ge"):
            raise ValueError(f"direction must be 'le' or 'ge', got {self.direction!r}")
        object.__setattr__(self, "cut", float(self.cut))

    @property
    def dim(self) -> int:
        return 1

    def contains(self, X):
        x = as_points(X, 1)[:, 0]
        return x <= self.cut if self.direction == "le" else x >= self.cut

    def to_dict(self):
        return {"kind": "threshold1d", "direction": self.direction, "cut": _enc(self.cut)}

    def __str__(self):
        op = "<=" if self.direction == "le" else ">="
        return f"{{x {op} {self.cut:g}}}"


@dataclass(frozen=True)
class Interval1D(Hypothesis):
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not self.lo <= self.hi:
            raise ValueError(f"interval needs lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def dim(self) -> int:
        return 1

    def contains(self, X):
        x = as_points(X, 1)[:, 0]
        return (x >= self.lo) & (x <= self.hi)

    def to_dict(self):
        return {"kind": "interval1d", "lo": _enc(self.lo), "hi": _enc(self.hi)}

    def __str__(self):
        return f"[{self.lo:g}, {self.hi:g}]"


@dataclass(frozen=True, eq=False)
class Halfspace(Hypothesis):
    """{x : w.x >= b}."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if not np.any(w != 0):
            raise ValueError("halfspace normal must be non-zero")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def contains(self, X):
        return as_points(X, self.dim) @ self.w >= self.b

    def to_dict(self):
        return {"kind": "halfspace", "w": self.w.tolist(), "b": self.b}

    def __eq__(self, other):
        return isinstance(other, Halfspace) and np.array_equal(self.w, other.w) and self.b == other.b

    def __hash__(self):
        return hash((self.w.tobytes(), self.b))


@dataclass(frozen=True, eq=False)
class Ptf(Hypothesis):
    """{x : p(x) >= t}; ties count as members."""

    p: Polynomial
    t: float

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))

    @property
    def dim(self) -> int:
        return self.p.d

    def contains(self, X):
        return self.p(as_points(X, self.dim)) >= self.t

    def to_dict(self):
        out = {
            "kind": "ptf",
            "d": self.p.d,
            "k": self.p.k,
            "coefficients": self.p.coefficients.tolist(),
            "t": self.t,
        }
        if self.p.scaling is not None:
            out["scaling"] = self.p.scaling.to_dict()
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Ptf)
            and self.t == other.t
            and self.p.d == other.p.d
            and self.p.k == other.p.k
            and np.array_equal(self.p.coefficients, other.p.coefficients)
            and _same_scaling(self.p.scaling, other.p.scaling)
        )

    def __hash__(self):
        return hash((self.p.coefficients.tobytes(), self.t))


@dataclass(frozen=True)
class Intersection(Hypothesis):
    members: tuple

    def __post_init__(self):
        flat: list[Hypothesis] = []
        for m in self.members:
            flat.extend(m.members if isinstance(m, Intersection) else [m])
        if not flat:
            raise ValueError("an intersection needs at least one member")
        dims = {m.dim for m in flat}
        if len(dims) != 1:
            raise ValueError(f"members disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "members", tuple(flat))

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def contains(self, X):
        X = as_points(X, self.dim)
        out = np.ones(X.shape[0], dtype=bool)
        idx = np.arange(X.shape[0])
        for m in self.members:
            # only points still inside need the next member
            keep = m.contains(X[idx])
            out[idx[~keep]] = False
            idx = idx[keep]
            if idx.size == 0:
                break
        return out

    def to_dict(self):
        return {"kind": "intersection", "members": [m.to_dict() for m in self.members]}


def everything(d: int) -> Ptf:
    """The all-ones hypothesis, as the PTF 1 >= 0."""
    return Ptf(Polynomial.constant(d, 0, 1.0), 0.0)


def predict(h: Hypothesis, x) -> int | np.ndarray:
    """0/1 label of a point, or an int array of labels for a batch."""
    X = np.asarray(x, dtype=float)
    labels = h.contains(X).astype(int)
    single = X.ndim == 0 or (X.ndim == 1 and (h.dim > 1 or X.shape[0] == 1))
    return int(labels[0]) if single else labels


def intersect(hs: Sequence[Hypothesis]) -> Hypothesis:
    hs = list(hs)
    if not hs:
        raise ValueError("cannot intersect an empty list of hypotheses")
    if len(hs) == 1:
        return hs[0]
    return Intersection(tuple(hs))


# -- class descriptors and VC bounds -----------------------------------------

FAMILIES = ("threshold1d", "interval1d", "halfspace", "ptf", "intersection")


@dataclass(frozen=True)
class ClassDescriptor:
    family: str
    d: int = 1
    k: int | None = None
    m: int | None = None
    inner: "ClassDescriptor | None" = None
    directions: tuple = ("le", "ge")

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown hypothesis family {self.family!r}")
        if self.family in ("threshold1d", "interval1d") and self.d != 1:
            raise ValueError(f"{self.family} is one-dimensional")
        if self.family == "ptf" and (self.k is None or self.k < 0):
            raise ValueError("ptf needs a degree k >= 0")
        if self.family == "intersection" and (self.inner is None or not self.m or self.m < 1):
            raise ValueError("intersection needs m >= 1 and an inner class")
        if self.family == "threshold1d" and not set(self.directions) <= {"le", "ge"}:
            raise ValueError("directions must be drawn from 'le' and 'ge'")

    @classmethod
    def intersection_of(cls, m: int, inner: "ClassDescriptor") -> "ClassDescriptor":
        return cls("intersection", d=inner.d, m=m, inner=inner)


def vc_upper_bound(c: ClassDescriptor) -> int:
    if c.family in ("threshold1d", "interval1d"):
        return 2
    if c.family == "halfspace":
        return c.d + 1
    if c.family == "ptf":
        return n_monomials(c.d, c.k)
    if c.family == "intersection":
        v = vc_upper_bound(c.inner)
        if c.m == 1:
            return v
        return math.ceil(2 * c.m * v * math.log2(3 * c.m))
    raise ValueError(f"unsupported family {c.family!r}")


# -- JSON ---------------------------------------------------------------------


def _enc(v: float):
    # JSON has no infinities; sentinels are written as strings
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _dec(v) -> float:
    return float(v)


def _same_scaling(a, b) -> bool:
    if a is None or b is None:
        return a is b
    return np.array_equal(a.lo, b.lo) and np.array_equal(a.hi, b.hi)


def hypothesis_from_dict(obj: dict) -> Hypothesis:
    kind = obj.get("kind")
    if kind == "threshold1d":
        return Threshold1D(obj["direction"], _dec(obj["cut"]))
    if kind == "interval1d":
        return Interval1D(_dec(obj["lo"]), _dec(obj["hi"]))
    if kind == "halfspace":
        return Halfspace(np.array(obj["w"], dtype=float), float(obj["b"]))
    if kind == "ptf":
        scaling = BoxScaling.from_dict(obj["scaling"]) if obj.get("scaling") else None
        p = Polynomial(int(obj["d"]), int(obj["k"]), np.array(obj["coefficients"], dtype=float), scaling)
        return Ptf(p, float(obj["t"]))
    if kind == "intersection":
        return Intersection(tuple(hypothesis_from_dict(m) for m in obj["members"]))
    raise ValueError(f"unknown hypothesis kind {kind!r}")
